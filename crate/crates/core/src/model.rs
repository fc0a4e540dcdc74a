//! Canonical record types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of outlet a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Twitter,
    News,
    Blog,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Twitter, Source::News, Source::Blog];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Twitter => "twitter",
            Source::News => "news",
            Source::Blog => "blog",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "twitter" | "tweet" | "tweets" => Ok(Source::Twitter),
            "news" => Ok(Source::News),
            "blog" | "blogs" => Ok(Source::Blog),
            other => Err(Error::invalid("source", format!("unknown source `{other}`"))),
        }
    }
}

/// Medium as reported by the indicators (`blogs` is plural there).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Twitter,
    Blogs,
    News,
}

impl Medium {
    pub const ALL: [Medium; 3] = [Medium::Twitter, Medium::Blogs, Medium::News];

    pub fn as_str(self) -> &'static str {
        match self {
            Medium::Twitter => "twitter",
            Medium::Blogs => "blogs",
            Medium::News => "news",
        }
    }
}

impl From<Source> for Medium {
    fn from(s: Source) -> Self {
        match s {
            Source::Twitter => Medium::Twitter,
            Source::News => Medium::News,
            Source::Blog => Medium::Blogs,
        }
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Medium {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::from_str(s).map(Medium::from)
    }
}

/// RFC 3339 timestamps, normalized to UTC with whole seconds.
pub mod timestamp {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn parse(s: &str) -> Result<DateTime<Utc>> {
        let parsed = DateTime::parse_from_rfc3339(s.trim())
            .map_err(|e| Error::invalid("timestamp", format!("`{s}`: {e}")))?;
        Ok(truncate(parsed.with_timezone(&Utc)))
    }

    pub fn format(ts: &DateTime<Utc>) -> String {
        ts.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn truncate(ts: DateTime<Utc>) -> DateTime<Utc> {
        ts.with_nanosecond(0).expect("zero nanoseconds is valid")
    }

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// One ingested text item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: Source,
    #[serde(with = "timestamp")]
    pub timestamp: DateTime<Utc>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        source: Source,
        timestamp: DateTime<Utc>,
        text: impl Into<String>,
    ) -> Self {
        Document {
            id: id.into(),
            source,
            timestamp: timestamp::truncate(timestamp),
            text: text.into(),
            author: None,
            lang: None,
            url: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::invalid("document", "empty id"));
        }
        if self.text.trim().is_empty() {
            return Err(Error::invalid("document", format!("`{}` has empty text", self.id)));
        }
        Ok(())
    }

    /// UTC calendar day used as the indicator reference period.
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    /// Parses one JSON object and checks the document invariants.
    pub fn from_json(line: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(line)?;
        doc.validate()?;
        Ok(doc)
    }
}

/// Polarity label. The declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" => Ok(Sentiment::Negative),
            "neutral" => Ok(Sentiment::Neutral),
            "positive" => Ok(Sentiment::Positive),
            other => Err(Error::invalid("sentiment label", format!("`{other}`"))),
        }
    }
}

/// Token span (half-open) and the byte range it covers in the document text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub token_start: usize,
    pub token_end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
}

impl Span {
    pub fn overlaps(&self, other: &Span) -> bool {
        self.token_start < other.token_end && other.token_start < self.token_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub entity_id: String,
    pub span: Span,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub related: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Sentiment>,
}

impl Mention {
    /// A mention without a disambiguation verdict counts as related.
    pub fn is_related(&self) -> bool {
        self.related.unwrap_or(true)
    }

    pub(crate) fn key(&self) -> (String, String, usize) {
        (self.doc_id.clone(), self.entity_id.clone(), self.span.token_start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Sentiment,
    Disambig,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sentiment => "sentiment",
            Task::Disambig => "disambig",
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Task::Sentiment => &["negative", "neutral", "positive"],
            Task::Disambig => &["related", "unrelated"],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentiment" => Ok(Task::Sentiment),
            "disambig" => Ok(Task::Disambig),
            other => Err(Error::invalid("task", format!("unknown task `{other}`"))),
        }
    }
}

/// A human label for a document (sentiment) or a (document, entity) pair (disambig).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<String>,
    pub task: Task,
    pub label: String,
    pub annotator: String,
    #[serde(with = "timestamp")]
    pub timestamp: DateTime<Utc>,
}

/// Uniqueness key of an annotation.
pub type AnnotationKey = (String, Option<String>, Task, String);

impl Annotation {
    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::invalid("annotation", "empty doc_id"));
        }
        if self.annotator.trim().is_empty() {
            return Err(Error::invalid("annotation", "empty annotator"));
        }
        if !self.task.labels().contains(&self.label.as_str()) {
            return Err(Error::invalid(
                "annotation",
                format!(
                    "label `{}` not in {:?} for task {}",
                    self.label,
                    self.task.labels(),
                    self.task
                ),
            ));
        }
        match (self.task, &self.entity_id) {
            (Task::Disambig, None) => Err(Error::invalid(
                "annotation",
                "disambig annotations require entity_id",
            )),
            _ => Ok(()),
        }
    }

    pub fn key(&self) -> AnnotationKey {
        (
            self.doc_id.clone(),
            self.entity_id.clone(),
            self.task,
            self.annotator.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Document {
        Document::from_json(
            r#"{"id":"d1","source":"twitter","timestamp":"2014-03-01T13:20:05.250+01:00","text":"ola"}"#,
        )
        .unwrap()
    }

    #[test]
    fn timestamps_normalize_to_utc_seconds() {
        let d = sample();
        assert_eq!(timestamp::format(&d.timestamp), "2014-03-01T12:20:05Z");
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(
            json,
            r#"{"id":"d1","source":"twitter","timestamp":"2014-03-01T12:20:05Z","text":"ola"}"#
        );
        assert_eq!(Document::from_json(&json).unwrap(), d);
    }

    #[test]
    fn document_invariants() {
        assert!(Document::from_json(r#"{"id":"","source":"news","timestamp":"2014-03-01T00:00:00Z","text":"x"}"#).is_err());
        assert!(Document::from_json(r#"{"id":"a","source":"news","timestamp":"2014-03-01T00:00:00Z","text":"  "}"#).is_err());
        assert!(Document::from_json(r#"{"id":"a","source":"news","timestamp":"yesterday","text":"x"}"#).is_err());
        assert!(Document::from_json(r#"{"id":"a","source":"radio","timestamp":"2014-03-01T00:00:00Z","text":"x"}"#).is_err());
    }

    #[test]
    fn sentiment_order_is_tie_break_order() {
        assert!(Sentiment::Negative < Sentiment::Neutral);
        assert!(Sentiment::Neutral < Sentiment::Positive);
        for s in Sentiment::ALL {
            assert_eq!(Sentiment::from_index(s.index()), Some(s));
            assert_eq!(s.as_str().parse::<Sentiment>().unwrap(), s);
        }
    }

    #[test]
    fn annotation_labels_checked_per_task() {
        let mut a = Annotation {
            doc_id: "d1".into(),
            entity_id: None,
            task: Task::Sentiment,
            label: "positive".into(),
            annotator: "ana".into(),
            timestamp: Utc::now(),
        };
        assert!(a.validate().is_ok());
        a.label = "great".into();
        assert!(a.validate().is_err());
        a.task = Task::Disambig;
        a.label = "related".into();
        assert!(a.validate().is_err(), "entity required");
        a.entity_id = Some("e1".into());
        assert!(a.validate().is_ok());
    }

    #[test]
    fn medium_from_source() {
        assert_eq!(Medium::from(Source::Blog).as_str(), "blogs");
        assert_eq!("blogs".parse::<Medium>().unwrap(), Medium::Blogs);
    }
}
