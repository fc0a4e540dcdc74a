//! Getting documents into the store: feeds, JSONL batches and language tagging.

mod feed;
mod language;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use feed::{feed_item_to_document, link_id, parse_feed, FeedItem};
pub use language::{detect_language, trigram_counts, Detection, LanguageProfile, MIN_TRIGRAMS};

use crate::error::{Error, Result};
use crate::io::read_to_string;
use crate::model::{Document, Source};
use crate::store::{DocumentStore, PutOutcome};

/// Portuguese and English profiles shipped with the crate.
pub fn bundled_profiles() -> Vec<LanguageProfile> {
    [include_str!("../../data/profiles/pt.tsv"), include_str!("../../data/profiles/en.tsv")]
        .into_iter()
        .map(|raw| LanguageProfile::parse(raw).expect("bundled profile"))
        .collect()
}

/// Language tagging at ingest and the allow-list consulted before extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguagePolicy {
    pub profiles: Vec<LanguageProfile>,
    pub allow: Vec<String>,
}

impl Default for LanguagePolicy {
    fn default() -> Self {
        LanguagePolicy { profiles: Vec::new(), allow: vec!["pt".to_string()] }
    }
}

impl LanguagePolicy {
    /// Fills in `lang` when the document declares none and a profile matches.
    pub fn tag(&self, doc: &mut Document) {
        if doc.lang.is_some() || self.profiles.is_empty() {
            return;
        }
        doc.lang = detect_language(&doc.text, &self.profiles).lang;
    }

    /// Documents of undetermined language are let through.
    pub fn allows(&self, doc: &Document) -> bool {
        match &doc.lang {
            None => true,
            Some(l) => self.allow.iter().any(|a| a == l),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub stored: usize,
    /// Lines whose document was already stored with identical content.
    pub duplicates: usize,
    /// `(line number, message)` for every rejected line.
    pub errors: Vec<(usize, String)>,
}

/// Stores every well-formed line of a JSONL file; bad lines are reported and
/// skipped. Blank lines are ignored.
pub fn load_jsonl(store: &DocumentStore, path: &Path, policy: &LanguagePolicy) -> Result<LoadReport> {
    let raw = read_to_string(path)?;
    load_jsonl_str(store, &raw, policy)
}

pub fn load_jsonl_str(store: &DocumentStore, raw: &str, policy: &LanguagePolicy) -> Result<LoadReport> {
    let mut report = LoadReport::default();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut doc = match Document::from_json(line) {
            Ok(d) => d,
            Err(e) => {
                report.errors.push((i + 1, e.to_string()));
                continue;
            }
        };
        policy.tag(&mut doc);
        match store.put_document(doc) {
            Ok(PutOutcome::Inserted) => report.stored += 1,
            Ok(PutOutcome::Unchanged) => report.duplicates += 1,
            Err(e @ Error::Conflict(_)) => report.errors.push((i + 1, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedSpec {
    pub url: String,
    pub source: Source,
}

/// One `URL SOURCE` pair per line; `#` at line start or after whitespace
/// starts a comment (a `#` inside a URL does not).
pub fn parse_feed_list(raw: &str) -> Result<Vec<FeedSpec>> {
    let mut feeds = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        let line = match line.find(" #").or_else(|| line.find("\t#")) {
            _ if line.starts_with('#') => "",
            Some(at) => line[..at].trim(),
            None => line,
        };
        if line.is_empty() {
            continue;
        }
        let bad = |m: String| Error::Line { line: i + 1, message: m };
        let mut parts = line.split_whitespace();
        let (url, source) = match (parts.next(), parts.next(), parts.next()) {
            (Some(u), Some(s), None) => (u, s),
            _ => return Err(bad("expected `URL SOURCE`".into())),
        };
        let source: Source = source.parse().map_err(|_| bad(format!("unknown source `{source}`")))?;
        if source == Source::Twitter {
            return Err(bad("feeds carry news or blog items".into()));
        }
        feeds.push(FeedSpec { url: url.to_string(), source });
    }
    Ok(feeds)
}

pub fn load_feed_list(path: &Path) -> Result<Vec<FeedSpec>> {
    parse_feed_list(&read_to_string(path)?)
}

/// Converts and stores parsed feed items, skipping links already seen.
pub fn store_feed_items(
    store: &DocumentStore,
    items: &[FeedItem],
    source: Source,
    now: chrono::DateTime<chrono::Utc>,
    policy: &LanguagePolicy,
) -> Result<LoadReport> {
    let mut report = LoadReport::default();
    for item in items {
        if store.contains(&link_id(&item.link)) {
            report.duplicates += 1;
            continue;
        }
        let mut doc = feed_item_to_document(item, source, now);
        policy.tag(&mut doc);
        match store.put_document(doc)? {
            PutOutcome::Inserted => report.stored += 1,
            PutOutcome::Unchanged => report.duplicates += 1,
        }
    }
    Ok(report)
}
