use chrono::NaiveDate;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::kalman::{kalman_smooth, PresetTable, Smoothing};
use super::{buzz_count, buzz_share, log_sentiments, negatives_share, DailyCounts};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::model::Medium;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BuzzShare,
    BuzzCount,
    LogRatio,
    NegativesShare,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::BuzzShare, Metric::BuzzCount, Metric::LogRatio, Metric::NegativesShare];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::BuzzShare => "buzz_share",
            Metric::BuzzCount => "buzz_count",
            Metric::LogRatio => "log_ratio",
            Metric::NegativesShare => "negatives_share",
        }
    }

    pub fn is_sentiment(self) -> bool {
        matches!(self, Metric::LogRatio | Metric::NegativesShare)
    }

    /// Value of the metric for every entity of a row.
    pub fn values(self, row: &DailyCounts) -> Vec<Option<f64>> {
        match self {
            Metric::BuzzShare => buzz_share(row),
            Metric::BuzzCount => buzz_count(row).into_iter().map(Some).collect(),
            Metric::LogRatio => log_sentiments(row).into_iter().map(Some).collect(),
            Metric::NegativesShare => negatives_share(row),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown metric `{s}`")))
    }
}

/// Rounds to nine decimals and prints without trailing zeros.
pub(crate) fn format_number(v: f64) -> String {
    let s = format!("{v:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn fixed_decimals<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) if v.is_finite() => {
            let raw = RawValue::from_string(format_number(*v)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        }
        _ => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPoint {
    pub date: NaiveDate,
    #[serde(serialize_with = "fixed_decimals")]
    pub value: Option<f64>,
    #[serde(serialize_with = "fixed_decimals")]
    pub smoothed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub entity: String,
    pub medium: Medium,
    pub metric: Metric,
    pub smoothing: Smoothing,
    pub points: Vec<IndicatorPoint>,
}

/// Series of one entity over the rows of `medium`. `rows` must be sorted by
/// date, as returned by `daily_counts`.
pub fn build_series(
    rows: &[DailyCounts],
    kb: &KnowledgeBase,
    entity: &str,
    medium: Medium,
    metric: Metric,
    smoothing: Smoothing,
    presets: &PresetTable,
) -> Result<IndicatorSeries> {
    let pos = kb
        .position(entity)
        .ok_or_else(|| Error::Argument(format!("unknown entity `{entity}`")))?;
    let raw: Vec<(NaiveDate, Option<f64>)> = rows
        .iter()
        .filter(|r| r.medium == medium)
        .map(|r| (r.date, metric.values(r)[pos]))
        .collect();
    let smoothed = match presets.q_over_r(smoothing) {
        Some(q) => kalman_smooth(&raw, q)?,
        None => vec![None; raw.len()],
    };
    let points = raw
        .into_iter()
        .zip(smoothed)
        .map(|((date, value), smoothed)| IndicatorPoint { date, value, smoothed })
        .collect();
    Ok(IndicatorSeries { entity: entity.to_string(), medium, metric, smoothing, points })
}

/// Every entity and medium with buzz share and count; tweets also get both
/// sentiment metrics.
pub fn indicator_report(
    rows: &[DailyCounts],
    kb: &KnowledgeBase,
    smoothing: Smoothing,
    presets: &PresetTable,
) -> Result<Vec<IndicatorSeries>> {
    let mut out = Vec::new();
    for e in kb.entities() {
        for medium in Medium::ALL {
            for metric in Metric::ALL {
                if metric.is_sentiment() && medium != Medium::Twitter {
                    continue;
                }
                out.push(build_series(rows, kb, &e.id, medium, metric, smoothing, presets)?);
            }
        }
    }
    Ok(out)
}

/// Pretty-printed JSON with a trailing newline.
pub fn series_to_json(series: &[IndicatorSeries]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(series)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::EntityCounts;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(-1e-12), "0");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(std::f64::consts::LN_2), "0.693147181");
        assert_eq!(format_number(12.0), "12");
    }

    #[test]
    fn key_order_and_nulls() {
        let p = IndicatorPoint {
            date: NaiveDate::from_ymd_opt(2014, 3, 1).unwrap(),
            value: Some(2.0 / 3.0),
            smoothed: None,
        };
        let s = IndicatorSeries {
            entity: "e1".into(),
            medium: Medium::Blogs,
            metric: Metric::BuzzShare,
            smoothing: Smoothing::None,
            points: vec![p],
        };
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"entity":"e1","medium":"blogs","metric":"buzz_share","smoothing":"none","points":[{"date":"2014-03-01","value":0.666666667,"smoothed":null}]}"#
        );
        let back: IndicatorSeries = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back.points[0].value, Some(0.666666667));
    }

    #[test]
    fn report_shape() {
        let kb = KnowledgeBase::parse(
            r#"{"id":"a","canonical":"A","surface_forms":["A"]}
{"id":"b","canonical":"B","surface_forms":["B"]}"#,
        )
        .unwrap();
        let d = |n| NaiveDate::from_ymd_opt(2014, 3, n).unwrap();
        let row = |n, m: u64| DailyCounts {
            date: d(n),
            medium: Medium::Twitter,
            entities: vec![
                EntityCounts { entity_id: "a".into(), mentions: m, negatives: 1, ..Default::default() },
                EntityCounts { entity_id: "b".into(), mentions: 1, ..Default::default() },
            ],
        };
        let rows = vec![row(1, 1), row(3, 3)];
        let report = indicator_report(&rows, &kb, Smoothing::Reactive, &PresetTable::default()).unwrap();
        assert_eq!(report.len(), 2 * (4 + 2 + 2));
        let share = &report[0];
        assert_eq!((share.entity.as_str(), share.medium, share.metric), ("a", Medium::Twitter, Metric::BuzzShare));
        assert_eq!(share.points.len(), 2);
        assert_eq!(share.points[1].value, Some(0.75));
        assert_eq!(share.points[0].smoothed, Some(0.5));
        // one gap day (predict-only) then an update: P = 10 + 2, K = 12/13
        let expected = 0.5 + 12.0 / 13.0 * 0.25;
        assert!((share.points[1].smoothed.unwrap() - expected).abs() < 1e-12);
        let news = report.iter().find(|s| s.medium == Medium::News).unwrap();
        assert!(news.points.is_empty());
    }
}
