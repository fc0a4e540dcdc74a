//! Daily per-entity buzz and sentiment indicators.

mod kalman;
mod series;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use kalman::{kalman_smooth, LocalLevelFilter, PresetTable, Smoothing, INITIAL_VARIANCE};
pub use series::{build_series, indicator_report, series_to_json, IndicatorPoint, IndicatorSeries, Metric};

use crate::error::Result;
use crate::kb::KnowledgeBase;
use crate::model::{Medium, Sentiment, Source};
use crate::store::DocumentStore;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub entity_id: String,
    /// Distinct documents with at least one related mention.
    pub mentions: u64,
    pub positives: u64,
    pub negatives: u64,
    pub neutrals: u64,
}

/// Counts for one (day, medium); `entities` follows knowledge-base order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCounts {
    pub date: NaiveDate,
    pub medium: Medium,
    pub entities: Vec<EntityCounts>,
}

impl DailyCounts {
    pub fn empty(date: NaiveDate, medium: Medium, kb: &KnowledgeBase) -> Self {
        DailyCounts {
            date,
            medium,
            entities: kb
                .entities()
                .iter()
                .map(|e| EntityCounts { entity_id: e.id.clone(), ..Default::default() })
                .collect(),
        }
    }
}

/// One row per (day, medium) that has at least one stored document, sorted
/// by date then medium. Sentiment is counted for tweets only; a document
/// contributes the label of its first labelled related mention of the entity.
pub fn daily_counts(
    store: &DocumentStore,
    kb: &KnowledgeBase,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<Vec<DailyCounts>> {
    let docs = store.query_documents(None, from, to)?;
    let mut rows: BTreeMap<(NaiveDate, Medium), DailyCounts> = BTreeMap::new();
    for doc in &docs {
        let medium = Medium::from(doc.source);
        let row = rows
            .entry((doc.date(), medium))
            .or_insert_with(|| DailyCounts::empty(doc.date(), medium, kb));
        let mut mentions = store.mentions_for(&doc.id);
        mentions.retain(|m| m.is_related());
        mentions.sort_by_key(|m| m.span.token_start);
        let mut seen = vec![false; kb.len()];
        for m in &mentions {
            let Some(pos) = kb.position(&m.entity_id) else { continue };
            let counts = &mut row.entities[pos];
            if !seen[pos] {
                seen[pos] = true;
                counts.mentions += 1;
            }
        }
        if doc.source != Source::Twitter {
            continue;
        }
        let mut labelled = vec![false; kb.len()];
        for m in &mentions {
            let (Some(pos), Some(s)) = (kb.position(&m.entity_id), m.sentiment) else { continue };
            if std::mem::replace(&mut labelled[pos], true) {
                continue;
            }
            let counts = &mut row.entities[pos];
            match s {
                Sentiment::Positive => counts.positives += 1,
                Sentiment::Negative => counts.negatives += 1,
                Sentiment::Neutral => counts.neutrals += 1,
            }
        }
    }
    Ok(rows.into_values().collect())
}

fn shares(values: impl Iterator<Item = u64> + Clone) -> Vec<Option<f64>> {
    let total: u64 = values.clone().sum();
    values
        .map(|v| (total > 0).then(|| v as f64 / total as f64))
        .collect()
}

/// Each entity's fraction of the day's mentions in the row's medium; all
/// `None` when nobody was mentioned.
pub fn buzz_share(counts: &DailyCounts) -> Vec<Option<f64>> {
    shares(counts.entities.iter().map(|e| e.mentions))
}

pub fn buzz_count(counts: &DailyCounts) -> Vec<f64> {
    counts.entities.iter().map(|e| e.mentions as f64).collect()
}

/// ln((p + 1) / (n + 1)).
pub fn log_sentiment(positives: u64, negatives: u64) -> f64 {
    ((positives + 1) as f64).ln() - ((negatives + 1) as f64).ln()
}

pub fn log_sentiments(counts: &DailyCounts) -> Vec<f64> {
    counts
        .entities
        .iter()
        .map(|e| log_sentiment(e.positives, e.negatives))
        .collect()
}

/// Each entity's fraction of the day's negative tweets.
pub fn negatives_share(counts: &DailyCounts) -> Vec<Option<f64>> {
    shares(counts.entities.iter().map(|e| e.negatives))
}
