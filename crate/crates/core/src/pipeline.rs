//! The batch stages over a store and a date range: extract, disambiguate,
//! classify sentiment, aggregate. Each stage only reads what earlier stages
//! wrote to the store, so running them one by one equals running them all.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::indicators::{daily_counts, indicator_report, IndicatorSeries, PresetTable, Smoothing};
use crate::ingest::LanguagePolicy;
use crate::kb::KnowledgeBase;
use crate::mentions::SurfaceTrie;
use crate::model::{Document, Mention, Source};
use crate::sentiment::normalize;
use crate::store::DocumentStore;
use crate::{Disambiguator, Resources, SentimentClassifier};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageReport {
    /// Documents in range that the stage looked at.
    pub documents: usize,
    /// Documents left out by the language allow-list.
    pub skipped: usize,
    pub mentions: usize,
    /// Mention records written or rewritten.
    pub changed: usize,
}

/// Finds mentions in every allowed document of the range. Verdicts and
/// labels from earlier runs are kept for mentions that are found again.
pub fn extract(
    store: &DocumentStore,
    trie: &SurfaceTrie,
    policy: &LanguagePolicy,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<StageReport> {
    extract_documents(store, trie, policy, &store.query_documents(None, from, to)?)
}

pub fn extract_documents(
    store: &DocumentStore,
    trie: &SurfaceTrie,
    policy: &LanguagePolicy,
    docs: &[Document],
) -> Result<StageReport> {
    let mut report = StageReport::default();
    let mut batch = Vec::new();
    for doc in docs {
        report.documents += 1;
        if !policy.allows(doc) {
            report.skipped += 1;
            continue;
        }
        let previous: HashMap<_, Mention> = store
            .mentions_for(&doc.id)
            .into_iter()
            .map(|m| ((m.entity_id.clone(), m.span), m))
            .collect();
        for mut m in trie.find_mentions(doc) {
            if let Some(old) = previous.get(&(m.entity_id.clone(), m.span)) {
                m.related = old.related;
                m.sentiment = old.sentiment;
            }
            batch.push(m);
        }
    }
    report.mentions = batch.len();
    report.changed = store.put_mentions(&batch)?;
    Ok(report)
}

/// Sets the Related verdict on tweet mentions. Mentions in news and blogs
/// keep no verdict and count as related.
pub fn disambiguate(
    store: &DocumentStore,
    kb: &KnowledgeBase,
    model: &Disambiguator,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<StageReport> {
    disambiguate_documents(store, kb, model, &store.query_documents(Some(Source::Twitter), from, to)?)
}

/// Documents other than tweets are passed over.
pub fn disambiguate_documents(
    store: &DocumentStore,
    kb: &KnowledgeBase,
    model: &Disambiguator,
    docs: &[Document],
) -> Result<StageReport> {
    let mut report = StageReport::default();
    let mut batch = Vec::new();
    for doc in docs.iter().filter(|d| d.source == Source::Twitter) {
        report.documents += 1;
        for mut m in store.mentions_for(&doc.id) {
            let entity = kb
                .get(&m.entity_id)
                .ok_or_else(|| Error::invalid("mention", format!("unknown entity `{}`", m.entity_id)))?;
            let (related, _) = model.classify_mention(&m, doc, entity)?;
            m.related = Some(related);
            if !related {
                m.sentiment = None;
            }
            report.mentions += 1;
            batch.push(m);
        }
    }
    report.changed = store.put_mentions(&batch)?;
    Ok(report)
}

/// Labels every related mention of a tweet with the tweet's predicted
/// polarity.
pub fn classify_sentiment(
    store: &DocumentStore,
    model: &SentimentClassifier,
    resources: &Resources,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<StageReport> {
    classify_documents(store, model, resources, &store.query_documents(Some(Source::Twitter), from, to)?)
}

/// Documents other than tweets are passed over.
pub fn classify_documents(
    store: &DocumentStore,
    model: &SentimentClassifier,
    resources: &Resources,
    docs: &[Document],
) -> Result<StageReport> {
    model.check_resources(resources)?;
    let mut report = StageReport::default();
    let mut batch = Vec::new();
    for doc in docs.iter().filter(|d| d.source == Source::Twitter) {
        report.documents += 1;
        let mentions = store.mentions_for(&doc.id);
        if mentions.is_empty() {
            continue;
        }
        let label = model.predict(&normalize(&doc.text), resources).label;
        for mut m in mentions {
            m.sentiment = m.is_related().then_some(label);
            report.mentions += 1;
            batch.push(m);
        }
    }
    report.changed = store.put_mentions(&batch)?;
    Ok(report)
}

pub fn aggregate(
    store: &DocumentStore,
    kb: &KnowledgeBase,
    from: NaiveDate,
    to: NaiveDate,
    smoothing: Smoothing,
    presets: &PresetTable,
) -> Result<Vec<IndicatorSeries>> {
    let rows = daily_counts(store, kb, from, to)?;
    indicator_report(&rows, kb, smoothing, presets)
}

/// Models and settings for a full run. Missing models skip their stage.
pub struct PipelineConfig<'a> {
    pub kb: &'a KnowledgeBase,
    pub trie: &'a SurfaceTrie,
    pub policy: &'a LanguagePolicy,
    pub disambiguator: Option<&'a Disambiguator>,
    pub sentiment: Option<(&'a SentimentClassifier, &'a Resources)>,
    pub smoothing: Smoothing,
    pub presets: &'a PresetTable,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineReport {
    pub extract: StageReport,
    pub disambiguate: Option<StageReport>,
    pub sentiment: Option<StageReport>,
}

pub fn run(
    store: &DocumentStore,
    config: &PipelineConfig<'_>,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<(PipelineReport, Vec<IndicatorSeries>)> {
    if from > to {
        return Err(Error::Argument(format!("from {from} is after to {to}")));
    }
    let report = process_documents(store, config, &store.query_documents(None, from, to)?)?;
    let series = aggregate(store, config.kb, from, to, config.smoothing, config.presets)?;
    Ok((report, series))
}

/// Runs extraction and both classifiers over `docs` only, for documents
/// arriving one batch at a time.
pub fn process_documents(
    store: &DocumentStore,
    config: &PipelineConfig<'_>,
    docs: &[Document],
) -> Result<PipelineReport> {
    let mut report = PipelineReport {
        extract: extract_documents(store, config.trie, config.policy, docs)?,
        ..Default::default()
    };
    if let Some(model) = config.disambiguator {
        report.disambiguate = Some(disambiguate_documents(store, config.kb, model, docs)?);
    }
    if let Some((model, resources)) = config.sentiment {
        report.sentiment = Some(classify_documents(store, model, resources, docs)?);
    }
    Ok(report)
}
