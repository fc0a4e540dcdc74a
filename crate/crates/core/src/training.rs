//! Training sets drawn from the annotation log, the seeded held-out split
//! and the metrics reported after a retrain.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disambig::{DisambigExample, VocabularyConfig};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::linear::TrainConfig;
use crate::model::{Annotation, Sentiment, Task};
use crate::sentiment::{normalize, Evaluation, SentimentExample, SentimentTrainConfig};
use crate::store::DocumentStore;
use crate::{Disambiguator, Resources, SentimentClassifier};

pub const DEFAULT_HOLDOUT: f64 = 0.2;

fn annotations_for(store: &DocumentStore, task: Task) -> Vec<Annotation> {
    let mut out: Vec<Annotation> = store.annotations().into_iter().filter(|a| a.task == task).collect();
    out.sort_by_key(|a| a.key());
    out
}

fn document_text(store: &DocumentStore, a: &Annotation) -> Result<String> {
    store
        .get(&a.doc_id)
        .map(|d| d.text)
        .ok_or_else(|| Error::invalid("annotation", format!("document `{}` is not in the store", a.doc_id)))
}

/// One example per sentiment annotation, ordered by annotation key so the
/// result does not depend on submission order.
pub fn sentiment_examples(store: &DocumentStore) -> Result<Vec<SentimentExample>> {
    annotations_for(store, Task::Sentiment)
        .iter()
        .map(|a| {
            Ok(SentimentExample {
                text: document_text(store, a)?,
                label: a.label.parse()?,
            })
        })
        .collect()
}

/// One example per disambiguation annotation. The surface form is the first
/// stored mention of the entity in the document, if any.
pub fn disambig_examples(store: &DocumentStore) -> Result<Vec<DisambigExample>> {
    annotations_for(store, Task::Disambig)
        .iter()
        .map(|a| {
            let entity_id = a.entity_id.clone().unwrap_or_default();
            let surface = store
                .mentions_for(&a.doc_id)
                .into_iter()
                .filter(|m| m.entity_id == entity_id)
                .min_by_key(|m| m.span.token_start)
                .map(|m| m.surface);
            Ok(DisambigExample {
                text: document_text(store, a)?,
                entity_id,
                surface,
                related: a.label == "related",
            })
        })
        .collect()
}

/// Example counts for every label of the task, zeros included.
pub fn class_counts(task: Task, labels: impl IntoIterator<Item = String>) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = task.labels().iter().map(|l| (l.to_string(), 0)).collect();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts
}

/// Splits indices into (train, test), holding out `fraction` of each class
/// rounded down. Both lists come back sorted.
pub fn stratified_split<L: Ord + Copy>(labels: &[L], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(*l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut idx) in by_class {
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64) * fraction).floor() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Trains on the training part of the split and scores the held-out part.
/// The held-out metrics are absent when the split leaves nothing to test.
pub fn train_sentiment_holdout(
    examples: &[SentimentExample],
    resources: &Resources,
    config: &SentimentTrainConfig,
    holdout: f64,
) -> Result<(SentimentClassifier, Option<Evaluation>)> {
    let labels: Vec<Sentiment> = examples.iter().map(|e| e.label).collect();
    let (train, test) = stratified_split(&labels, holdout, config.train.seed);
    let model = SentimentClassifier::train_from_examples(&pick(examples, &train), resources, config)?;
    if test.is_empty() {
        return Ok((model, None));
    }
    let held: Vec<(Vec<String>, Sentiment)> =
        test.iter().map(|&i| (normalize(&examples[i].text), examples[i].label)).collect();
    let eval = model.evaluate(&held, resources)?;
    Ok((model, Some(eval)))
}

/// Scores for the Related class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvaluation {
    pub examples: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `[[tp, fn], [fp, tn]]` with Related as the positive class.
    pub confusion: [[usize; 2]; 2],
}

impl BinaryEvaluation {
    pub fn from_predictions(gold: &[bool], predicted: &[bool]) -> Result<Self> {
        if gold.is_empty() {
            return Err(Error::Argument("cannot evaluate an empty set".into()));
        }
        if gold.len() != predicted.len() {
            return Err(Error::Argument("gold and predicted lengths differ".into()));
        }
        let mut c = [[0usize; 2]; 2];
        for (&g, &p) in gold.iter().zip(predicted) {
            c[usize::from(!g)][usize::from(!p)] += 1;
        }
        let (tp, fn_, fp) = (c[0][0] as f64, c[0][1] as f64, c[1][0] as f64);
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Ok(BinaryEvaluation {
            examples: gold.len(),
            accuracy: (c[0][0] + c[1][1]) as f64 / gold.len() as f64,
            precision,
            recall,
            f1,
            confusion: c,
        })
    }
}

pub fn evaluate_disambig(model: &Disambiguator, kb: &KnowledgeBase, examples: &[DisambigExample]) -> Result<BinaryEvaluation> {
    let mut predicted = Vec::with_capacity(examples.len());
    for ex in examples {
        let entity = kb
            .get(&ex.entity_id)
            .ok_or_else(|| Error::invalid("example", format!("unknown entity `{}`", ex.entity_id)))?;
        let x = crate::disambig::featurize_terms(
            &crate::disambig::terms(&ex.text),
            ex.surface.as_deref().unwrap_or(""),
            entity,
            &model.vocabulary,
        );
        predicted.push(model.classify_related(&x)?.0);
    }
    let gold: Vec<bool> = examples.iter().map(|e| e.related).collect();
    BinaryEvaluation::from_predictions(&gold, &predicted)
}

pub fn train_disambig_holdout(
    kb: &KnowledgeBase,
    examples: &[DisambigExample],
    vocab_config: VocabularyConfig,
    config: &TrainConfig,
    holdout: f64,
) -> Result<(Disambiguator, Option<BinaryEvaluation>)> {
    let labels: Vec<bool> = examples.iter().map(|e| e.related).collect();
    for (label, name) in [(true, "related"), (false, "unrelated")] {
        if !labels.contains(&label) {
            return Err(Error::Training(format!("no `{name}` examples")));
        }
    }
    let (train, test) = stratified_split(&labels, holdout, config.seed);
    let model = Disambiguator::train_from_examples(kb, &pick(examples, &train), vocab_config, config)?;
    if test.is_empty() {
        return Ok((model, None));
    }
    let eval = evaluate_disambig(&model, kb, &pick(examples, &test))?;
    Ok((model, Some(eval)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<u8> = (0..50).map(|i| (i % 3) as u8).collect();
        let (train, test) = stratified_split(&labels, 0.2, 42);
        assert_eq!(train.len() + test.len(), 50);
        for k in 0..3u8 {
            let n = labels.iter().filter(|&&l| l == k).count();
            let t = test.iter().filter(|&&i| labels[i] == k).count();
            assert_eq!(t, n / 5);
        }
        assert_eq!(stratified_split(&labels, 0.2, 42), (train.clone(), test.clone()));
        assert_ne!(stratified_split(&labels, 0.2, 7).1, test);
    }

    #[test]
    fn singleton_class_stays_in_training() {
        let (train, test) = stratified_split(&[1, 0, 0, 0, 0, 0], 0.2, 1);
        assert!(train.contains(&0));
        assert_eq!(test.len(), 1);
    }

    #[test]
    fn binary_metrics_by_hand() {
        let gold = [true, true, true, false, false];
        let pred = [true, true, false, true, false];
        let e = BinaryEvaluation::from_predictions(&gold, &pred).unwrap();
        assert_eq!(e.confusion, [[2, 1], [1, 1]]);
        assert!((e.accuracy - 0.6).abs() < 1e-12);
        assert!((e.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((e.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((e.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(BinaryEvaluation::from_predictions(&[], &[]).is_err());
    }

    #[test]
    fn counts_include_missing_labels() {
        let c = class_counts(Task::Sentiment, ["positive".to_string(), "positive".to_string()]);
        assert_eq!(c["positive"], 2);
        assert_eq!(c["neutral"], 0);
        assert_eq!(c.len(), 3);
    }
}
