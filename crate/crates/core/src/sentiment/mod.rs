//! Three-way message polarity with an L2-regularized maximum-entropy model.
//!
//! A message is represented by the concatenation of
//!
//! 1. binary unigram presence over the training unigram vocabulary,
//! 2. binary cluster presence over the training cluster-id vocabulary,
//! 3. the sum of the embeddings of its known tokens,
//! 4. lexicon counts: positive tokens, negative tokens, and their difference.

mod normalize;
mod resources;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use normalize::{normalize, URL_TOKEN, USER_TOKEN};
pub use resources::{ClusterMap, EmbeddingTable, SentimentLexicon, SentimentResources};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::linear::{argmax, Multinomial, Trace, TrainConfig, TrainingMetadata};
use crate::model::Sentiment;
use crate::scalar::{softmax, Scalar};
use crate::vocab::Vocabulary;

/// Vocabularies and sizes that fix the feature layout of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub unigrams: Vocabulary,
    pub clusters: Vocabulary,
    pub embedding_dim: usize,
}

impl FeatureSpace {
    pub fn dim(&self) -> usize {
        self.unigrams.len() + self.clusters.len() + self.embedding_dim + 3
    }
}

pub fn featurize_sentiment<T: Scalar, S: AsRef<str>>(
    tokens: &[S],
    space: &FeatureSpace,
    resources: &SentimentResources<T>,
) -> SparseVector<T> {
    let nu = space.unigrams.len();
    let nc = space.clusters.len();
    let d = space.embedding_dim;

    let mut present = BTreeSet::new();
    let mut embedding = vec![T::zero(); d];
    let (mut positives, mut negatives) = (0usize, 0usize);
    for tok in tokens {
        let tok = tok.as_ref();
        if let Some(i) = space.unigrams.index_of(tok) {
            present.insert(i);
        }
        if let Some(i) = resources.clusters.get(tok).and_then(|c| space.clusters.index_of(c)) {
            present.insert(nu + i);
        }
        if let Some(v) = resources.embeddings.get(tok) {
            for (acc, &x) in embedding.iter_mut().zip(v) {
                *acc += x;
            }
        }
        match resources.lexicon.polarity(tok) {
            Some(1) => positives += 1,
            Some(-1) => negatives += 1,
            _ => {}
        }
    }

    let pos = T::from_count(positives);
    let neg = T::from_count(negatives);
    let mut entries: Vec<(usize, T)> = present.into_iter().map(|i| (i, T::one())).collect();
    entries.extend(embedding.into_iter().enumerate().map(|(j, v)| (nu + nc + j, v)));
    let lex = nu + nc + d;
    entries.extend([(lex, pos), (lex + 1, neg), (lex + 2, pos - neg)]);
    SparseVector::from_entries(space.dim(), entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentTrainConfig {
    pub train: TrainConfig,
    /// Minimum document frequency for unigram and cluster features.
    pub min_df: usize,
}

impl Default for SentimentTrainConfig {
    fn default() -> Self {
        SentimentTrainConfig { train: TrainConfig::default(), min_df: 2 }
    }
}

/// One labelled message, as read from training files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentExample {
    pub text: String,
    pub label: Sentiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SentimentModel<T> {
    /// Row order of `weights` and `biases`.
    pub labels: [Sentiment; 3],
    pub features: FeatureSpace,
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<T>,
    pub min_df: usize,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub label: Sentiment,
    /// Probabilities in label order negative, neutral, positive.
    pub probabilities: [T; 3],
}

impl<T: Scalar> SentimentModel<T> {
    pub fn train(
        labeled: &[(Vec<String>, Sentiment)],
        resources: &SentimentResources<T>,
        config: &SentimentTrainConfig,
    ) -> Result<(Self, Trace<T>)> {
        for s in Sentiment::ALL {
            if !labeled.iter().any(|(_, l)| *l == s) {
                return Err(Error::Training(format!("no `{s}` examples")));
            }
        }
        if config.min_df == 0 {
            return Err(Error::Argument("min_df must be at least 1".into()));
        }
        let token_lists: Vec<&[String]> = labeled.iter().map(|(t, _)| t.as_slice()).collect();
        let cluster_lists: Vec<Vec<&str>> = token_lists
            .iter()
            .map(|toks| toks.iter().filter_map(|t| resources.clusters.get(t)).collect())
            .collect();
        let features = FeatureSpace {
            unigrams: Vocabulary::build(&token_lists, config.min_df, usize::MAX)?,
            clusters: Vocabulary::build(&cluster_lists, config.min_df, usize::MAX)?,
            embedding_dim: resources.embeddings.dim(),
        };
        let xs: Vec<SparseVector<T>> = token_lists
            .iter()
            .map(|toks| featurize_sentiment(toks, &features, resources))
            .collect();
        let ys: Vec<usize> = labeled.iter().map(|(_, l)| l.index()).collect();
        let (clf, trace) = Multinomial::fit(&xs, &ys, 3, &config.train)?;
        let model = SentimentModel {
            labels: Sentiment::ALL,
            features,
            weights: clf.weights,
            biases: clf.biases,
            min_df: config.min_df,
            metadata: TrainingMetadata::new(&config.train, &trace, labeled.len()),
        };
        Ok((model, trace))
    }

    /// Normalizes each example text and trains.
    pub fn train_from_examples(
        examples: &[SentimentExample],
        resources: &SentimentResources<T>,
        config: &SentimentTrainConfig,
    ) -> Result<Self> {
        let labeled: Vec<(Vec<String>, Sentiment)> =
            examples.iter().map(|e| (normalize(&e.text), e.label)).collect();
        Self::train(&labeled, resources, config).map(|(m, _)| m)
    }

    pub fn check_resources(&self, resources: &SentimentResources<T>) -> Result<()> {
        if resources.embeddings.dim() != self.features.embedding_dim {
            return Err(Error::invalid(
                "sentiment resources",
                format!(
                    "embedding dimension {} does not match the model's {}",
                    resources.embeddings.dim(),
                    self.features.embedding_dim
                ),
            ));
        }
        Ok(())
    }

    pub fn scores(&self, x: &SparseVector<T>) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| x.dot_dense(w) + b)
            .collect()
    }

    pub fn predict_features(&self, x: &SparseVector<T>) -> Prediction<T> {
        let p = softmax(&self.scores(x));
        Prediction {
            label: self.labels[argmax(&p)],
            probabilities: [p[0], p[1], p[2]],
        }
    }

    pub fn predict<S: AsRef<str>>(&self, tokens: &[S], resources: &SentimentResources<T>) -> Prediction<T> {
        self.predict_features(&featurize_sentiment(tokens, &self.features, resources))
    }

    pub fn predict_text(&self, text: &str, resources: &SentimentResources<T>) -> Prediction<T> {
        self.predict(&normalize(text), resources)
    }

    pub fn evaluate(
        &self,
        labeled: &[(Vec<String>, Sentiment)],
        resources: &SentimentResources<T>,
    ) -> Result<Evaluation> {
        let gold: Vec<Sentiment> = labeled.iter().map(|(_, l)| *l).collect();
        let predicted: Vec<Sentiment> = labeled
            .iter()
            .map(|(t, _)| self.predict(t, resources).label)
            .collect();
        Evaluation::from_predictions(&gold, &predicted)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.features.dim();
        if self.labels != Sentiment::ALL {
            return Err(Error::invalid("sentiment model", "unexpected label order"));
        }
        if self.weights.len() != 3 || self.biases.len() != 3 {
            return Err(Error::invalid("sentiment model", "expected three weight rows"));
        }
        if let Some(row) = self.weights.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension { expected: dim, actual: row.len() });
        }
        let finite = self.weights.iter().flatten().chain(&self.biases).all(|w| w.is_finite());
        if !finite {
            return Err(Error::invalid("sentiment model", "non-finite weight"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&raw)?;
        model.validate()?;
        Ok(model)
    }
}

/// Accuracy, macro-F1 and confusion matrix (rows gold, columns predicted,
/// both in label order negative, neutral, positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub examples: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: [f64; 3],
    pub confusion: [[usize; 3]; 3],
}

impl Evaluation {
    /// Classes never predicted and never seen score F1 = 0 and still count
    /// in the macro average.
    pub fn from_predictions(gold: &[Sentiment], predicted: &[Sentiment]) -> Result<Self> {
        if gold.is_empty() {
            return Err(Error::Argument("cannot evaluate an empty set".into()));
        }
        if gold.len() != predicted.len() {
            return Err(Error::Argument("gold and predicted lengths differ".into()));
        }
        let mut confusion = [[0usize; 3]; 3];
        for (g, p) in gold.iter().zip(predicted) {
            confusion[g.index()][p.index()] += 1;
        }
        let correct: usize = (0..3).map(|k| confusion[k][k]).sum();
        let mut per_class_f1 = [0.0; 3];
        for (k, f1) in per_class_f1.iter_mut().enumerate() {
            let tp = confusion[k][k] as f64;
            let predicted_k: usize = (0..3).map(|g| confusion[g][k]).sum();
            let gold_k: usize = confusion[k].iter().sum();
            let precision = if predicted_k > 0 { tp / predicted_k as f64 } else { 0.0 };
            let recall = if gold_k > 0 { tp / gold_k as f64 } else { 0.0 };
            *f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
        }
        Ok(Evaluation {
            examples: gold.len(),
            accuracy: correct as f64 / gold.len() as f64,
            macro_f1: per_class_f1.iter().sum::<f64>() / 3.0,
            per_class_f1,
            confusion,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn space(uni: &[&str], clusters: &[&str], d: usize) -> FeatureSpace {
        let v = |ts: &[&str]| Vocabulary::from_terms(ts.iter().map(|t| (t.to_string(), 1)).collect(), 1);
        FeatureSpace { unigrams: v(uni), clusters: v(clusters), embedding_dim: d }
    }

    fn resources() -> SentimentResources<f64> {
        let mut vecs = HashMap::new();
        vecs.insert("a".to_string(), vec![1.0, 0.0]);
        vecs.insert("b".to_string(), vec![0.5, 2.0]);
        SentimentResources {
            clusters: ClusterMap::from_pairs([("good".to_string(), "01".to_string()), ("great".to_string(), "01".to_string())]),
            embeddings: EmbeddingTable::from_vectors(2, vecs).unwrap(),
            lexicon: SentimentLexicon::from_pairs([("good".to_string(), 1), ("bad".to_string(), -1)]).unwrap(),
        }
    }

    #[test]
    fn unknown_tokens_give_zero_vector() {
        let sp = space(&["x"], &["11"], 2);
        let v = featurize_sentiment(&toks(&["zz", "qq"]), &sp, &resources());
        assert_eq!(v.dim(), 1 + 1 + 2 + 3);
        assert_eq!(v.nnz(), 0);
    }

    #[test]
    fn lexicon_block_counts() {
        let sp = space(&[], &[], 2);
        let v = featurize_sentiment(&toks(&["good", "bad"]), &sp, &resources());
        assert_eq!(&v.to_dense()[2..], &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn embedding_block_sums() {
        let sp = space(&[], &[], 2);
        let v = featurize_sentiment(&toks(&["a", "b"]), &sp, &resources());
        assert_eq!(&v.to_dense()[..2], &[1.5, 2.0]);
    }

    #[test]
    fn presence_is_binary() {
        let sp = space(&["good"], &["01"], 0);
        let v = featurize_sentiment(&toks(&["good", "good", "great"]), &sp, &resources());
        assert_eq!(v.to_dense(), vec![1.0, 1.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn zero_model_is_uniform_and_picks_negative() {
        let sp = space(&["x"], &[], 0);
        let model = SentimentModel::<f64> {
            labels: Sentiment::ALL,
            weights: vec![vec![0.0; sp.dim()]; 3],
            features: sp,
            biases: vec![0.0; 3],
            min_df: 1,
            metadata: TrainingMetadata::new(&TrainConfig::default(), &Trace::<f64> { losses: vec![], iterations: 0 }, 0),
        };
        let p = model.predict(&toks(&["x"]), &SentimentResources::empty());
        assert_eq!(p.label, Sentiment::Negative);
        for q in p.probabilities {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_hot_examples_fit() {
        let labeled = vec![
            (toks(&["mau"]), Sentiment::Negative),
            (toks(&["mesa"]), Sentiment::Neutral),
            (toks(&["bom"]), Sentiment::Positive),
        ];
        let cfg = SentimentTrainConfig { min_df: 1, ..Default::default() };
        let (model, trace) = SentimentModel::<f64>::train(&labeled, &SentimentResources::empty(), &cfg).unwrap();
        let eval = model.evaluate(&labeled, &SentimentResources::empty()).unwrap();
        assert_eq!(eval.accuracy, 1.0);
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0]));
        // three unigrams, no clusters or embeddings, three lexicon counts
        assert_eq!(model.features.dim(), 6);
    }

    #[test]
    fn missing_class_rejected() {
        let labeled = vec![(toks(&["mau"]), Sentiment::Negative), (toks(&["bom"]), Sentiment::Positive)];
        let err = SentimentModel::<f64>::train(&labeled, &SentimentResources::empty(), &Default::default()).unwrap_err();
        assert!(err.to_string().contains("neutral"));
    }

    #[test]
    fn evaluation_edge_cases() {
        use Sentiment::*;
        let gold = [Negative, Neutral, Positive];
        let perfect = Evaluation::from_predictions(&gold, &gold).unwrap();
        assert_eq!((perfect.accuracy, perfect.macro_f1), (1.0, 1.0));
        let constant = Evaluation::from_predictions(&gold, &[Neutral; 3]).unwrap();
        assert!((constant.accuracy - 1.0 / 3.0).abs() < 1e-15);
        // neutral: P = 1/3, R = 1 -> F1 = 0.5; others 0
        assert!((constant.macro_f1 - 0.5 / 3.0).abs() < 1e-15);
        assert!(Evaluation::from_predictions(&[], &[]).is_err());
    }
}
