//! Related/Unrelated classification of (entity, tweet) mentions.
//!
//! Features for one mention are the TF-IDF vector of the document, the
//! cosine between the document and the entity profile, and a flag telling
//! whether the matched surface is the canonical name. The weight vector has
//! `|V| + 3` entries: `|V|` TF-IDF weights, the two scalar features, bias.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::kb::{Entity, KnowledgeBase};
use crate::linear::{BinaryLogistic, Trace, TrainConfig, TrainingMetadata};
use crate::mentions::tokenize;
use crate::model::{Document, Mention};
use crate::scalar::{sigmoid, Scalar};
use crate::vocab::Vocabulary;

/// Lowercased tokens used for every TF-IDF computation.
pub fn terms(text: &str) -> Vec<String> {
    tokenize(text).terms()
}

/// Raw term counts times smoothed IDF, L2-normalized. Out-of-vocabulary
/// terms are ignored.
pub fn tfidf_vector<T: Scalar, S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector<T> {
    let entries = tokens
        .iter()
        .filter_map(|t| vocab.index_of(t.as_ref()))
        .map(|i| (i, T::lit(vocab.idf(i))))
        .collect();
    SparseVector::from_entries(vocab.len(), entries).normalized()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSimilarity<T> {
    pub value: T,
    /// False when the entity has no profile text; `value` is then zero.
    pub has_profile: bool,
}

pub fn profile_similarity<T: Scalar, S: AsRef<str>>(
    tweet_tokens: &[S],
    entity: &Entity,
    vocab: &Vocabulary,
) -> ProfileSimilarity<T> {
    match entity.profile.as_deref() {
        Some(profile) => {
            let tweet = tfidf_vector::<T, _>(tweet_tokens, vocab);
            let prof = tfidf_vector::<T, _>(&terms(profile), vocab);
            ProfileSimilarity { value: tweet.cosine(&prof), has_profile: true }
        }
        None => ProfileSimilarity { value: T::zero(), has_profile: false },
    }
}

fn is_canonical(surface: &str, entity: &Entity) -> bool {
    !surface.is_empty() && terms(surface) == terms(&entity.canonical_name)
}

/// Features from already-tokenized document text and the matched surface.
pub fn featurize_terms<T: Scalar, S: AsRef<str>>(
    doc_terms: &[S],
    surface: &str,
    entity: &Entity,
    vocab: &Vocabulary,
) -> SparseVector<T> {
    let tfidf = tfidf_vector::<T, _>(doc_terms, vocab);
    let similarity = profile_similarity::<T, _>(doc_terms, entity, vocab).value;
    let canonical = if is_canonical(surface, entity) { T::one() } else { T::zero() };
    tfidf.concat_dense(&[similarity, canonical])
}

pub fn featurize<T: Scalar>(
    mention: &Mention,
    doc: &Document,
    entity: &Entity,
    vocab: &Vocabulary,
) -> SparseVector<T> {
    featurize_terms(&terms(&doc.text), &mention.surface, entity, vocab)
}

/// One labelled (document, entity) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisambigExample {
    pub text: String,
    pub entity_id: String,
    /// Matched surface form, if the entity was found in the text.
    #[serde(default)]
    pub surface: Option<String>,
    pub related: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyConfig {
    pub min_df: usize,
    pub max_terms: usize,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        VocabularyConfig { min_df: 2, max_terms: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DisambigModel<T> {
    pub vocabulary: Vocabulary,
    /// `|V|` TF-IDF weights, profile similarity, canonical flag, bias.
    pub weights: Vec<T>,
    pub metadata: TrainingMetadata,
}

impl<T: Scalar> DisambigModel<T> {
    pub fn feature_dim(&self) -> usize {
        self.vocabulary.len() + 2
    }

    /// Fits the classifier on features built against `vocabulary`.
    pub fn train(
        vocabulary: Vocabulary,
        labeled: &[(SparseVector<T>, bool)],
        config: &TrainConfig,
    ) -> Result<(Self, Trace<T>)> {
        let dim = vocabulary.len() + 2;
        if let Some((x, _)) = labeled.iter().find(|(x, _)| x.dim() != dim) {
            return Err(Error::Dimension { expected: dim, actual: x.dim() });
        }
        let (features, labels): (Vec<_>, Vec<_>) = labeled.iter().cloned().unzip();
        let (clf, trace) = BinaryLogistic::fit(&features, &labels, config)?;
        let mut weights = clf.weights;
        weights.push(clf.bias);
        let metadata = TrainingMetadata::new(config, &trace, labeled.len());
        Ok((DisambigModel { vocabulary, weights, metadata }, trace))
    }

    /// Builds the vocabulary from the example texts, featurizes and trains.
    pub fn train_from_examples(
        kb: &KnowledgeBase,
        examples: &[DisambigExample],
        vocab_config: VocabularyConfig,
        config: &TrainConfig,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Training("no disambiguation examples".into()));
        }
        let doc_terms: Vec<Vec<String>> = examples.iter().map(|e| terms(&e.text)).collect();
        let vocabulary = Vocabulary::build(&doc_terms, vocab_config.min_df, vocab_config.max_terms)?;
        let mut labeled = Vec::with_capacity(examples.len());
        for (ex, toks) in examples.iter().zip(&doc_terms) {
            let entity = kb
                .get(&ex.entity_id)
                .ok_or_else(|| Error::invalid("example", format!("unknown entity `{}`", ex.entity_id)))?;
            let surface = ex.surface.as_deref().unwrap_or("");
            labeled.push((featurize_terms(toks, surface, entity, &vocabulary), ex.related));
        }
        Self::train(vocabulary, &labeled, config).map(|(m, _)| m)
    }

    pub fn decision(&self, features: &SparseVector<T>) -> Result<T> {
        if features.dim() != self.feature_dim() || self.weights.len() != self.feature_dim() + 1 {
            return Err(Error::Dimension { expected: self.feature_dim(), actual: features.dim() });
        }
        let (w, b) = self.weights.split_at(self.feature_dim());
        Ok(features.dot_dense(w) + b[0])
    }

    /// Probability of Related; Related iff the probability is at least 0.5.
    pub fn classify_related(&self, features: &SparseVector<T>) -> Result<(bool, T)> {
        let p = sigmoid(self.decision(features)?);
        Ok((p >= T::lit(0.5), p))
    }

    pub fn classify_mention(
        &self,
        mention: &Mention,
        doc: &Document,
        entity: &Entity,
    ) -> Result<(bool, T)> {
        self.classify_related(&featurize(mention, doc, entity, &self.vocabulary))
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
        if model.weights.len() != model.vocabulary.len() + 3 {
            return Err(Error::invalid(
                "disambiguation model",
                format!("{} weights for {} terms", model.weights.len(), model.vocabulary.len()),
            ));
        }
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("disambiguation model", "non-finite weight"));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(terms: &[(&str, usize)], n: usize) -> Vocabulary {
        Vocabulary::from_terms(terms.iter().map(|&(t, d)| (t.to_string(), d)).collect(), n)
    }

    fn entity(profile: Option<&str>) -> Entity {
        Entity {
            id: "e1".into(),
            canonical_name: "David Cameron".into(),
            surface_forms: vec!["David Cameron".into(), "Cameron".into()],
            profession: None,
            party: None,
            profile: profile.map(str::to_string),
        }
    }

    #[test]
    fn out_of_vocabulary_is_zero() {
        let v = vocab(&[("a", 1)], 1);
        let x: SparseVector<f64> = tfidf_vector(&["zz", "yy"], &v);
        assert_eq!(x.nnz(), 0);
        assert_eq!(x.dim(), 1);
    }

    #[test]
    fn single_term_is_unit() {
        let v = vocab(&[("a", 1)], 1);
        let x: SparseVector<f64> = tfidf_vector(&["a"], &v);
        assert_eq!(x.entries(), &[(0, 1.0)]);
    }

    #[test]
    fn two_term_hand_computed() {
        // pre-norm weights (ln(3/3)+1, ln(3/2)+1) = (1, 1.4054651081081644)
        let v = vocab(&[("a", 2), ("b", 1)], 2);
        let x: SparseVector<f64> = tfidf_vector(&["a", "b"], &v);
        let (wa, wb) = (1.0f64, 1.4054651081081644f64);
        let n = (wa * wa + wb * wb).sqrt();
        assert!((x.get(0) - wa / n).abs() < 1e-12);
        assert!((x.get(1) - wb / n).abs() < 1e-12);
        assert!((x.get(0) - 0.5797386715).abs() < 1e-9);
        assert!((x.get(1) - 0.8148024747).abs() < 1e-9);
    }

    #[test]
    fn similarity_self_and_disjoint() {
        let v = vocab(&[("prime", 1), ("minister", 1), ("film", 1), ("director", 1)], 4);
        let e = entity(Some("prime minister"));
        let same: ProfileSimilarity<f64> = profile_similarity(&["prime", "minister"], &e, &v);
        assert!(same.has_profile);
        assert!((same.value - 1.0).abs() < 1e-12);
        let disjoint: ProfileSimilarity<f64> = profile_similarity(&["film", "director"], &e, &v);
        assert_eq!(disjoint.value, 0.0);
        let none: ProfileSimilarity<f64> = profile_similarity(&["prime"], &entity(None), &v);
        assert!(!none.has_profile);
        assert_eq!(none.value, 0.0);
    }

    #[test]
    fn featurize_layout() {
        let v = vocab(&[("prime", 1), ("minister", 1)], 2);
        let e = entity(Some("prime minister"));
        let x: SparseVector<f64> = featurize_terms(&["hello"], "Cameron", &e, &v);
        assert_eq!(x.dim(), 4);
        assert_eq!(x.nnz(), 0);
        let y: SparseVector<f64> = featurize_terms(&["prime"], "david  CAMERON", &e, &v);
        assert_eq!(y.get(3), 1.0);
        assert!(y.get(2) > 0.0);
    }

    #[test]
    fn zero_weights_sit_on_the_boundary() {
        let v = vocab(&[("a", 1)], 1);
        let model = DisambigModel::<f64> {
            vocabulary: v,
            weights: vec![0.0; 4],
            metadata: TrainingMetadata::new(&TrainConfig::default(), &Trace::<f64> { losses: vec![], iterations: 0 }, 0),
        };
        let (related, p) = model.classify_related(&SparseVector::zeros(3)).unwrap();
        assert_eq!(p, 0.5);
        assert!(related);
        assert!(matches!(
            model.classify_related(&SparseVector::zeros(2)),
            Err(Error::Dimension { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn large_margin_saturates() {
        let model = DisambigModel::<f64> {
            vocabulary: vocab(&[], 1),
            weights: vec![0.0, 0.0, 1e6],
            metadata: TrainingMetadata::new(&TrainConfig::default(), &Trace::<f64> { losses: vec![], iterations: 0 }, 0),
        };
        let (related, p) = model.classify_related(&SparseVector::zeros(2)).unwrap();
        assert!(related);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_points_fit_exactly() {
        let v = vocab(&[], 1);
        let labeled = vec![
            (SparseVector::from_dense(&[1.0f64, 0.0]), true),
            (SparseVector::from_dense(&[0.0, 1.0]), false),
        ];
        let (model, _) = DisambigModel::train(v, &labeled, &TrainConfig::default()).unwrap();
        for (x, y) in &labeled {
            assert_eq!(model.classify_related(x).unwrap().0, *y);
        }
        assert_eq!(model.weights.len(), 3);
    }
}
