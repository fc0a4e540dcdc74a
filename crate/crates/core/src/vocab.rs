use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terms kept after document-frequency selection, in a fixed feature order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    n_docs: usize,
    terms: Vec<(String, usize)>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let (terms, df) = r.terms.into_iter().unzip();
        Vocabulary::from_parts(terms, df, r.n_docs)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            n_docs: v.n_docs,
            terms: v.terms.into_iter().zip(v.df).collect(),
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, df: Vec<usize>, n_docs: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, df, n_docs, index }
    }

    /// Keeps terms with document frequency `>= min_df`, ranked by frequency
    /// (ties broken lexicographically) and truncated to `max_terms`.
    pub fn build<D, S>(docs: &[D], min_df: usize, max_terms: usize) -> Result<Self>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        if docs.is_empty() {
            return Err(Error::Argument("cannot build a vocabulary from an empty corpus".into()));
        }
        if min_df == 0 || max_terms == 0 {
            return Err(Error::Argument("min_df and max_terms must be at least 1".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            let distinct: HashSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
            for term in distinct {
                *counts.entry(term).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> =
            counts.into_iter().filter(|&(_, df)| df >= min_df).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_terms);
        let (terms, df) = ranked.into_iter().map(|(t, d)| (t.to_string(), d)).unzip();
        Ok(Self::from_parts(terms, df, docs.len()))
    }

    /// Vocabulary with explicit frequencies, e.g. for synthetic feature spaces.
    pub fn from_terms(terms: Vec<(String, usize)>, n_docs: usize) -> Self {
        let (terms, df) = terms.into_iter().unzip();
        Self::from_parts(terms, df, n_docs)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, index: usize) -> usize {
        self.df[index]
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[index] as f64)).ln() + 1.0
    }
}
