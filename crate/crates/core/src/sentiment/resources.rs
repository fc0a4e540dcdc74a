//! Word clusters, embeddings and the polarity lexicon, read from text files.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_to_string;
use crate::scalar::Scalar;

fn line_err(line: usize, message: impl Into<String>) -> Error {
    Error::Line { line, message: message.into() }
}

/// Word to hierarchical cluster path (a bit string).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterMap {
    map: HashMap<String, String>,
}

impl ClusterMap {
    /// Parses `bitpath<TAB>word` lines; a word's first entry wins.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (path, word) = line
                .split_once('\t')
                .ok_or_else(|| line_err(i + 1, "expected `bitpath<TAB>word`"))?;
            let word = word.split('\t').next().unwrap_or_default().trim();
            if path.is_empty() || !path.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(line_err(i + 1, format!("cluster id `{path}` is not a bit string")));
            }
            if word.is_empty() {
                return Err(line_err(i + 1, "empty word"));
            }
            map.entry(word.to_string()).or_insert_with(|| path.to_string());
        }
        Ok(ClusterMap { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Self {
        ClusterMap { map: pairs.into_iter().collect() }
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.map.get(word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Dense word vectors of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    vectors: HashMap<String, Vec<T>>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn empty(dim: usize) -> Self {
        EmbeddingTable { dim, vectors: HashMap::new() }
    }

    /// Parses the word2vec text format: a `V D` header, then `word f1 .. fD`.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut lines = raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| line_err(1, "missing `V D` header"))?;
        let mut parts = header.split_whitespace();
        let parse_usize = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        let (count, dim) = match (parse_usize(parts.next()), parse_usize(parts.next()), parts.next()) {
            (Some(v), Some(d), None) => (v, d),
            _ => return Err(line_err(1, "header must be `V D`")),
        };
        let mut vectors = HashMap::with_capacity(count);
        let mut seen = 0;
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-blank line has a field");
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(T::lit)
                        .ok_or_else(|| line_err(i + 1, format!("bad component `{f}`")))
                })
                .collect::<Result<Vec<T>>>()?;
            if values.len() != dim {
                return Err(line_err(
                    i + 1,
                    format!("`{word}` has {} components, expected {dim}", values.len()),
                ));
            }
            vectors.entry(word.to_string()).or_insert(values);
            seen += 1;
        }
        if seen != count {
            return Err(Error::invalid(
                "embedding file",
                format!("header announces {count} vectors, found {seen}"),
            ));
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn from_vectors(dim: usize, vectors: HashMap<String, Vec<T>>) -> Result<Self> {
        if let Some((w, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::invalid(
                "embedding",
                format!("`{w}` has {} components, expected {dim}", v.len()),
            ));
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Prior polarity of words; neutral words are simply absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    map: HashMap<String, i8>,
}

impl SentimentLexicon {
    /// Parses `word<TAB>{-1|1}` lines.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, polarity) = line
                .split_once('\t')
                .ok_or_else(|| line_err(i + 1, "expected `word<TAB>polarity`"))?;
            let polarity = match polarity.trim() {
                "1" | "+1" => 1,
                "-1" => -1,
                other => return Err(line_err(i + 1, format!("polarity must be -1 or 1, got `{other}`"))),
            };
            map.insert(word.trim().to_string(), polarity);
        }
        Ok(SentimentLexicon { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, i8)>>(pairs: I) -> Result<Self> {
        let map: HashMap<String, i8> = pairs.into_iter().collect();
        if let Some((w, p)) = map.iter().find(|(_, &p)| p != 1 && p != -1) {
            return Err(Error::invalid("lexicon", format!("`{w}` has polarity {p}")));
        }
        Ok(SentimentLexicon { map })
    }

    pub fn polarity(&self, word: &str) -> Option<i8> {
        self.map.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Everything besides the model needed to featurize a message.
#[derive(Debug, Clone)]
pub struct SentimentResources<T> {
    pub clusters: ClusterMap,
    pub embeddings: EmbeddingTable<T>,
    pub lexicon: SentimentLexicon,
}

impl<T: Scalar> SentimentResources<T> {
    pub fn empty() -> Self {
        SentimentResources {
            clusters: ClusterMap::default(),
            embeddings: EmbeddingTable::empty(0),
            lexicon: SentimentLexicon::default(),
        }
    }

    /// Loads whichever files are given; missing ones are empty.
    pub fn load(
        clusters: Option<&Path>,
        embeddings: Option<&Path>,
        lexicon: Option<&Path>,
    ) -> Result<Self> {
        Ok(SentimentResources {
            clusters: clusters.map(ClusterMap::load).transpose()?.unwrap_or_default(),
            embeddings: match embeddings {
                Some(p) => EmbeddingTable::load(p)?,
                None => EmbeddingTable::empty(0),
            },
            lexicon: lexicon.map(SentimentLexicon::load).transpose()?.unwrap_or_default(),
        })
    }
}
