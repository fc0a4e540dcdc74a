//! Character-trigram language identification.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_to_string;

/// Profiles with fewer trigrams than this are rejected.
pub const MIN_TRIGRAMS: usize = 50;

/// Trigram counts of `text`. Each word is lowercased and padded with one
/// space on either side, so `"ab"` yields `" ab"` and `"ab "`.
pub fn trigram_counts(text: &str) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for word in text
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
    {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(word.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(' '))
            .collect();
        for w in padded.windows(3) {
            *counts.entry(w.iter().collect::<String>()).or_default() += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageProfile {
    pub lang: String,
    /// Relative frequencies; sorted for stable output.
    pub trigram_weights: BTreeMap<String, f64>,
}

fn valid_lang(lang: &str) -> bool {
    lang.len() == 2 && lang.bytes().all(|b| b.is_ascii_lowercase())
}

impl LanguageProfile {
    pub fn new(lang: &str, trigram_weights: BTreeMap<String, f64>) -> Result<Self> {
        if !valid_lang(lang) {
            return Err(Error::invalid("language profile", format!("`{lang}` is not a two-letter code")));
        }
        if trigram_weights.len() < MIN_TRIGRAMS {
            return Err(Error::invalid(
                "language profile",
                format!("`{lang}` has {} trigrams, at least {MIN_TRIGRAMS} needed", trigram_weights.len()),
            ));
        }
        if let Some((t, w)) = trigram_weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid("language profile", format!("trigram `{t}` has weight {w}")));
        }
        Ok(LanguageProfile { lang: lang.to_string(), trigram_weights })
    }

    /// Profile whose weights are the relative trigram frequencies of `text`.
    pub fn from_text(lang: &str, text: &str) -> Result<Self> {
        let counts = trigram_counts(text);
        let total: usize = counts.values().sum();
        let weights = counts
            .into_iter()
            .map(|(t, c)| (t, c as f64 / total.max(1) as f64))
            .collect();
        Self::new(lang, weights)
    }

    /// Reads `#lang: xx` followed by `trigram<TAB>weight` lines. Trigrams
    /// may begin or end with a space, so lines are not trimmed.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut lines = raw.lines().enumerate();
        let lang = lines
            .next()
            .and_then(|(_, l)| l.trim().strip_prefix("#lang:"))
            .map(str::trim)
            .ok_or(Error::Line { line: 1, message: "expected `#lang: xx` header".into() })?
            .to_string();
        let mut weights = BTreeMap::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Line { line: i + 1, message: m.to_string() };
            let (tri, w) = line.rsplit_once('\t').ok_or_else(|| bad("expected `trigram<TAB>weight`"))?;
            if tri.chars().count() != 3 {
                return Err(bad("trigram must have three characters"));
            }
            let w: f64 = w.trim().parse().map_err(|_| bad("weight is not a number"))?;
            weights.insert(tri.to_string(), w);
        }
        Self::new(&lang, weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#lang: {}\n", self.lang);
        for (t, w) in &self.trigram_weights {
            let _ = writeln!(out, "{t}\t{w}");
        }
        out
    }

    fn norm(&self) -> f64 {
        self.trigram_weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// `None` when the text has no trigrams or matches no profile at all.
    pub lang: Option<String>,
    pub confidence: f64,
}

/// Picks the profile with the highest cosine similarity to the text's
/// trigram frequencies; the earlier profile wins ties.
pub fn detect_language(text: &str, profiles: &[LanguageProfile]) -> Detection {
    let none = Detection { lang: None, confidence: 0.0 };
    if text.chars().count() < 3 {
        return none;
    }
    let counts = trigram_counts(text);
    let text_norm = counts.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    if text_norm == 0.0 {
        return none;
    }
    let mut best = none;
    for p in profiles {
        let pn = p.norm();
        if pn == 0.0 {
            continue;
        }
        let dot: f64 = counts
            .iter()
            .filter_map(|(t, &c)| p.trigram_weights.get(t).map(|w| w * c as f64))
            .sum();
        let cos = (dot / (text_norm * pn)).clamp(0.0, 1.0);
        if cos > best.confidence {
            best = Detection { lang: Some(p.lang.clone()), confidence: cos };
        }
    }
    best
}
