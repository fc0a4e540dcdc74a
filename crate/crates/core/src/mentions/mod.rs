//! Entity mention detection.
//!
//! Surface forms from the knowledge base are tokenized and inserted into a
//! token-labelled prefix tree. Documents are scanned left to right; at each
//! token the longest surface form starting there wins, every entity sharing
//! that form gets a mention, and scanning resumes after the match.

mod tokenize;

use std::collections::HashMap;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub use tokenize::{tokenize, Token, TokenizedText, EMOTICONS};

use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::model::{Document, Mention, Span};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    pub case_sensitive: bool,
    /// Strip combining marks after NFD decomposition. Off by default since
    /// Portuguese names rely on their accents.
    pub fold_diacritics: bool,
}

impl MatchOptions {
    /// Key under which a token is stored in and looked up from the trie.
    pub fn key(&self, token: &str) -> String {
        let cased = if self.case_sensitive {
            token.to_string()
        } else {
            token.to_lowercase()
        };
        if self.fold_diacritics {
            cased.nfd().filter(|c| !is_combining_mark(*c)).collect()
        } else {
            cased
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Node {
    children: HashMap<String, usize>,
    /// KB positions of entities whose surface form ends here, ascending.
    terminal: Vec<usize>,
}

/// Token-level prefix tree over every surface form in a knowledge base.
#[derive(Debug, Clone)]
pub struct SurfaceTrie {
    nodes: Vec<Node>,
    entity_ids: Vec<String>,
    options: MatchOptions,
}

/// What a token path leads to in the trie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathInfo<'a> {
    pub entities: Vec<&'a str>,
    pub has_children: bool,
}

impl SurfaceTrie {
    pub fn build(kb: &KnowledgeBase, options: MatchOptions) -> Result<Self> {
        let mut trie = SurfaceTrie {
            nodes: vec![Node::default()],
            entity_ids: kb.entities().iter().map(|e| e.id.clone()).collect(),
            options,
        };
        for (pos, entity) in kb.entities().iter().enumerate() {
            for form in &entity.surface_forms {
                let tokens = tokenize(form);
                if tokens.is_empty() {
                    return Err(Error::invalid(
                        "surface form",
                        format!("entity `{}`: `{form}` contains no tokens", entity.id),
                    ));
                }
                let mut node = 0;
                for tok in tokens.tokens() {
                    let key = options.key(tok.text);
                    node = match trie.nodes[node].children.get(&key) {
                        Some(&child) => child,
                        None => {
                            let child = trie.nodes.len();
                            trie.nodes.push(Node::default());
                            trie.nodes[node].children.insert(key, child);
                            child
                        }
                    };
                }
                let terminal = &mut trie.nodes[node].terminal;
                if let Err(at) = terminal.binary_search(&pos) {
                    terminal.insert(at, pos);
                }
            }
        }
        Ok(trie)
    }

    pub fn options(&self) -> MatchOptions {
        self.options
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Follows raw tokens from the root; `None` if the path leaves the trie.
    pub fn lookup(&self, tokens: &[&str]) -> Option<PathInfo<'_>> {
        let mut node = 0;
        for t in tokens {
            node = *self.nodes[node].children.get(&self.options.key(t))?;
        }
        let n = &self.nodes[node];
        Some(PathInfo {
            entities: n.terminal.iter().map(|&p| self.entity_ids[p].as_str()).collect(),
            has_children: !n.children.is_empty(),
        })
    }

    /// Leftmost-longest, non-overlapping matches over trie keys. Returns the
    /// token range and the KB positions of the matched entities.
    pub fn scan_keys<S: AsRef<str>>(&self, keys: &[S]) -> Vec<(usize, usize, &[usize])> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let mut node = 0;
            let mut best = None;
            for (j, key) in keys.iter().enumerate().skip(i) {
                match self.nodes[node].children.get(key.as_ref()) {
                    Some(&child) => {
                        node = child;
                        if !self.nodes[node].terminal.is_empty() {
                            best = Some((j + 1, node));
                        }
                    }
                    None => break,
                }
            }
            match best {
                Some((end, node)) => {
                    out.push((i, end, self.nodes[node].terminal.as_slice()));
                    i = end;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Mentions in a document. Verdict and sentiment are left unset.
    pub fn find_mentions(&self, doc: &Document) -> Vec<Mention> {
        let tokens = tokenize(&doc.text);
        let keys: Vec<String> = tokens
            .tokens()
            .iter()
            .map(|t| self.options.key(t.text))
            .collect();
        let toks = tokens.tokens();
        let mut mentions = Vec::new();
        for (start, end, entities) in self.scan_keys(&keys) {
            let span = Span {
                token_start: start,
                token_end: end,
                byte_start: toks[start].start,
                byte_end: toks[end - 1].end,
            };
            let surface = &doc.text[span.byte_start..span.byte_end];
            for &pos in entities {
                mentions.push(Mention {
                    doc_id: doc.id.clone(),
                    entity_id: self.entity_ids[pos].clone(),
                    span,
                    surface: surface.to_string(),
                    related: None,
                    sentiment: None,
                });
            }
        }
        mentions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;
    use chrono::{TimeZone, Utc};

    fn kb(lines: &str) -> KnowledgeBase {
        KnowledgeBase::parse(lines).unwrap()
    }

    fn tweet(text: &str) -> Document {
        Document::new("t1", Source::Twitter, Utc.with_ymd_and_hms(2014, 3, 1, 0, 0, 0).unwrap(), text)
    }

    #[test]
    fn nested_forms_share_nodes() {
        let kb = kb(r#"{"id":"e1","canonical":"Passos Coelho","surface_forms":["Passos Coelho","Pedro Passos Coelho"]}"#);
        let trie = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        let inner = trie.lookup(&["Pedro", "Passos"]).unwrap();
        assert!(inner.entities.is_empty() && inner.has_children);
        let full = trie.lookup(&["pedro", "passos", "coelho"]).unwrap();
        assert_eq!(full.entities, ["e1"]);
        let two = trie.lookup(&["Passos", "Coelho"]).unwrap();
        assert_eq!(two.entities, ["e1"]);
        // root + pedro/passos/coelho + passos/coelho
        assert_eq!(trie.node_count(), 6);
    }

    #[test]
    fn shared_form_is_ambiguous() {
        let kb = kb(concat!(
            r#"{"id":"ea","canonical":"António Costa","surface_forms":["António Costa","Costa"]}"#,
            "\n",
            r#"{"id":"eb","canonical":"Costa","surface_forms":["Costa"]}"#,
        ));
        let trie = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        assert_eq!(trie.lookup(&["Costa"]).unwrap().entities, ["ea", "eb"]);
        let ms = trie.find_mentions(&tweet("Costa disse"));
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].span, ms[1].span);
    }

    #[test]
    fn empty_token_form_rejected() {
        let kb = kb(r#"{"id":"e9","canonical":"--","surface_forms":["--"]}"#);
        let err = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap_err();
        assert!(err.to_string().contains("e9"));
    }

    #[test]
    fn single_mention_offsets() {
        let kb = kb(r#"{"id":"e1","canonical":"Cameron","surface_forms":["Cameron"]}"#);
        let trie = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        let ms = trie.find_mentions(&tweet("Cameron spoke today"));
        assert_eq!(ms.len(), 1);
        assert_eq!(
            ms[0].span,
            Span { token_start: 0, token_end: 1, byte_start: 0, byte_end: 7 }
        );
        assert_eq!(ms[0].surface, "Cameron");
    }

    #[test]
    fn longest_form_wins() {
        let kb = kb(r#"{"id":"e1","canonical":"Passos Coelho","surface_forms":["Passos Coelho","Pedro Passos Coelho"]}"#);
        let trie = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        let ms = trie.find_mentions(&tweet("Pedro Passos Coelho falou"));
        assert_eq!(ms.len(), 1);
        assert_eq!((ms[0].span.token_start, ms[0].span.token_end), (0, 3));
        assert_eq!(ms[0].surface, "Pedro Passos Coelho");
    }

    #[test]
    fn token_granularity() {
        let kb = kb(r#"{"id":"e1","canonical":"Cam","surface_forms":["Cam"]}"#);
        let trie = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        assert!(trie.find_mentions(&tweet("Camera ready")).is_empty());
        assert_eq!(trie.find_mentions(&tweet("cam, ready")).len(), 1);
    }

    #[test]
    fn case_and_diacritic_policies() {
        let kb = kb(r#"{"id":"e1","canonical":"Seguro","surface_forms":["Seguro","Seguró"]}"#);
        let sensitive = SurfaceTrie::build(&kb, MatchOptions { case_sensitive: true, fold_diacritics: false }).unwrap();
        assert!(sensitive.find_mentions(&tweet("SEGURO ganhou")).is_empty());
        let insensitive = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        assert_eq!(insensitive.find_mentions(&tweet("SEGURO ganhou")).len(), 1);

        let kb2 = kb_one_accented();
        let plain = SurfaceTrie::build(&kb2, MatchOptions::default()).unwrap();
        assert!(plain.find_mentions(&tweet("Antonio disse")).is_empty());
        let folded = SurfaceTrie::build(&kb2, MatchOptions { case_sensitive: false, fold_diacritics: true }).unwrap();
        assert_eq!(folded.find_mentions(&tweet("Antonio disse")).len(), 1);
    }

    fn kb_one_accented() -> KnowledgeBase {
        kb(r#"{"id":"e1","canonical":"António","surface_forms":["António"]}"#)
    }

    #[test]
    fn repeated_mentions_all_emitted() {
        let kb = kb(r#"{"id":"e1","canonical":"Cameron","surface_forms":["Cameron"]}"#);
        let trie = SurfaceTrie::build(&kb, MatchOptions::default()).unwrap();
        let ms = trie.find_mentions(&tweet("Cameron and Cameron"));
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[1].span.byte_start, 12);
    }
}
