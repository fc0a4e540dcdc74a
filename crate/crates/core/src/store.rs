//! Embedded append-only document store.
//!
//! A store directory holds three JSON Lines logs:
//!
//! - `documents.jsonl`: every accepted [`Document`], in arrival order.
//! - `mentions.jsonl`: [`Mention`] records. A later record with the same
//!   (document, entity, start token) supersedes the earlier one, so pipeline
//!   stages refine mentions without rewriting the log.
//! - `annotations.jsonl`: human [`Annotation`]s.
//!
//! Indexes (by id and by source/timestamp) live in memory and are rebuilt
//! from the logs on open. One writer at a time; readers take a shared lock
//! and therefore always see a consistent prefix of each log.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use chrono::{DateTime, NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Annotation, AnnotationKey, Document, Mention, Source};

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const MENTIONS_FILE: &str = "mentions.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    Inserted,
    /// Same id and identical content was already present.
    Unchanged,
}

type MentionKey = (String, String, usize);

struct Log {
    path: PathBuf,
    file: File,
}

impl Log {
    fn open(path: PathBuf) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Log { path, file })
    }

    fn append<T: Serialize>(&mut self, records: &[T]) -> Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        self.file
            .write_all(&buf)
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

fn read_log<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Line {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Default)]
struct Inner {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    by_time: BTreeSet<(DateTime<Utc>, usize)>,
    by_source: BTreeSet<(Source, DateTime<Utc>, usize)>,

    mentions: Vec<Mention>,
    mention_slots: HashMap<MentionKey, usize>,
    mentions_by_doc: HashMap<String, Vec<usize>>,

    annotations: Vec<Annotation>,
    annotation_keys: HashSet<AnnotationKey>,

    logs: Option<[Log; 3]>,
}

impl Inner {
    fn index_document(&mut self, doc: Document) {
        let idx = self.docs.len();
        self.by_id.insert(doc.id.clone(), idx);
        self.by_time.insert((doc.timestamp, idx));
        self.by_source.insert((doc.source, doc.timestamp, idx));
        self.docs.push(doc);
    }

    /// Returns false when an identical record is already current.
    fn index_mention(&mut self, m: Mention) -> bool {
        let key = m.key();
        match self.mention_slots.get(&key) {
            Some(&slot) if self.mentions[slot] == m => false,
            Some(&slot) => {
                self.mentions[slot] = m;
                true
            }
            None => {
                let slot = self.mentions.len();
                self.mentions_by_doc
                    .entry(m.doc_id.clone())
                    .or_default()
                    .push(slot);
                self.mention_slots.insert(key, slot);
                self.mentions.push(m);
                true
            }
        }
    }

    fn check_document(&self, doc: &Document) -> Result<PutOutcome> {
        doc.validate()?;
        match self.by_id.get(&doc.id) {
            Some(&idx) if self.docs[idx] == *doc => Ok(PutOutcome::Unchanged),
            Some(_) => Err(Error::Conflict(doc.id.clone())),
            None => Ok(PutOutcome::Inserted),
        }
    }
}

pub struct DocumentStore {
    dir: Option<PathBuf>,
    inner: RwLock<Inner>,
}

impl DocumentStore {
    /// Opens (creating if needed) a store directory and replays its logs.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut inner = Inner::default();

        for doc in read_log::<Document>(&dir.join(DOCUMENTS_FILE))? {
            match inner.check_document(&doc)? {
                PutOutcome::Inserted => inner.index_document(doc),
                PutOutcome::Unchanged => {}
            }
        }
        for m in read_log::<Mention>(&dir.join(MENTIONS_FILE))? {
            inner.index_mention(m);
        }
        for a in read_log::<Annotation>(&dir.join(ANNOTATIONS_FILE))? {
            inner.annotation_keys.insert(a.key());
            inner.annotations.push(a);
        }

        inner.logs = Some([
            Log::open(dir.join(DOCUMENTS_FILE))?,
            Log::open(dir.join(MENTIONS_FILE))?,
            Log::open(dir.join(ANNOTATIONS_FILE))?,
        ]);
        Ok(DocumentStore {
            dir: Some(dir),
            inner: RwLock::new(inner),
        })
    }

    /// A store that never touches the filesystem.
    pub fn in_memory() -> Self {
        DocumentStore {
            dir: None,
            inner: RwLock::new(Inner::default()),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|p| p.into_inner())
    }

    pub fn put_document(&self, doc: Document) -> Result<PutOutcome> {
        let mut inner = self.write();
        let outcome = inner.check_document(&doc)?;
        if outcome == PutOutcome::Inserted {
            if let Some(logs) = inner.logs.as_mut() {
                logs[0].append(std::slice::from_ref(&doc))?;
            }
            inner.index_document(doc);
        }
        Ok(outcome)
    }

    pub fn get(&self, id: &str) -> Option<Document> {
        let inner = self.read();
        inner.by_id.get(id).map(|&i| inner.docs[i].clone())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.read().by_id.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.read().docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All documents in arrival order.
    pub fn documents(&self) -> Vec<Document> {
        self.read().docs.clone()
    }

    /// Documents whose UTC date lies in `from..=to`, ordered by timestamp
    /// (arrival order among equal timestamps).
    pub fn query_documents(
        &self,
        source: Option<Source>,
        from: NaiveDate,
        to: NaiveDate,
    ) -> Result<Vec<Document>> {
        if from > to {
            return Err(Error::Argument(format!("from {from} is after to {to}")));
        }
        let lo = from.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
        let hi = to.and_hms_opt(23, 59, 59).expect("end of day").and_utc();
        let inner = self.read();
        let docs = match source {
            Some(s) => inner
                .by_source
                .range((s, lo, 0)..=(s, hi, usize::MAX))
                .map(|&(_, _, i)| inner.docs[i].clone())
                .collect(),
            None => inner
                .by_time
                .range((lo, 0)..=(hi, usize::MAX))
                .map(|&(_, i)| inner.docs[i].clone())
                .collect(),
        };
        Ok(docs)
    }

    /// First and last UTC date present in the store.
    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let inner = self.read();
        let first = inner.by_time.first()?.0.date_naive();
        let last = inner.by_time.last()?.0.date_naive();
        Some((first, last))
    }

    /// Upserts mentions; returns how many records changed.
    pub fn put_mentions(&self, mentions: &[Mention]) -> Result<usize> {
        let mut inner = self.write();
        let fresh: Vec<Mention> = mentions
            .iter()
            .filter(|m| match inner.mention_slots.get(&m.key()) {
                Some(&slot) => inner.mentions[slot] != **m,
                None => true,
            })
            .cloned()
            .collect();
        if fresh.is_empty() {
            return Ok(0);
        }
        if let Some(logs) = inner.logs.as_mut() {
            logs[1].append(&fresh)?;
        }
        let mut changed = 0;
        for m in fresh {
            if inner.index_mention(m) {
                changed += 1;
            }
        }
        Ok(changed)
    }

    pub fn mentions_for(&self, doc_id: &str) -> Vec<Mention> {
        let inner = self.read();
        inner
            .mentions_by_doc
            .get(doc_id)
            .map(|slots| slots.iter().map(|&s| inner.mentions[s].clone()).collect())
            .unwrap_or_default()
    }

    /// Current version of every mention, in first-seen order.
    pub fn mentions(&self) -> Vec<Mention> {
        self.read().mentions.clone()
    }

    pub fn put_annotation(&self, annotation: Annotation) -> Result<()> {
        annotation.validate()?;
        let mut inner = self.write();
        let key = annotation.key();
        if inner.annotation_keys.contains(&key) {
            return Err(Error::DuplicateAnnotation(format!(
                "doc `{}`, entity {:?}, task {}, annotator `{}`",
                key.0, key.1, key.2, key.3
            )));
        }
        if let Some(logs) = inner.logs.as_mut() {
            logs[2].append(std::slice::from_ref(&annotation))?;
        }
        inner.annotation_keys.insert(key);
        inner.annotations.push(annotation);
        Ok(())
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        self.read().annotations.clone()
    }
}
