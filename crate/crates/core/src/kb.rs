//! Knowledge base of tracked entities, loaded from JSONL.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    #[serde(rename = "canonical")]
    pub canonical_name: String,
    pub surface_forms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profession: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub party: Option<String>,
    /// Free-text description compared against tweets during disambiguation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

impl Entity {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::invalid("entity", "empty id"));
        }
        if self.surface_forms.is_empty() {
            return Err(Error::invalid("entity", format!("`{}` has no surface forms", self.id)));
        }
        let mut seen = HashSet::new();
        for form in &self.surface_forms {
            if form.trim().is_empty() {
                return Err(Error::invalid(
                    "entity",
                    format!("`{}` has an empty surface form", self.id),
                ));
            }
            if !seen.insert(form.to_lowercase()) {
                return Err(Error::invalid(
                    "entity",
                    format!("`{}` repeats surface form `{form}`", self.id),
                ));
            }
        }
        if !self.surface_forms.contains(&self.canonical_name) {
            return Err(Error::invalid(
                "entity",
                format!(
                    "`{}`: canonical name `{}` missing from surface forms",
                    self.id, self.canonical_name
                ),
            ));
        }
        Ok(())
    }
}

/// Immutable after construction; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    entities: Vec<Entity>,
    by_id: HashMap<String, usize>,
}

impl KnowledgeBase {
    pub fn new(entities: Vec<Entity>) -> Result<Self> {
        if entities.is_empty() {
            return Err(Error::invalid("knowledge base", "no entities"));
        }
        let mut by_id = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            e.validate()?;
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        Ok(KnowledgeBase { entities, by_id })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw)
    }

    /// Parses JSONL text; blank lines are ignored.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut entities = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entity: Entity = serde_json::from_str(line).map_err(|e| Error::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            entity.validate().map_err(|e| Error::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            if !seen.insert(entity.id.clone()) {
                return Err(Error::DuplicateId(entity.id));
            }
            entities.push(entity);
        }
        Self::new(entities)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.by_id.get(id).map(|&i| &self.entities[i])
    }

    /// Position of the entity in file order.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}
