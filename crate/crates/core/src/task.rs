//! Learning task description, read from a JSON document.
//!
//! ```json
//! {
//!   "fact": "student",
//!   "target": { "attribute": "category", "concept": "graduate" },
//!   "mode": "characteristic",
//!   "levels": { "major": "studyprog", "birthplace": "city", "gpa": "range" }
//! }
//! ```
//!
//! Optional fields: `in_scope`, `attr_threshold` (default 3),
//! `rel_threshold` (absent or null means unlimited), `simplify`,
//! `drop_overlaps`. Unknown fields are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ATTR_THRESHOLD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Characteristic,
    Classification,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub attribute: String,
    pub concept: String,
}

fn default_attr_threshold() -> usize {
    DEFAULT_ATTR_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningTask {
    pub fact: String,
    pub target: Target,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_scope: Option<Vec<String>>,
    #[serde(default = "default_attr_threshold")]
    pub attr_threshold: usize,
    #[serde(default)]
    pub rel_threshold: Option<usize>,
    /// Level overrides, attribute name to level name.
    #[serde(default)]
    pub levels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplify: Option<bool>,
    /// Minimum d-weight (percent) an overlapping tuple needs to be kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_overlaps: Option<f64>,
}

impl LearningTask {
    pub fn new(fact: &str, attribute: &str, concept: &str, mode: Mode) -> Self {
        LearningTask {
            fact: fact.to_owned(),
            target: Target {
                attribute: attribute.to_owned(),
                concept: concept.to_owned(),
            },
            mode,
            in_scope: None,
            attr_threshold: DEFAULT_ATTR_THRESHOLD,
            rel_threshold: None,
            levels: BTreeMap::new(),
            simplify: None,
            drop_overlaps: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let task: LearningTask = serde_json::from_str(text)?;
        task.validate()?;
        Ok(task)
    }

    pub fn with_level(mut self, attribute: &str, level: &str) -> Self {
        self.levels.insert(attribute.to_owned(), level.to_owned());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.attr_threshold == 0 {
            return Err(Error::Task("attr_threshold must be positive".into()));
        }
        if self.rel_threshold == Some(0) {
            return Err(Error::Task("rel_threshold must be positive".into()));
        }
        if let Some(p) = self.drop_overlaps {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::Task("drop_overlaps must be a percentage".into()));
            }
        }
        if self.fact.trim().is_empty() {
            return Err(Error::Task("fact relation name is empty".into()));
        }
        Ok(())
    }

    /// Simplification runs only in characteristic mode, on by default.
    pub fn simplify_enabled(&self) -> bool {
        self.mode == Mode::Characteristic && self.simplify.unwrap_or(true)
    }

    pub fn level_override(&self, attribute: &str) -> Option<&str> {
        self.levels
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(attribute))
            .map(|(_, v)| v.as_str())
    }
}
