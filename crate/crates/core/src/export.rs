//! Result documents: a fixed-width table in the layout of the classic AOI
//! result tables, and a versioned JSON form.
//!
//! JSON schema (version 1):
//!
//! ```json
//! {
//!   "version": 1,
//!   "mode": "classification",
//!   "class_attribute": "study",
//!   "attributes": [{ "name": "Major", "level": "studyprog" }, ...],
//!   "classes": [{
//!     "concept": "graduate",
//!     "source_count": 6,
//!     "tuples": [{ "cells": ["Art", "Canada", "Excellent"], "vote": 1,
//!                  "t_weight": "16.67", "d_weight": "50", "overlap": true }],
//!     "rule": "forall(x) graduate(x) -> ..."
//!   }]
//! }
//! ```
//!
//! Set-valued cells are JSON arrays. Weights are decimal strings rounded to
//! hundredths so that they survive a round trip unchanged.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::induction::{ClassifiedRelation, GenAttribute, GeneralizedRelation};
use crate::rules::{d_weights, format_weight, keep_overlap, t_weights, Form, RuleSet};
use crate::task::Mode;
use crate::value::{ConceptSet, Decimal, Value};
use crate::Percent;

pub const FORMAT_VERSION: u32 = 1;

/// What an induction run produced.
#[derive(Clone, Debug)]
pub enum Outcome {
    Characteristic {
        head: String,
        relation: GeneralizedRelation,
    },
    Classification {
        head: String,
        classified: ClassifiedRelation,
    },
}

#[derive(Clone, Debug)]
pub struct ExportOptions {
    pub form: Form,
    pub unicode: bool,
    pub drop_overlaps: Option<Decimal>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            form: Form::Quantitative,
            unicode: false,
            drop_overlaps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDoc {
    pub name: String,
    pub level: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellDoc {
    Concept(String),
    Set(Vec<String>),
}

impl From<&Value> for CellDoc {
    fn from(v: &Value) -> Self {
        match v {
            Value::Set(s) => CellDoc::Set(s.iter().map(str::to_owned).collect()),
            other => CellDoc::Concept(other.to_string()),
        }
    }
}

impl CellDoc {
    pub fn to_value(&self) -> Value {
        match self {
            CellDoc::Concept(c) => Value::text(c.clone()),
            CellDoc::Set(s) => ConceptSet::new(s.iter().cloned())
                .map(Value::Set)
                .unwrap_or_else(|| Value::text("")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleDoc {
    pub cells: Vec<CellDoc>,
    pub vote: u64,
    pub t_weight: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_weight: Option<String>,
    #[serde(default)]
    pub overlap: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDoc {
    pub concept: String,
    pub source_count: u64,
    pub tuples: Vec<TupleDoc>,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub version: u32,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_attribute: Option<String>,
    pub attributes: Vec<LevelDoc>,
    pub classes: Vec<ClassDoc>,
}

fn level_docs(attrs: &[GenAttribute]) -> Vec<LevelDoc> {
    attrs
        .iter()
        .map(|a| LevelDoc {
            name: a.name.clone(),
            level: a.level_name.clone(),
        })
        .collect()
}

impl ResultDocument {
    pub fn build(outcome: &Outcome, opts: &ExportOptions) -> Result<Self> {
        match outcome {
            Outcome::Characteristic { head, relation } => {
                let (tuples, rule) = if relation.is_empty() {
                    (Vec::new(), String::new())
                } else {
                    let tuples = t_weights::<Percent>(relation)?
                        .iter()
                        .map(|w| TupleDoc {
                            cells: w.cells.iter().map(CellDoc::from).collect(),
                            vote: w.vote,
                            t_weight: format_weight(&w.t_weight),
                            d_weight: None,
                            overlap: false,
                        })
                        .collect();
                    let rule = RuleSet::characteristic(relation, head, opts.form)?.render(opts.unicode);
                    (tuples, rule)
                };
                Ok(ResultDocument {
                    version: FORMAT_VERSION,
                    mode: Mode::Characteristic,
                    class_attribute: None,
                    attributes: level_docs(relation.attributes()),
                    classes: vec![ClassDoc {
                        concept: head.clone(),
                        source_count: relation.source_count(),
                        tuples,
                        rule,
                    }],
                })
            }
            Outcome::Classification { classified, .. } => {
                let mut classes = Vec::new();
                for (concept, rel) in &classified.classes {
                    let tuples = d_weights::<Percent>(classified, concept)?
                        .iter()
                        .filter(|w| keep_overlap(w, opts.drop_overlaps))
                        .map(|w| TupleDoc {
                            cells: w.cells.iter().map(CellDoc::from).collect(),
                            vote: w.vote,
                            t_weight: format_weight(&w.t_weight),
                            d_weight: w.d_weight.as_ref().map(format_weight),
                            overlap: w.overlap,
                        })
                        .collect();
                    let rule =
                        RuleSet::classification(classified, concept, opts.form, opts.drop_overlaps)?
                            .render(opts.unicode);
                    classes.push(ClassDoc {
                        concept: concept.clone(),
                        source_count: rel.source_count(),
                        tuples,
                        rule,
                    });
                }
                Ok(ResultDocument {
                    version: FORMAT_VERSION,
                    mode: Mode::Classification,
                    class_attribute: Some(classified.class_attribute.clone()),
                    attributes: level_docs(classified.attributes()),
                    classes,
                })
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One rule per class, newline-terminated.
    pub fn rules_text(&self) -> String {
        self.classes
            .iter()
            .filter(|c| !c.rule.is_empty())
            .map(|c| format!("{}\n", c.rule))
            .collect()
    }

    /// Columns: class (classification only), one per attribute, `Vote`,
    /// `t-weight`, and `d-weight` (classification only).
    pub fn table_text(&self) -> String {
        let classified = self.mode == Mode::Classification;
        let mut header: Vec<String> = Vec::new();
        if let Some(c) = &self.class_attribute {
            header.push(c.clone());
        }
        header.extend(self.attributes.iter().map(|a| a.name.clone()));
        header.push("Vote".into());
        header.push("t-weight".into());
        if classified {
            header.push("d-weight".into());
        }
        let mut rows = vec![header];
        for class in &self.classes {
            for t in &class.tuples {
                let mut row = Vec::new();
                if classified {
                    row.push(class.concept.clone());
                }
                row.extend(t.cells.iter().map(|c| c.to_value().to_string()));
                row.push(t.vote.to_string());
                row.push(format!("{}%", t.t_weight));
                if classified {
                    row.push(t.d_weight.as_ref().map(|d| format!("{d}%")).unwrap_or_default());
                }
                rows.push(row);
            }
        }
        format_columns(&rows)
    }
}

/// Left-aligned columns separated by two spaces.
pub fn format_columns(rows: &[Vec<String>]) -> String {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..width)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// A relation as a fixed-width table.
pub fn relation_table(relation: &crate::relation::Relation) -> String {
    let mut rows = vec![relation.schema().names().map(str::to_owned).collect::<Vec<_>>()];
    rows.extend(
        relation
            .tuples()
            .iter()
            .map(|t| t.iter().map(ToString::to_string).collect()),
    );
    format_columns(&rows)
}
