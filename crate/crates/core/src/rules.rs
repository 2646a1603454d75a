//! Typicality and discrimination weights, and rendering of generalized
//! relations as logical rules.
//!
//! A rule reads
//!
//! ```text
//! forall(x) graduate(x) -> (Birthplace(x) in Canada AND GPA(x) in Excellent) [50%]
//!     OR (Major(x) in Science AND Birthplace(x) in Foreign AND GPA(x) in Good) [50%]
//! ```
//!
//! (on one line). Predicates on `ANY` are left out; a disjunct with no
//! predicates left is `true`. The unicode form uses `∀ → ∧ ∨ ∈`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hierarchy::ANY;
use crate::induction::{ClassifiedRelation, GenAttribute, GeneralizedRelation};
use crate::relation::fold;
use crate::scalar::WeightScalar;
use crate::value::{ConceptSet, Decimal, Value};
use crate::Percent;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTuple<T = Percent> {
    pub cells: Vec<Value>,
    pub vote: u64,
    pub t_weight: T,
    pub d_weight: Option<T>,
    /// The cell vector also occurs in another class.
    pub overlap: bool,
}

/// `vote / total votes * 100` for every tuple.
pub fn t_weights<T: WeightScalar>(grel: &GeneralizedRelation) -> Result<Vec<WeightedTuple<T>>> {
    let total = grel.total_votes();
    if grel.is_empty() || total == 0 {
        return Err(Error::Emit("cannot weight an empty relation".into()));
    }
    Ok(grel
        .tuples()
        .iter()
        .map(|t| WeightedTuple {
            cells: t.cells.clone(),
            vote: t.vote,
            t_weight: T::percent(t.vote, total),
            d_weight: None,
            overlap: false,
        })
        .collect())
}

/// Target-class tuples with both weights. The d-weight is the tuple's
/// target vote over its votes summed across every class.
pub fn d_weights<T: WeightScalar>(
    classified: &ClassifiedRelation,
    target: &str,
) -> Result<Vec<WeightedTuple<T>>> {
    let rel = classified
        .class(target)
        .ok_or_else(|| Error::Task(format!("{target} is not a class of this relation")))?;
    let mut out = t_weights::<T>(rel)?;
    for w in &mut out {
        let across: u64 = classified
            .classes
            .iter()
            .filter_map(|(_, r)| r.find(&w.cells))
            .map(|t| t.vote)
            .sum();
        w.d_weight = Some(T::percent(w.vote, across));
        w.overlap = across > w.vote;
    }
    Ok(out)
}

/// Rounded to hundredths, trailing zeros dropped: `16.67`, `50`, `100`.
pub fn format_weight<T: WeightScalar>(w: &T) -> String {
    w.round_hundredths().normalize().to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Qualitative,
    Quantitative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Disjunct {
    /// `(attribute, cell)` with `ANY` cells already removed.
    pub predicates: Vec<(String, Value)>,
    pub weight: Option<Decimal>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleSet {
    pub head: String,
    pub form: Form,
    pub disjuncts: Vec<Disjunct>,
}

fn disjunct<T: WeightScalar>(
    attributes: &[GenAttribute],
    cells: &[Value],
    weight: Option<&T>,
) -> Disjunct {
    Disjunct {
        predicates: attributes
            .iter()
            .zip(cells)
            .filter(|(_, c)| c.as_text() != Some(ANY))
            .map(|(a, c)| (a.name.clone(), c.clone()))
            .collect(),
        weight: weight.map(|w| w.round_hundredths()),
    }
}

impl RuleSet {
    /// Characteristic rule; quantitative form carries t-weights.
    pub fn characteristic(grel: &GeneralizedRelation, head: &str, form: Form) -> Result<Self> {
        let weighted = t_weights::<Percent>(grel)?;
        Ok(RuleSet {
            head: head.to_owned(),
            form,
            disjuncts: weighted
                .iter()
                .map(|w| {
                    let weight = (form == Form::Quantitative).then_some(&w.t_weight);
                    disjunct(grel.attributes(), &w.cells, weight)
                })
                .collect(),
        })
    }

    /// Discriminant rule for one class; quantitative form carries
    /// d-weights. Overlapping tuples whose d-weight is below `min_d_weight`
    /// are left out.
    pub fn classification(
        classified: &ClassifiedRelation,
        head: &str,
        form: Form,
        min_d_weight: Option<Decimal>,
    ) -> Result<Self> {
        let weighted = d_weights::<Percent>(classified, head)?;
        let canonical = classified
            .classes
            .iter()
            .find(|(c, _)| fold(c) == fold(head))
            .map(|(c, _)| c.clone())
            .unwrap_or_else(|| head.to_owned());
        Ok(RuleSet {
            head: canonical,
            form,
            disjuncts: weighted
                .iter()
                .filter(|w| keep_overlap(w, min_d_weight))
                .map(|w| {
                    let weight = w.d_weight.as_ref().filter(|_| form == Form::Quantitative);
                    disjunct(classified.attributes(), &w.cells, weight)
                })
                .collect(),
        })
    }

    pub fn render(&self, unicode: bool) -> String {
        let g = if unicode { &UNICODE } else { &ASCII };
        let mut out = format!("{}(x) {}(x) {} ", g.forall, self.head, g.implies);
        if self.disjuncts.is_empty() {
            out.push_str("false");
            return out;
        }
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                let _ = write!(out, " {} ", g.or);
            }
            if d.predicates.is_empty() {
                out.push_str("true");
            } else {
                out.push('(');
                for (j, (attr, cell)) in d.predicates.iter().enumerate() {
                    if j > 0 {
                        let _ = write!(out, " {} ", g.and);
                    }
                    let _ = write!(out, "{attr}(x) {} {cell}", g.member);
                }
                out.push(')');
            }
            if let Some(w) = d.weight {
                let _ = write!(out, " [{}%]", w.normalize());
            }
        }
        out
    }
}

pub(crate) fn keep_overlap<T: WeightScalar>(w: &WeightedTuple<T>, min: Option<Decimal>) -> bool {
    match (min, &w.d_weight) {
        (Some(min), Some(d)) if w.overlap => d.round_hundredths() >= min,
        _ => true,
    }
}

struct Glyphs {
    forall: &'static str,
    implies: &'static str,
    and: &'static str,
    or: &'static str,
    member: &'static str,
}

const ASCII: Glyphs = Glyphs {
    forall: "forall",
    implies: "->",
    and: "AND",
    or: "OR",
    member: "in",
};

const UNICODE: Glyphs = Glyphs {
    forall: "∀",
    implies: "→",
    and: "∧",
    or: "∨",
    member: "∈",
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedDisjunct {
    /// Attribute (case-folded) to the set of concepts it is constrained to.
    pub predicates: BTreeMap<String, BTreeSet<String>>,
    pub weight: Option<Decimal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedRule {
    pub head: String,
    pub disjuncts: Vec<ParsedDisjunct>,
}

impl ParsedRule {
    /// Cell vectors over `attributes`, with `ANY` for unconstrained ones.
    pub fn cells(&self, attributes: &[&str]) -> Vec<Vec<Value>> {
        self.disjuncts
            .iter()
            .map(|d| {
                attributes
                    .iter()
                    .map(|a| match d.predicates.get(&fold(a)) {
                        Some(names) => Value::from_names(
                            ConceptSet::new(names.iter().cloned()).expect("non-empty"),
                        ),
                        None => Value::text(ANY),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn strip_weights(&self) -> ParsedRule {
        ParsedRule {
            head: self.head.clone(),
            disjuncts: self
                .disjuncts
                .iter()
                .map(|d| ParsedDisjunct {
                    predicates: d.predicates.clone(),
                    weight: None,
                })
                .collect(),
        }
    }
}

fn rule_error(msg: &str) -> Error {
    Error::Emit(format!("cannot parse rule: {msg}"))
}

/// Reads either rendering back. Concept names must not contain the
/// connective words or parentheses.
pub fn parse_rule(text: &str) -> Result<ParsedRule> {
    let text = text
        .replace('∀', "forall")
        .replace('→', "->")
        .replace('∧', " AND ")
        .replace('∨', " OR ")
        .replace('∈', " in ");
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let rest = normalized
        .strip_prefix("forall(x)")
        .or_else(|| normalized.strip_prefix("forall (x)"))
        .or_else(|| normalized.strip_prefix("V(x)="))
        .ok_or_else(|| rule_error("missing quantifier"))?
        .trim_start_matches('=')
        .trim();
    let (head, body) = rest
        .split_once("->")
        .ok_or_else(|| rule_error("missing implication"))?;
    let head = head
        .trim()
        .strip_suffix("(x)")
        .ok_or_else(|| rule_error("head must read name(x)"))?
        .trim()
        .to_owned();

    let mut disjuncts = Vec::new();
    for part in body.split(" OR ") {
        let part = part.trim();
        if part == "false" {
            continue;
        }
        let (core, weight) = match part.rfind('[') {
            Some(i) if part.ends_with("%]") => {
                let w = part[i + 1..part.len() - 2].trim();
                let w: Decimal = w.parse().map_err(|_| rule_error("bad weight"))?;
                (part[..i].trim(), Some(w))
            }
            _ => (part, None),
        };
        let mut predicates = BTreeMap::new();
        if core != "true" {
            let inner = core
                .strip_prefix('(')
                .and_then(|c| c.strip_suffix(')'))
                .ok_or_else(|| rule_error("disjunct must be parenthesized"))?;
            for pred in inner.split(" AND ") {
                let (lhs, rhs) = pred
                    .split_once(" in ")
                    .ok_or_else(|| rule_error("predicate must read Attr(x) in concept"))?;
                let attr = lhs
                    .trim()
                    .strip_suffix("(x)")
                    .ok_or_else(|| rule_error("predicate must read Attr(x)"))?;
                let rhs = rhs.trim();
                let names: BTreeSet<String> = match rhs.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
                    Some(list) => list.split(',').map(|s| s.trim().to_owned()).collect(),
                    None => BTreeSet::from([rhs.to_owned()]),
                };
                if names.iter().any(String::is_empty) {
                    return Err(rule_error("empty concept"));
                }
                predicates.insert(fold(attr), names);
            }
        }
        disjuncts.push(ParsedDisjunct { predicates, weight });
    }
    Ok(ParsedRule { head, disjuncts })
}
