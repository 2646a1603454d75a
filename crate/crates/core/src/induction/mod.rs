//! The generalization pipeline: class extraction, attribute removal,
//! concept-tree ascension with vote propagation, attribute and relation
//! thresholds, rule simplification, and the joint multi-class run used for
//! classification rules.

mod simplify;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::hierarchy::{ConceptTree, HierarchySet};
use crate::relation::{fold, AttributeSpec, Database, Kind, Relation, Schema};
use crate::task::{LearningTask, Mode};
use crate::value::{Decimal, Value};

pub use simplify::{expand_leaf_tuples, simplify};

/// Attribute name to level name.
pub type LevelMap = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenAttribute {
    pub name: String,
    pub level: usize,
    pub level_name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedTuple {
    pub cells: Vec<Value>,
    pub vote: u64,
}

/// Deduplicated generalized tuples with votes, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedRelation {
    attributes: Vec<GenAttribute>,
    tuples: Vec<GeneralizedTuple>,
    source_count: u64,
}

impl GeneralizedRelation {
    /// Merges identical cell vectors, summing votes.
    pub fn from_votes<I>(attributes: Vec<GenAttribute>, rows: I, source_count: u64) -> Self
    where
        I: IntoIterator<Item = (Vec<Value>, u64)>,
    {
        let mut merged: BTreeMap<Vec<Value>, u64> = BTreeMap::new();
        for (cells, vote) in rows {
            *merged.entry(cells).or_default() += vote;
        }
        GeneralizedRelation {
            attributes,
            tuples: merged
                .into_iter()
                .map(|(cells, vote)| GeneralizedTuple { cells, vote })
                .collect(),
            source_count,
        }
    }

    pub fn attributes(&self) -> &[GenAttribute] {
        &self.attributes
    }

    pub fn tuples(&self) -> &[GeneralizedTuple] {
        &self.tuples
    }

    pub fn source_count(&self) -> u64 {
        self.source_count
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn total_votes(&self) -> u64 {
        self.tuples.iter().map(|t| t.vote).sum()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        let key = fold(name);
        self.attributes.iter().position(|a| fold(&a.name) == key)
    }

    pub fn distinct_count(&self, i: usize) -> usize {
        self.tuples
            .iter()
            .map(|t| &t.cells[i])
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn levels(&self) -> LevelMap {
        self.attributes
            .iter()
            .map(|a| (a.name.clone(), a.level_name.clone()))
            .collect()
    }

    pub fn find(&self, cells: &[Value]) -> Option<&GeneralizedTuple> {
        self.tuples.iter().find(|t| t.cells == cells)
    }

    /// Plain relation of the cells, optionally with a trailing `Vote` column.
    pub fn to_relation(&self, with_votes: bool) -> Relation {
        let mut attrs: Vec<AttributeSpec> = self
            .attributes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let numeric = !self.tuples.is_empty()
                    && self.tuples.iter().all(|t| matches!(t.cells[i], Value::Number(_)));
                AttributeSpec::new(
                    a.name.clone(),
                    if numeric { Kind::Numeric } else { Kind::Categorical },
                )
            })
            .collect();
        if with_votes {
            attrs.push(AttributeSpec::new("Vote", Kind::Numeric));
        }
        let tuples = self
            .tuples
            .iter()
            .map(|t| {
                let mut row = t.cells.clone();
                if with_votes {
                    row.push(Value::Number(Decimal::from(t.vote)));
                }
                row
            })
            .collect();
        Relation::new(Schema::new(attrs).expect("distinct names"), tuples)
            .expect("cells typed per column")
    }

    /// Re-expresses attribute `i` at `to_level` and re-merges.
    pub fn lift_attribute(&self, trees: &HierarchySet, i: usize, to_level: usize) -> Result<Self> {
        let tree = trees.require(&self.attributes[i].name)?;
        let mut attributes = self.attributes.clone();
        attributes[i].level = to_level;
        attributes[i].level_name = tree.level_name(to_level).to_owned();
        let rows = self
            .tuples
            .iter()
            .map(|t| {
                let mut cells = t.cells.clone();
                cells[i] = tree.lift(&cells[i], to_level)?;
                Ok((cells, t.vote))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_votes(attributes, rows, self.source_count))
    }

    /// One level up for attribute `i`; no-op at `ANY`.
    pub fn ascend_attribute(&self, trees: &HierarchySet, i: usize) -> Result<Self> {
        let tree = trees.require(&self.attributes[i].name)?;
        let level = self.attributes[i].level;
        if level >= tree.root_level() {
            return Ok(self.clone());
        }
        self.lift_attribute(trees, i, level + 1)
    }

    pub(crate) fn with_tuples(&self, tuples: Vec<GeneralizedTuple>) -> Self {
        let mut tuples = tuples;
        tuples.sort_by(|a, b| a.cells.cmp(&b.cells));
        GeneralizedRelation {
            attributes: self.attributes.clone(),
            tuples,
            source_count: self.source_count,
        }
    }
}

fn resolve_levels(
    relation: &Relation,
    trees: &HierarchySet,
    levels: &LevelMap,
) -> Result<Vec<(usize, String)>> {
    relation
        .schema()
        .names()
        .map(|name| {
            let tree = trees.require(name)?;
            let level_name = levels
                .iter()
                .find(|(k, _)| fold(k) == fold(name))
                .map(|(_, v)| v)
                .ok_or_else(|| Error::Task(format!("no level requested for attribute {name}")))?;
            let level = tree.level_index(level_name)?;
            Ok((level, tree.level_name(level).to_owned()))
        })
        .collect()
}

/// Replaces every cell by its ancestor at the requested level and merges
/// identical tuples, summing votes.
pub fn ascend(relation: &Relation, trees: &HierarchySet, levels: &LevelMap) -> Result<GeneralizedRelation> {
    let resolved = resolve_levels(relation, trees, levels)?;
    let schema = relation.schema();
    let attributes: Vec<GenAttribute> = schema
        .names()
        .zip(&resolved)
        .map(|(name, (level, level_name))| GenAttribute {
            name: name.to_owned(),
            level: *level,
            level_name: level_name.clone(),
        })
        .collect();
    let column_trees: Vec<&ConceptTree> = schema
        .names()
        .map(|n| trees.require(n))
        .collect::<Result<_>>()?;
    let rows = relation
        .tuples()
        .iter()
        .map(|t| {
            let cells = t
                .iter()
                .zip(&column_trees)
                .zip(&resolved)
                .map(|((v, tree), (level, _))| tree.lift(v, *level))
                .collect::<Result<Vec<_>>>()?;
            Ok((cells, 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneralizedRelation::from_votes(
        attributes,
        rows,
        relation.len() as u64,
    ))
}

/// Ascends any attribute with more than `threshold` distinct values until it
/// fits or reaches `ANY`.
pub fn enforce_attribute_thresholds(
    grel: &GeneralizedRelation,
    trees: &HierarchySet,
    threshold: usize,
) -> Result<GeneralizedRelation> {
    let mut current = grel.clone();
    for i in 0..current.attributes.len() {
        let root = trees.require(&current.attributes[i].name)?.root_level();
        while current.distinct_count(i) > threshold && current.attributes[i].level < root {
            current = current.ascend_attribute(trees, i)?;
        }
    }
    Ok(current)
}

/// While the relation holds more than `threshold` tuples, ascends the
/// attribute with the most distinct values (leftmost on ties).
pub fn enforce_relation_threshold(
    grel: &GeneralizedRelation,
    trees: &HierarchySet,
    threshold: Option<usize>,
) -> Result<GeneralizedRelation> {
    let Some(limit) = threshold else {
        return Ok(grel.clone());
    };
    let mut current = grel.clone();
    while current.len() > limit {
        let mut best: Option<(usize, usize)> = None;
        for (i, attr) in current.attributes.iter().enumerate() {
            if attr.level >= trees.require(&attr.name)?.root_level() {
                continue;
            }
            let distinct = current.distinct_count(i);
            if best.is_none_or(|(_, d)| distinct > d) {
                best = Some((i, distinct));
            }
        }
        match best {
            Some((i, _)) => current = current.ascend_attribute(trees, i)?,
            None => break,
        }
    }
    Ok(current)
}

/// Tuples of the fact relation whose target attribute generalizes to
/// `concept` at the level where `concept` lives. Row order is kept.
pub fn extract_target(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
    concept: &str,
) -> Result<Relation> {
    let fact = db.relation(&task.fact)?;
    let tree = trees.require(&task.target.attribute)?;
    let node = tree.node(concept).ok_or_else(|| {
        Error::Task(format!(
            "concept {concept:?} is not in the hierarchy for {}",
            task.target.attribute
        ))
    })?;
    let (level, name) = (node.level, node.name.clone());
    let col = fact
        .column(&task.target.attribute)
        .map_err(|_| Error::Task(format!("fact relation has no attribute {}", task.target.attribute)))?;
    fact.filter(|t| Ok(tree.lift(&t[col], level)?.as_text() == Some(name.as_str())))
}

/// Drops the target attribute and every attribute without a hierarchy whose
/// distinct count exceeds `attr_threshold`. Only `in_scope` attributes are
/// kept when the task names them.
pub fn remove_attributes(
    relation: &Relation,
    task: &LearningTask,
    trees: &HierarchySet,
) -> Result<Relation> {
    let schema = relation.schema();
    let candidates: Vec<String> = match &task.in_scope {
        Some(list) => {
            for name in list {
                schema.index_of(name).ok_or_else(|| {
                    Error::Task(format!("in_scope attribute {name:?} is not in the fact relation"))
                })?;
            }
            list.clone()
        }
        None => schema.names().map(str::to_owned).collect(),
    };
    let mut keep = Vec::new();
    for name in candidates {
        if fold(&name) == fold(&task.target.attribute) {
            continue;
        }
        if trees.get(&name).is_none() && relation.distinct_count(&name)? > task.attr_threshold {
            continue;
        }
        let canonical = &schema.attributes()[schema.require(&name)?].name;
        keep.push(canonical.clone());
    }
    relation.project(&keep)
}

/// The hierarchy set extended with identity trees for kept attributes that
/// have no hierarchy table, built from the values of `basis`.
fn working_trees(trees: &HierarchySet, basis: &Relation) -> Result<HierarchySet> {
    let mut out = trees.clone();
    for (i, attr) in basis.schema().attributes().iter().enumerate() {
        if trees.get(&attr.name).is_none() {
            let values: BTreeSet<String> =
                basis.tuples().iter().map(|t| t[i].to_string()).collect();
            out.insert(ConceptTree::identity(&attr.name, values)?)?;
        }
    }
    Ok(out)
}

/// Requested start level per kept attribute: the task override, else one
/// level above the leaves.
fn initial_levels(task: &LearningTask, relation: &Relation, trees: &HierarchySet) -> Result<LevelMap> {
    relation
        .schema()
        .names()
        .map(|name| {
            let tree = trees.require(name)?;
            let level = match task.level_override(name) {
                Some(l) => tree.level_name(tree.level_index(l)?).to_owned(),
                None => tree.level_name(tree.minimal_level()).to_owned(),
            };
            Ok((name.to_owned(), level))
        })
        .collect()
}

fn check_overrides(task: &LearningTask, fact: &Relation, trees: &HierarchySet) -> Result<()> {
    for (attr, level) in &task.levels {
        fact.schema().index_of(attr).ok_or_else(|| {
            Error::Task(format!("level override for unknown attribute {attr:?}"))
        })?;
        let identity = fold(attr) == fold(level);
        if trees.get(attr).is_none() && !identity {
            trees.require(attr)?;
        }
    }
    Ok(())
}

/// Every intermediate relation of a characteristic run.
#[derive(Clone, Debug)]
pub struct CharacteristicTrace {
    pub concept: String,
    pub target: Relation,
    pub removed: Relation,
    pub trees: HierarchySet,
    pub initial: GeneralizedRelation,
    pub attr_thresholded: GeneralizedRelation,
    pub thresholded: GeneralizedRelation,
    pub simplified: Option<GeneralizedRelation>,
}

impl CharacteristicTrace {
    pub fn result(&self) -> &GeneralizedRelation {
        self.simplified.as_ref().unwrap_or(&self.thresholded)
    }
}

pub fn trace_characteristic(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
) -> Result<CharacteristicTrace> {
    task.validate()?;
    let fact = db.relation(&task.fact)?;
    check_overrides(task, fact, trees)?;
    let concept = canonical_concept(trees, task)?;
    let target = extract_target(db, trees, task, &concept)?;
    let removed = remove_attributes(&target, task, trees)?;
    let work = working_trees(trees, &removed)?;
    let levels = initial_levels(task, &removed, &work)?;
    let initial = ascend(&removed, &work, &levels)?;
    let attr_thresholded = enforce_attribute_thresholds(&initial, &work, task.attr_threshold)?;
    let thresholded = enforce_relation_threshold(&attr_thresholded, &work, task.rel_threshold)?;
    let simplified = if task.simplify_enabled() {
        Some(simplify(&thresholded, &work)?)
    } else {
        None
    };
    Ok(CharacteristicTrace {
        concept,
        target,
        removed,
        trees: work,
        initial,
        attr_thresholded,
        thresholded,
        simplified,
    })
}

pub fn learn_characteristic(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
) -> Result<GeneralizedRelation> {
    if task.mode != Mode::Characteristic {
        return Err(Error::Task("learn_characteristic needs a characteristic task".into()));
    }
    Ok(trace_characteristic(db, trees, task)?.result().clone())
}

fn canonical_concept(trees: &HierarchySet, task: &LearningTask) -> Result<String> {
    let tree = trees.require(&task.target.attribute)?;
    tree.node(&task.target.concept)
        .map(|n| n.name.clone())
        .ok_or_else(|| {
            Error::Task(format!(
                "concept {:?} is not in the hierarchy for {}",
                task.target.concept, task.target.attribute
            ))
        })
}

/// Per-class generalized relations sharing one schema and one set of levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifiedRelation {
    /// Level name of the class concepts, e.g. `study`.
    pub class_attribute: String,
    /// Target class first, then contrasting classes by name.
    pub classes: Vec<(String, GeneralizedRelation)>,
}

impl ClassifiedRelation {
    pub fn class(&self, concept: &str) -> Option<&GeneralizedRelation> {
        self.classes
            .iter()
            .find(|(c, _)| fold(c) == fold(concept))
            .map(|(_, r)| r)
    }

    pub fn attributes(&self) -> &[GenAttribute] {
        self.classes[0].1.attributes()
    }

    /// Cell vectors present in more than one class.
    pub fn overlaps(&self) -> BTreeSet<Vec<Value>> {
        let mut seen: BTreeMap<&Vec<Value>, usize> = BTreeMap::new();
        for (_, rel) in &self.classes {
            for t in rel.tuples() {
                *seen.entry(&t.cells).or_default() += 1;
            }
        }
        seen.into_iter()
            .filter(|(_, n)| *n > 1)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn is_overlap(&self, cells: &[Value]) -> bool {
        self.classes
            .iter()
            .filter(|(_, r)| r.find(cells).is_some())
            .count()
            > 1
    }

    /// Class column, cells and votes in one relation.
    pub fn to_relation(&self) -> Relation {
        let mut attrs = vec![AttributeSpec::new(self.class_attribute.clone(), Kind::Categorical)];
        let first = self.classes[0].1.to_relation(true);
        attrs.extend(first.schema().attributes().iter().cloned());
        let mut tuples = Vec::new();
        for (concept, rel) in &self.classes {
            for row in rel.to_relation(true).tuples() {
                let mut r = vec![Value::text(concept.clone())];
                r.extend(row.iter().cloned());
                tuples.push(r);
            }
        }
        let schema = Schema::new(attrs).unwrap_or_else(|_| {
            // A fact attribute may share the class level's name.
            let mut a = vec![AttributeSpec::new("class", Kind::Categorical)];
            a.extend(first.schema().attributes().iter().cloned());
            Schema::new(a).expect("distinct names")
        });
        Relation::new(schema, tuples).expect("typed")
    }
}

#[derive(Clone, Debug)]
pub struct ClassificationTrace {
    pub class_attribute: String,
    /// Per class: extracted tuples after attribute removal.
    pub removed: Vec<(String, Relation)>,
    pub trees: HierarchySet,
    /// All classes at the requested starting levels.
    pub initial: ClassifiedRelation,
    /// All classes at the joint levels reached under the thresholds.
    pub result: ClassifiedRelation,
}

pub fn trace_classification(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
) -> Result<ClassificationTrace> {
    task.validate()?;
    let fact = db.relation(&task.fact)?;
    check_overrides(task, fact, trees)?;
    let target = canonical_concept(trees, task)?;
    let tree = trees.require(&task.target.attribute)?;
    let class_level = tree.node(&target).expect("canonical").level;
    let mut siblings: Vec<String> = tree
        .concepts_at(class_level)
        .into_iter()
        .filter(|c| *c != target)
        .map(str::to_owned)
        .collect();
    siblings.sort();
    if siblings.is_empty() {
        return Err(Error::Task(format!(
            "{target} has no sibling concepts to contrast with"
        )));
    }

    let mut extracted = vec![(target.clone(), extract_target(db, trees, task, &target)?)];
    for s in siblings {
        let rel = extract_target(db, trees, task, &s)?;
        if !rel.is_empty() {
            extracted.push((s, rel));
        }
    }
    if extracted[0].1.is_empty() {
        return Err(Error::Task(format!("target class {target} has no tuples")));
    }
    if extracted.len() < 2 {
        return Err(Error::Task(format!(
            "every contrasting class of {target} is empty"
        )));
    }

    // Removal is decided once over all classes so they share a schema.
    let union_tuples: Vec<_> = extracted
        .iter()
        .flat_map(|(_, r)| r.tuples().iter().cloned())
        .collect();
    let union = Relation::new(fact.schema().clone(), union_tuples)?;
    let kept = remove_attributes(&union, task, trees)?;
    let keep: Vec<String> = kept.schema().names().map(str::to_owned).collect();
    let work = working_trees(trees, &kept)?;
    let levels = initial_levels(task, &kept, &work)?;

    let removed: Vec<(String, Relation)> = extracted
        .iter()
        .map(|(c, r)| Ok((c.clone(), r.project(&keep)?)))
        .collect::<Result<_>>()?;

    let mut initial = Vec::new();
    let mut joint: Vec<usize> = vec![0; keep.len()];
    for (concept, rel) in &removed {
        let g = ascend(rel, &work, &levels)?;
        let a = enforce_attribute_thresholds(&g, &work, task.attr_threshold)?;
        let t = enforce_relation_threshold(&a, &work, task.rel_threshold)?;
        for (j, attr) in t.attributes().iter().enumerate() {
            joint[j] = joint[j].max(attr.level);
        }
        initial.push((concept.clone(), g));
    }
    let joint_levels: LevelMap = keep
        .iter()
        .zip(&joint)
        .map(|(name, &l)| (name.clone(), work.require(name).unwrap().level_name(l).to_owned()))
        .collect();
    let result = removed
        .iter()
        .map(|(c, r)| Ok((c.clone(), ascend(r, &work, &joint_levels)?)))
        .collect::<Result<Vec<_>>>()?;

    let class_attribute = tree.level_name(class_level).to_owned();
    Ok(ClassificationTrace {
        class_attribute: class_attribute.clone(),
        removed,
        trees: work,
        initial: ClassifiedRelation {
            class_attribute: class_attribute.clone(),
            classes: initial,
        },
        result: ClassifiedRelation {
            class_attribute,
            classes: result,
        },
    })
}

pub fn learn_classification(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
) -> Result<ClassifiedRelation> {
    if task.mode != Mode::Classification {
        return Err(Error::Task("learn_classification needs a classification task".into()));
    }
    Ok(trace_classification(db, trees, task)?.result)
}
