//! Concept trees encoded as tables, one table per tree.
//!
//! A categorical table has one column per level, leaf level first
//! (`birthplace,city,country`). A numeric table starts with an inclusive
//! range (`gpa_start,gpa_fin`) followed by the concept levels above it
//! (`range`). Every tree has an implicit `ANY` root above its last column.
//!
//! Levels are indexed from the value level (0) upward. For a numeric tree
//! level 0 holds the raw numbers and is named after the attribute; the range
//! concepts sit at level 1.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use crate::error::{Error, Result};
use crate::relation::fold;
use crate::value::{parse_decimal, Decimal, Value};

pub const ANY: &str = "ANY";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Categorical,
    NumericRange,
    /// Synthesized for a retained attribute that has no hierarchy table:
    /// observed values as leaves directly under `ANY`.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptNode {
    pub name: String,
    pub level: usize,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumericRange {
    pub lo: Decimal,
    pub hi: Decimal,
    pub concept: String,
}

#[derive(Clone, Debug)]
pub struct ConceptTree {
    attribute: String,
    table: String,
    kind: TreeKind,
    levels: Vec<String>,
    nodes: Vec<ConceptNode>,
    index: HashMap<String, usize>,
    ranges: Vec<NumericRange>,
}

const ROOT: usize = 0;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(source: R, what: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(h) => h?.iter().map(|c| c.trim().to_owned()).collect(),
        None => return Err(Error::Hierarchy(format!("{what}: empty hierarchy file"))),
    };
    if header.iter().any(String::is_empty) {
        return Err(Error::Hierarchy(format!("{what}: empty header column")));
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let row: Vec<String> = rec.iter().map(|c| c.trim().to_owned()).collect();
        if row.len() != header.len() || row.iter().any(String::is_empty) {
            return Err(Error::Hierarchy(format!(
                "{what}: row {} must have {} non-empty cells",
                i + 1,
                header.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Hierarchy(format!("{what}: hierarchy has no rows")));
    }
    Ok(Table { header, rows })
}

impl ConceptTree {
    fn empty(attribute: &str, kind: TreeKind, levels: Vec<String>) -> Self {
        let mut index = HashMap::new();
        index.insert(fold(ANY), ROOT);
        ConceptTree {
            attribute: attribute.to_owned(),
            table: format!("hierarchy_{}", attribute.to_lowercase()),
            kind,
            nodes: vec![ConceptNode {
                name: ANY.to_owned(),
                level: levels.len(),
                parent: None,
            }],
            levels,
            index,
            ranges: Vec::new(),
        }
    }

    /// Reads a categorical hierarchy table. Identical paths are tolerated;
    /// a concept given two different parents is an error.
    pub fn load_categorical<R: Read>(source: R, attribute: &str) -> Result<Self> {
        let table = read_table(source, attribute)?;
        let mut tree = ConceptTree::empty(attribute, TreeKind::Categorical, table.header);
        for row in &table.rows {
            tree.add_path(row, 0)?;
        }
        Ok(tree)
    }

    /// Reads a numeric range table `<attr>_start,<attr>_fin,<level>[,...]`.
    pub fn load_numeric<R: Read>(source: R, attribute: &str) -> Result<Self> {
        let table = read_table(source, attribute)?;
        let h = &table.header;
        let prefix = fold(attribute);
        if h.len() < 3
            || fold(&h[0]) != format!("{prefix}_start")
            || fold(&h[1]) != format!("{prefix}_fin")
        {
            return Err(Error::Hierarchy(format!(
                "numeric hierarchy for {attribute} needs header {prefix}_start,{prefix}_fin,<level>[,...]"
            )));
        }
        let mut levels = vec![attribute.to_owned()];
        levels.extend(h[2..].iter().cloned());
        let mut tree = ConceptTree::empty(attribute, TreeKind::NumericRange, levels);

        let mut ranges: Vec<(usize, NumericRange)> = Vec::new();
        for (i, row) in table.rows.iter().enumerate() {
            let bound = |s: &str| {
                parse_decimal(s).ok_or_else(|| {
                    Error::Range(format!("row {}: {s:?} is not a number", i + 1))
                })
            };
            let (lo, hi) = (bound(&row[0])?, bound(&row[1])?);
            if lo > hi {
                return Err(Error::Range(format!(
                    "row {}: start {lo} is greater than end {hi}",
                    i + 1
                )));
            }
            tree.add_path(&row[2..], 1)?;
            let concept = tree.nodes[tree.index[&fold(&row[2])]].name.clone();
            ranges.push((i + 1, NumericRange { lo, hi, concept }));
        }
        ranges.sort_by_key(|r| r.1.lo);
        for pair in ranges.windows(2) {
            let ((ra, a), (rb, b)) = (&pair[0], &pair[1]);
            if b.lo <= a.hi {
                return Err(Error::Range(format!(
                    "rows {} and {} overlap: [{}, {}] and [{}, {}]",
                    ra.min(rb),
                    ra.max(rb),
                    a.lo,
                    a.hi,
                    b.lo,
                    b.hi
                )));
            }
        }
        tree.ranges = ranges.into_iter().map(|(_, r)| r).collect();
        Ok(tree)
    }

    /// Picks the numeric or categorical reader from the header shape. The
    /// attribute is the leaf column name (or the `_start` prefix).
    pub fn load<R: Read>(mut source: R) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        let first = text.lines().next().unwrap_or("");
        let cols: Vec<String> = first.split(',').map(fold).collect();
        match (cols.first(), cols.get(1)) {
            (Some(a), Some(b))
                if a.ends_with("_start")
                    && b.ends_with("_fin")
                    && a.trim_end_matches("_start") == b.trim_end_matches("_fin") =>
            {
                let attr = first.split(',').next().unwrap().trim();
                let attr = &attr[..attr.len() - "_start".len()];
                ConceptTree::load_numeric(text.as_bytes(), attr)
            }
            (Some(a), _) if !a.is_empty() => {
                let attr = first.split(',').next().unwrap().trim().trim_matches('"');
                ConceptTree::load_categorical(text.as_bytes(), attr)
            }
            _ => Err(Error::Hierarchy("empty hierarchy file".into())),
        }
    }

    /// A one-level tree whose leaves are the given values.
    pub fn identity<I, S>(attribute: &str, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tree =
            ConceptTree::empty(attribute, TreeKind::Identity, vec![attribute.to_owned()]);
        for v in values {
            tree.add_path(&[v.as_ref().to_owned()], 0)?;
        }
        Ok(tree)
    }

    pub fn with_table(mut self, table: impl Into<String>) -> Self {
        self.table = table.into();
        self
    }

    fn add_path(&mut self, path: &[String], base_level: usize) -> Result<()> {
        let mut child: Option<usize> = None;
        // Walk from the top of the path down so parents exist first.
        for (offset, name) in path.iter().enumerate().rev() {
            let level = base_level + offset;
            let parent = child.unwrap_or(ROOT);
            let key = fold(name);
            let id = match self.index.get(&key) {
                Some(&id) => {
                    let node = &self.nodes[id];
                    if node.level != level {
                        return Err(Error::Hierarchy(format!(
                            "concept {:?} appears at two levels ({} and {})",
                            name,
                            self.level_name(node.level),
                            self.level_name(level)
                        )));
                    }
                    if node.parent != Some(parent) {
                        return Err(Error::Hierarchy(format!(
                            "conflicting parentage for {:?}: {} and {}",
                            node.name,
                            self.nodes[node.parent.unwrap_or(ROOT)].name,
                            self.nodes[parent].name
                        )));
                    }
                    id
                }
                None => {
                    self.nodes.push(ConceptNode {
                        name: name.clone(),
                        level,
                        parent: Some(parent),
                    });
                    let id = self.nodes.len() - 1;
                    self.index.insert(key, id);
                    id
                }
            };
            child = Some(id);
        }
        Ok(())
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    /// Relation name of the table this tree was read from.
    pub fn table(&self) -> &str {
        &self.table
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    /// Level names from the value level upward, without `ANY`.
    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn ranges(&self) -> &[NumericRange] {
        &self.ranges
    }

    pub fn root_level(&self) -> usize {
        self.levels.len()
    }

    pub fn level_name(&self, level: usize) -> &str {
        self.levels.get(level).map(String::as_str).unwrap_or(ANY)
    }

    pub fn level_index(&self, name: &str) -> Result<usize> {
        let key = fold(name);
        if key == fold(ANY) {
            return Ok(self.root_level());
        }
        self.levels
            .iter()
            .position(|l| fold(l) == key)
            .ok_or_else(|| Error::Level {
                attribute: self.attribute.clone(),
                level: name.to_owned(),
            })
    }

    /// The first level above the raw values; identity trees stay at their
    /// leaves.
    pub fn minimal_level(&self) -> usize {
        match self.kind {
            TreeKind::Identity => 0,
            _ => 1.min(self.root_level()),
        }
    }

    pub fn node(&self, concept: &str) -> Option<&ConceptNode> {
        self.index.get(&fold(concept)).map(|&i| &self.nodes[i])
    }

    fn node_id(&self, concept: &str) -> Result<usize> {
        self.index
            .get(&fold(concept))
            .copied()
            .ok_or_else(|| Error::Hierarchy(format!(
                "unknown concept {concept:?} in hierarchy for {}",
                self.attribute
            )))
    }

    /// Concept names at one level, in table order.
    pub fn concepts_at(&self, level: usize) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.level == level)
            .map(|n| n.name.as_str())
            .collect()
    }

    pub fn children_of(&self, concept: &str) -> Result<BTreeSet<String>> {
        let id = self.node_id(concept)?;
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.parent == Some(id))
            .map(|n| n.name.clone())
            .collect())
    }

    pub fn parent_of(&self, concept: &str) -> Result<Option<&str>> {
        let id = self.node_id(concept)?;
        Ok(self.nodes[id].parent.map(|p| self.nodes[p].name.as_str()))
    }

    /// Finest concepts under `concept` (itself when it has no children).
    pub fn leaves_under(&self, concept: &str) -> Result<BTreeSet<String>> {
        let id = self.node_id(concept)?;
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let kids: Vec<usize> = (0..self.nodes.len())
                .filter(|&c| self.nodes[c].parent == Some(n))
                .collect();
            if kids.is_empty() {
                out.insert(self.nodes[n].name.clone());
            }
            stack.extend(kids);
        }
        Ok(out)
    }

    fn classify(&self, x: Decimal) -> Option<&NumericRange> {
        self.ranges.iter().find(|r| r.lo <= x && x <= r.hi)
    }

    fn unknown(&self, value: &Value) -> Error {
        Error::UnknownLeaf {
            attribute: self.attribute.clone(),
            value: value.to_string(),
        }
    }

    /// Level at which `value` currently sits.
    pub fn level_of(&self, value: &Value) -> Result<usize> {
        match (self.kind, value) {
            (TreeKind::NumericRange, Value::Number(_)) => Ok(0),
            (_, Value::Set(s)) => {
                let first = s.iter().next().expect("non-empty");
                self.node(first)
                    .map(|n| n.level)
                    .ok_or_else(|| self.unknown(value))
            }
            _ => {
                if let Some(n) = self.node(&value.to_string()) {
                    return Ok(n.level);
                }
                if self.kind == TreeKind::NumericRange
                    && parse_decimal(&value.to_string()).is_some()
                {
                    return Ok(0);
                }
                Err(self.unknown(value))
            }
        }
    }

    /// Lifts a cell to `to_level`. Raw numbers at level 0 stay numbers;
    /// everything else becomes the ancestor concept's canonical name.
    pub fn lift(&self, value: &Value, to_level: usize) -> Result<Value> {
        if to_level > self.root_level() {
            return Err(Error::Level {
                attribute: self.attribute.clone(),
                level: to_level.to_string(),
            });
        }
        let start = match (self.kind, value) {
            (TreeKind::NumericRange, _) if self.node(&value.to_string()).is_none() => {
                let x = match value {
                    Value::Number(d) => *d,
                    other => parse_decimal(&other.to_string()).ok_or_else(|| self.unknown(other))?,
                };
                if to_level == 0 {
                    return Ok(Value::Number(x));
                }
                let range = self.classify(x).ok_or_else(|| self.unknown(value))?;
                self.index[&fold(&range.concept)]
            }
            (_, Value::Set(_)) => {
                return Err(Error::Hierarchy(format!(
                    "cannot generalize concept set {value} of {}",
                    self.attribute
                )))
            }
            _ => self
                .index
                .get(&fold(&value.to_string()))
                .copied()
                .ok_or_else(|| self.unknown(value))?,
        };
        let mut id = start;
        if self.nodes[id].level > to_level {
            return Err(Error::Level {
                attribute: self.attribute.clone(),
                level: format!(
                    "{} (below {} of {})",
                    self.level_name(to_level),
                    self.level_name(self.nodes[id].level),
                    self.nodes[id].name
                ),
            });
        }
        while self.nodes[id].level < to_level {
            id = self.nodes[id].parent.expect("non-root node has a parent");
        }
        Ok(Value::Text(self.nodes[id].name.clone()))
    }

    /// The ancestor concept of `value` at the named level.
    pub fn generalize(&self, value: &Value, to_level: &str) -> Result<String> {
        let level = self.level_index(to_level)?;
        Ok(self.lift(value, level)?.to_string())
    }
}

/// Trees keyed by attribute name (case-insensitive).
#[derive(Clone, Debug, Default)]
pub struct HierarchySet {
    trees: Vec<ConceptTree>,
}

impl HierarchySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, tree: ConceptTree) -> Result<()> {
        if self.get(tree.attribute()).is_some() {
            return Err(Error::Hierarchy(format!(
                "two hierarchies for attribute {}",
                tree.attribute()
            )));
        }
        self.trees.push(tree);
        Ok(())
    }

    pub fn get(&self, attribute: &str) -> Option<&ConceptTree> {
        let key = fold(attribute);
        self.trees.iter().find(|t| fold(t.attribute()) == key)
    }

    pub fn require(&self, attribute: &str) -> Result<&ConceptTree> {
        self.get(attribute).ok_or_else(|| {
            Error::Hierarchy(format!(
                "no hierarchy for attribute {attribute} (expected hierarchy_{}.csv)",
                attribute.to_lowercase()
            ))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConceptTree> {
        self.trees.iter()
    }
}
