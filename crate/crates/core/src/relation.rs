//! In-memory relations: typed schemas, value rows and a named collection of
//! relations. Relations are immutable once built; every operation returns a
//! new relation.

use std::collections::{HashMap, HashSet};
use std::io::Read;

use crate::error::{Error, Result};
use crate::value::{parse_decimal, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Categorical,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: Kind,
}

impl AttributeSpec {
    pub fn new(name: impl Into<String>, kind: Kind) -> Self {
        AttributeSpec {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered attribute list. Names are matched case-insensitively.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if attr.name.trim().is_empty() {
                return Err(Error::Schema("empty attribute name".into()));
            }
            if !seen.insert(fold(&attr.name)) {
                return Err(Error::Schema(format!(
                    "duplicate attribute name {:?}",
                    attr.name
                )));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        let key = fold(name);
        self.attributes.iter().position(|a| fold(&a.name) == key)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::Schema(format!("unknown attribute {name:?}")))
    }
}

pub type Tuple = Vec<Value>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    schema: Schema,
    tuples: Vec<Tuple>,
}

impl Relation {
    /// Checks arity and per-kind typing of every tuple.
    pub fn new(schema: Schema, tuples: Vec<Tuple>) -> Result<Self> {
        for (i, tuple) in tuples.iter().enumerate() {
            if tuple.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "tuple {} has {} values, schema has {} attributes",
                    i + 1,
                    tuple.len(),
                    schema.len()
                )));
            }
            for (value, attr) in tuple.iter().zip(schema.attributes()) {
                let ok = matches!(
                    (attr.kind, value),
                    (Kind::Numeric, Value::Number(_))
                        | (Kind::Categorical, Value::Text(_))
                        | (Kind::Categorical, Value::Set(_))
                );
                if !ok {
                    return Err(Error::Schema(format!(
                        "tuple {}: value {} does not match the kind of {}",
                        i + 1,
                        value,
                        attr.name
                    )));
                }
            }
        }
        Ok(Relation { schema, tuples })
    }

    pub fn empty(schema: Schema) -> Self {
        Relation {
            schema,
            tuples: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.schema.require(name)
    }

    /// Keeps `keep` in the given order. Duplicates and row order are preserved.
    pub fn project<S: AsRef<str>>(&self, keep: &[S]) -> Result<Relation> {
        let idx = keep
            .iter()
            .map(|n| self.schema.require(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let schema = Schema::new(
            idx.iter()
                .map(|&i| self.schema.attributes[i].clone())
                .collect(),
        )?;
        let tuples = self
            .tuples
            .iter()
            .map(|t| idx.iter().map(|&i| t[i].clone()).collect())
            .collect();
        Ok(Relation { schema, tuples })
    }

    pub fn distinct_count(&self, attribute: &str) -> Result<usize> {
        let i = self.schema.require(attribute)?;
        Ok(self.tuples.iter().map(|t| &t[i]).collect::<HashSet<_>>().len())
    }

    pub fn filter(&self, mut keep: impl FnMut(&Tuple) -> Result<bool>) -> Result<Relation> {
        let mut tuples = Vec::new();
        for t in &self.tuples {
            if keep(t)? {
                tuples.push(t.clone());
            }
        }
        Ok(Relation {
            schema: self.schema.clone(),
            tuples,
        })
    }

    /// Same multiset of tuples, sorted canonically. Two relations are equal as
    /// multisets iff their canonical forms are equal.
    pub fn canonical(&self) -> Relation {
        let mut tuples = self.tuples.clone();
        tuples.sort();
        Relation {
            schema: self.schema.clone(),
            tuples,
        }
    }
}

/// Reads an RFC-4180 CSV with a header row. A column is numeric when every
/// cell parses as a decimal (and there is at least one row) unless `kinds`
/// overrides it. Empty cells are rejected.
pub fn load_relation<R: Read>(source: R, kinds: &HashMap<String, Kind>) -> Result<Relation> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let overrides: HashMap<String, Kind> = kinds.iter().map(|(k, v)| (fold(k), *v)).collect();
    // Validate header names before looking at rows.
    Schema::new(
        header
            .iter()
            .map(|h| AttributeSpec::new(h.clone(), Kind::Categorical))
            .collect(),
    )?;
    for name in overrides.keys() {
        if !header.iter().any(|h| fold(h) == *name) {
            return Err(Error::Schema(format!(
                "kind override for unknown column {name:?}"
            )));
        }
    }

    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Load {
            row,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Load {
                row,
                message: format!(
                    "expected {} columns, found {}",
                    header.len(),
                    record.len()
                ),
            });
        }
        let cells: Vec<String> = record.iter().map(|c| c.trim().to_owned()).collect();
        if let Some(col) = cells.iter().position(String::is_empty) {
            return Err(Error::Load {
                row,
                message: format!("empty cell in column {}", header[col]),
            });
        }
        raw.push(cells);
    }

    let attributes: Vec<AttributeSpec> = header
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let kind = overrides.get(&fold(name)).copied().unwrap_or_else(|| {
                if !raw.is_empty() && raw.iter().all(|r| parse_decimal(&r[c]).is_some()) {
                    Kind::Numeric
                } else {
                    Kind::Categorical
                }
            });
            AttributeSpec::new(name.clone(), kind)
        })
        .collect();

    let mut tuples = Vec::with_capacity(raw.len());
    for (i, cells) in raw.into_iter().enumerate() {
        let tuple = cells
            .into_iter()
            .zip(&attributes)
            .map(|(cell, attr)| match attr.kind {
                Kind::Categorical => Ok(Value::Text(cell)),
                Kind::Numeric => parse_decimal(&cell).map(Value::Number).ok_or(Error::Type {
                    row: i + 1,
                    column: attr.name.clone(),
                    value: cell,
                }),
            })
            .collect::<Result<Tuple>>()?;
        tuples.push(tuple);
    }
    Relation::new(Schema::new(attributes)?, tuples)
}

/// Named relations: the fact table plus one table per concept hierarchy.
/// Lookup is case-insensitive; insertion order is kept.
#[derive(Clone, Debug, Default)]
pub struct Database {
    relations: Vec<(String, Relation)>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, relation: Relation) -> Result<()> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Schema("empty relation name".into()));
        }
        if self.get(&name).is_some() {
            return Err(Error::Schema(format!("duplicate relation name {name:?}")));
        }
        self.relations.push((name, relation));
        Ok(())
    }

    pub fn load_csv<R: Read>(
        &mut self,
        name: &str,
        source: R,
        kinds: &HashMap<String, Kind>,
    ) -> Result<()> {
        let relation = load_relation(source, kinds)?;
        self.insert(name, relation)
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        let key = fold(name);
        self.relations
            .iter()
            .find(|(n, _)| fold(n) == key)
            .map(|(_, r)| r)
    }

    pub fn relation(&self, name: &str) -> Result<&Relation> {
        self.get(name)
            .ok_or_else(|| Error::Schema(format!("unknown relation {name:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }
}

/// Case-fold used for every name comparison (attributes, relations, levels).
pub(crate) fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn load(text: &str) -> Result<Relation> {
        load_relation(text.as_bytes(), &HashMap::new())
    }

    #[test]
    fn loads_student_table() {
        let r = load(sample::STUDENT_CSV).unwrap();
        assert_eq!(r.len(), 12);
        assert_eq!(r.schema().len(), 5);
        let gpa = r.schema().require("gpa").unwrap();
        assert_eq!(r.schema().attributes()[gpa].kind, Kind::Numeric);
        assert_eq!(r.schema().attributes()[0].kind, Kind::Categorical);
        assert_eq!(r.distinct_count("Name").unwrap(), 12);
    }

    #[test]
    fn header_only_is_empty() {
        let r = load("a,b\n").unwrap();
        assert!(r.is_empty());
        assert_eq!(r.schema().len(), 2);
        assert_eq!(r.distinct_count("a").unwrap(), 0);
    }

    #[test]
    fn numeric_override_reports_row_and_column() {
        let kinds = HashMap::from([("GPA".to_owned(), Kind::Numeric)]);
        let err = load_relation(
            "Name,Category,Major,Birthplace,GPA\nAnton,M.A.,History,Vancouver,x.5\n".as_bytes(),
            &kinds,
        )
        .unwrap_err();
        match err {
            Error::Type { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "GPA");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_and_bad_headers_are_rejected() {
        assert!(matches!(load("a,b\n1,2\n3\n"), Err(Error::Load { row: 2, .. })));
        assert!(matches!(load("a,A\n1,2\n"), Err(Error::Schema(_))));
        assert!(matches!(load("a,b\n1,\n"), Err(Error::Load { row: 1, .. })));
    }

    #[test]
    fn quoted_cells() {
        let r = load("city,note\n\"Vancouver, BC\",\"say \"\"hi\"\"\"\n").unwrap();
        assert_eq!(r.tuples()[0][0], Value::text("Vancouver, BC"));
        assert_eq!(r.tuples()[0][1], Value::text("say \"hi\""));
    }

    #[test]
    fn projection() {
        let r = load(sample::STUDENT_CSV).unwrap();
        let all: Vec<&str> = r.schema().names().collect();
        assert_eq!(r.project(&all).unwrap(), r);

        let p = r.project(&["GPA", "major"]).unwrap();
        assert_eq!(p.schema().names().collect::<Vec<_>>(), ["GPA", "Major"]);
        assert_eq!(p.len(), 12);

        let none = r.project::<&str>(&[]).unwrap();
        assert!(none.schema().is_empty());
        assert_eq!(none.len(), 12);
        assert!(none.tuples().iter().all(|t| t.is_empty()));

        assert!(matches!(r.project(&["Age"]), Err(Error::Schema(m)) if m.contains("Age")));
    }

    #[test]
    fn database_lookup_is_case_insensitive() {
        let mut db = Database::new();
        db.load_csv("Student", sample::STUDENT_CSV.as_bytes(), &HashMap::new())
            .unwrap();
        assert!(db.get("STUDENT").is_some());
        assert!(db.insert("student", Relation::empty(Schema::default())).is_err());
        assert!(db.relation("teacher").is_err());
    }
}
