use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

pub use rust_decimal::Decimal;

/// A non-empty set of concept names. Produced when simplification unions
/// cells that differ on a single attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptSet(BTreeSet<String>);

impl ConceptSet {
    /// Returns `None` for an empty input.
    pub fn new<I, S>(names: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        if set.is_empty() {
            None
        } else {
            Some(ConceptSet(set))
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn is_superset(&self, other: &ConceptSet) -> bool {
        self.0.is_superset(&other.0)
    }

    pub fn union(&self, other: &ConceptSet) -> ConceptSet {
        ConceptSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub(crate) fn as_btree(&self) -> &BTreeSet<String> {
        &self.0
    }
}

impl fmt::Display for ConceptSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, name) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(name)?;
        }
        f.write_str("}")
    }
}

/// A single relational cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Text(String),
    Number(Decimal),
    Set(ConceptSet),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            Value::Number(d) => Some(*d),
            _ => None,
        }
    }

    /// The cell viewed as a set of concept names. Numbers render as their text.
    pub fn concept_names(&self) -> ConceptSet {
        match self {
            Value::Set(s) => s.clone(),
            other => ConceptSet::new([other.to_string()]).expect("single name"),
        }
    }

    /// Collapses a one-element set to a plain text concept.
    pub fn from_names(names: ConceptSet) -> Value {
        if names.len() == 1 {
            Value::Text(names.iter().next().unwrap().to_owned())
        } else {
            Value::Set(names)
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Number(_) => 0,
            Value::Text(_) => 1,
            Value::Set(_) => 2,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => f.write_str(s),
            Value::Number(d) => write!(f, "{d}"),
            Value::Set(s) => write!(f, "{s}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<Decimal> for Value {
    fn from(d: Decimal) -> Self {
        Value::Number(d)
    }
}

/// Canonical order: numbers numerically, everything else by rendered text.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Set(a), Value::Set(b)) => a.cmp(b),
            _ => self
                .to_string()
                .cmp(&other.to_string())
                .then(self.rank().cmp(&other.rank())),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn parse_decimal(s: &str) -> Option<Decimal> {
    let t = s.trim();
    if t.is_empty() || t.contains(['e', 'E']) {
        return None;
    }
    t.parse::<Decimal>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_their_text() {
        for s in ["3.5", "3.0", "0.00", "4", "12.25"] {
            let d = parse_decimal(s).unwrap();
            assert_eq!(Value::Number(d).to_string(), s);
        }
        assert_eq!(parse_decimal("3.0"), parse_decimal("3.00"));
        assert!(parse_decimal("x.5").is_none());
        assert!(parse_decimal("").is_none());
    }

    #[test]
    fn concept_set_is_non_empty_and_deduplicated() {
        assert!(ConceptSet::new(Vec::<String>::new()).is_none());
        let s = ConceptSet::new(["art", "science", "art"]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.to_string(), "{art, science}");
    }

    #[test]
    fn singleton_set_collapses_to_text() {
        let s = ConceptSet::new(["Good"]).unwrap();
        assert_eq!(Value::from_names(s), Value::text("Good"));
    }

    #[test]
    fn ordering_is_consistent_with_equality() {
        let a = Value::Number(parse_decimal("3.0").unwrap());
        let b = Value::Number(parse_decimal("3.00").unwrap());
        assert_eq!(a.cmp(&b), Ordering::Equal);
        let t = Value::text("{a}");
        let s = Value::Set(ConceptSet::new(["a"]).unwrap());
        assert_ne!(t.cmp(&s), Ordering::Equal);
    }
}
