//! A fact table plus its hierarchy tables, loaded both as relations (for the
//! SQL executor) and as concept trees (for the induction engine).

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hierarchy::{ConceptTree, HierarchySet, TreeKind};
use crate::relation::{fold, Database};

#[derive(Clone, Debug)]
pub struct Dataset {
    pub fact: String,
    pub db: Database,
    pub trees: HierarchySet,
}

impl Dataset {
    pub fn from_sources<R: Read>(
        fact: &str,
        fact_csv: R,
        hierarchies: &[(&str, &str)],
    ) -> Result<Self> {
        let mut db = Database::new();
        db.load_csv(fact, fact_csv, &HashMap::new())?;
        let mut trees = HierarchySet::new();
        for (table, text) in hierarchies {
            add_hierarchy(&mut db, &mut trees, table, text, None)
                .map_err(|e| e.in_file(format!("{table}.csv")))?;
        }
        Ok(Dataset {
            fact: fact.to_owned(),
            db,
            trees,
        })
    }

    /// Loads `<dir>/<fact>.csv` and every `hierarchy_*.csv` in `dir`. The
    /// attribute a discovered hierarchy generalizes is its first header
    /// column (or the `_start` prefix for range tables). `explicit` maps an
    /// attribute to a hierarchy file and wins over discovery.
    pub fn load_dir(dir: &Path, fact: &str, explicit: &[(String, PathBuf)]) -> Result<Self> {
        let fact_path = dir.join(format!("{fact}.csv"));
        let fact_file = fs::File::open(&fact_path)
            .map_err(|e| Error::from(e).in_file(fact_path.display().to_string()))?;
        let mut db = Database::new();
        db.load_csv(fact, fact_file, &HashMap::new())
            .map_err(|e| e.in_file(fact_path.display().to_string()))?;
        let mut trees = HierarchySet::new();

        for (attr, path) in explicit {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::from(e).in_file(path.display().to_string()))?;
            let table = table_name(path);
            add_hierarchy(&mut db, &mut trees, &table, &text, Some(attr))
                .map_err(|e| e.in_file(path.display().to_string()))?;
        }

        let mut discovered: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::from(e).in_file(dir.display().to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                let lower = name.to_lowercase();
                lower.starts_with("hierarchy_") && lower.ends_with(".csv")
            })
            .collect();
        discovered.sort();
        for path in discovered {
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::from(e).in_file(path.display().to_string()))?;
            let tree = ConceptTree::load(text.as_bytes())
                .map_err(|e| e.in_file(path.display().to_string()))?;
            if explicit.iter().any(|(a, _)| fold(a) == fold(tree.attribute())) {
                continue;
            }
            add_hierarchy(&mut db, &mut trees, &table_name(&path), &text, None)
                .map_err(|e| e.in_file(path.display().to_string()))?;
        }
        Ok(Dataset {
            fact: fact.to_owned(),
            db,
            trees,
        })
    }

    pub fn fact_relation(&self) -> Result<&crate::relation::Relation> {
        self.db.relation(&self.fact)
    }
}

fn table_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("hierarchy")
        .to_owned()
}

fn add_hierarchy(
    db: &mut Database,
    trees: &mut HierarchySet,
    table: &str,
    text: &str,
    attribute: Option<&str>,
) -> Result<()> {
    let sniffed = ConceptTree::load(text.as_bytes())?;
    let tree = match attribute {
        None => sniffed,
        Some(attr) if sniffed.kind() == TreeKind::NumericRange => {
            ConceptTree::load_numeric(text.as_bytes(), attr)?
        }
        Some(attr) => ConceptTree::load_categorical(text.as_bytes(), attr)?,
    };
    db.load_csv(table, text.as_bytes(), &HashMap::new())?;
    trees.insert(tree.with_table(table))
}
