//! The student dataset shipped with the crate: a twelve-row fact table and
//! four hierarchy tables laid out as a star schema.

use crate::dataset::Dataset;
use crate::error::Result;

pub const STUDENT_CSV: &str = include_str!("../data/student/student.csv");
pub const HIERARCHY_CAT_CSV: &str = include_str!("../data/student/hierarchy_cat.csv");
pub const HIERARCHY_MAJOR_CSV: &str = include_str!("../data/student/hierarchy_major.csv");
pub const HIERARCHY_BIRTH_CSV: &str = include_str!("../data/student/hierarchy_birth.csv");
pub const HIERARCHY_GPA_CSV: &str = include_str!("../data/student/hierarchy_gpa.csv");

pub const GRADUATE_TASK: &str = include_str!("../data/student/graduate.json");
pub const UNDERGRADUATE_TASK: &str = include_str!("../data/student/undergraduate.json");
pub const CLASSIFICATION_TASK: &str = include_str!("../data/student/classification.json");

pub const HIERARCHY_TABLES: [(&str, &str); 4] = [
    ("hierarchy_cat", HIERARCHY_CAT_CSV),
    ("hierarchy_major", HIERARCHY_MAJOR_CSV),
    ("hierarchy_birth", HIERARCHY_BIRTH_CSV),
    ("hierarchy_gpa", HIERARCHY_GPA_CSV),
];

pub fn student() -> Result<Dataset> {
    Dataset::from_sources("student", STUDENT_CSV.as_bytes(), &HIERARCHY_TABLES)
}

/// The student dataset with a different fact table over the same hierarchies.
pub fn with_fact(fact_csv: &str) -> Result<Dataset> {
    Dataset::from_sources("student", fact_csv.as_bytes(), &HIERARCHY_TABLES)
}
