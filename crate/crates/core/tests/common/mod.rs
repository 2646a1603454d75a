//! Test helpers shared by the acceptance and property suites: random student
//! tables over the shipped hierarchies, and a hierarchy lookup written
//! directly against the CSV text so it shares no code with the engine.

#![allow(dead_code)]

use std::collections::BTreeMap;

use aoi_core::sample;
use proptest::prelude::*;

pub const CATEGORIES: [&str; 7] = ["M.A.", "M.S.", "Ph.D.", "Freshman", "Sophomore", "Junior", "Senior"];
pub const GRADUATE: [&str; 3] = ["M.A.", "M.S.", "Ph.D."];
pub const UNDERGRADUATE: [&str; 4] = ["Freshman", "Sophomore", "Junior", "Senior"];
pub const MAJORS: [&str; 10] = [
    "History", "Liberal arts", "Music", "literature", "Math", "Physics", "Chemistry", "Biology",
    "Computing", "Statistics",
];
pub const BIRTHPLACES: [&str; 11] = [
    "Vancouver", "Victoria", "Richmond", "Burnaby", "Calgary", "Edmonton", "Ottawa", "Toronto",
    "Bombay", "Shanghai", "Nanjing",
];

pub const MAJOR_LEVELS: [&str; 3] = ["major", "studyprog", "ANY"];
pub const BIRTH_LEVELS: [&str; 4] = ["birthplace", "city", "country", "ANY"];
pub const GPA_LEVELS: [&str; 3] = ["gpa", "range", "ANY"];

#[derive(Clone, Debug)]
pub struct Student {
    pub category: &'static str,
    pub major: &'static str,
    pub birthplace: &'static str,
    /// Hundredths of a grade point, 0..=400.
    pub gpa: u32,
}

impl Student {
    pub fn gpa_text(&self) -> String {
        format!("{}.{:02}", self.gpa / 100, self.gpa % 100)
    }
}

fn student(categories: &'static [&'static str]) -> impl Strategy<Value = Student> {
    (
        prop::sample::select(categories),
        prop::sample::select(&MAJORS[..]),
        prop::sample::select(&BIRTHPLACES[..]),
        0u32..=400,
    )
        .prop_map(|(category, major, birthplace, gpa)| Student {
            category,
            major,
            birthplace,
            gpa,
        })
}

/// 2 to 20 students, the first graduate and the second undergraduate so
/// both classes are always present.
pub fn students() -> impl Strategy<Value = Vec<Student>> {
    (
        student(&GRADUATE),
        student(&UNDERGRADUATE),
        prop::collection::vec(student(&CATEGORIES), 0..=18),
    )
        .prop_map(|(g, u, rest)| {
            let mut all = vec![g, u];
            all.extend(rest);
            all
        })
}

pub fn to_csv(students: &[Student]) -> String {
    let mut out = String::from("Name,Category,Major,Birthplace,GPA\n");
    for (i, s) in students.iter().enumerate() {
        out.push_str(&format!(
            "s{i},{},{},{},{}\n",
            s.category,
            s.major,
            s.birthplace,
            s.gpa_text()
        ));
    }
    out
}

/// Levels for (Major, Birthplace, GPA).
pub fn levels() -> impl Strategy<Value = [&'static str; 3]> {
    (
        prop::sample::select(&MAJOR_LEVELS[..]),
        prop::sample::select(&BIRTH_LEVELS[..]),
        prop::sample::select(&GPA_LEVELS[..]),
    )
        .prop_map(|(a, b, c)| [a, b, c])
}

/// Rows of a hierarchy CSV, split by hand.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    (header, rows)
}

fn hundredths(s: &str) -> i64 {
    let (int, frac) = s.split_once('.').unwrap_or((s, "0"));
    let frac = format!("{frac:0<2}");
    int.parse::<i64>().unwrap() * 100 + frac[..2].parse::<i64>().unwrap()
}

/// The ancestor of `value` at `level`, read straight off the CSV rows.
pub fn oracle_lift(attribute: &str, value: &str, level: &str) -> String {
    if level == "ANY" {
        return "ANY".into();
    }
    let text = match attribute.to_lowercase().as_str() {
        "category" => sample::HIERARCHY_CAT_CSV,
        "major" => sample::HIERARCHY_MAJOR_CSV,
        "birthplace" => sample::HIERARCHY_BIRTH_CSV,
        "gpa" => sample::HIERARCHY_GPA_CSV,
        other => panic!("no hierarchy for {other}"),
    };
    let (header, rows) = table(text);
    if header[0].ends_with("_start") {
        if level.eq_ignore_ascii_case(attribute) {
            return value.to_string();
        }
        let x = hundredths(value);
        let row = rows
            .iter()
            .find(|r| hundredths(&r[0]) <= x && x <= hundredths(&r[1]))
            .unwrap_or_else(|| panic!("{value} is in no range"));
        let col = header.iter().position(|h| h == level).unwrap();
        return row[col].clone();
    }
    let row = rows
        .iter()
        .find(|r| r[0] == value)
        .unwrap_or_else(|| panic!("{value} is not a leaf of {attribute}"));
    let col = header.iter().position(|h| h == level).unwrap();
    row[col].clone()
}

/// Map every row to its ancestors, then group identical rows and count.
pub fn oracle_ascend(
    rows: &[[String; 3]],
    levels: &[&str; 3],
) -> BTreeMap<Vec<String>, u64> {
    let attrs = ["Major", "Birthplace", "GPA"];
    let mut out = BTreeMap::new();
    for r in rows {
        let key: Vec<String> = (0..3)
            .map(|i| oracle_lift(attrs[i], &r[i], levels[i]))
            .collect();
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

pub fn is_graduate(category: &str) -> bool {
    GRADUATE.contains(&category)
}
