//! Runs each pipeline stage twice, once through the induction engine and
//! once as generated SQL through the executor, and compares the results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hierarchy::{HierarchySet, TreeKind};
use crate::induction::{trace_characteristic, trace_classification, ClassifiedRelation, GeneralizedRelation};
use crate::relation::{fold, Database, Relation};
use crate::sql;
use crate::sqlgen::{QueryPlan, Stage};
use crate::task::{LearningTask, Mode};
use crate::ANY;

/// Rows rendered as text, so that a numeric-looking concept read from a
/// hierarchy table compares equal to the same concept held as text.
pub type Rows = Vec<Vec<String>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub engine_only: Rows,
    pub sql_only: Rows,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail(Mismatch),
    Skipped(String),
}

#[derive(Clone, Debug)]
pub struct StageReport {
    pub stage: Stage,
    /// Stage name, qualified when a stage runs more than once.
    pub label: String,
    pub sql: Option<String>,
    pub status: Status,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    /// Problems found before any comparison, such as a fact value that
    /// matches a hierarchy leaf only when case is ignored.
    pub precheck: Vec<String>,
    pub stages: Vec<StageReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.precheck.is_empty()
            && self.stages.iter().all(|s| !matches!(s.status, Status::Fail(_)))
    }

    /// One line per stage, then the diff of the first failing stage.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.precheck {
            let _ = writeln!(out, "FAIL precheck: {p}");
        }
        for s in &self.stages {
            let _ = match &s.status {
                Status::Pass => writeln!(out, "PASS {}", s.label),
                Status::Fail(_) => writeln!(out, "FAIL {}", s.label),
                Status::Skipped(why) => writeln!(out, "SKIP {}: {why}", s.label),
            };
        }
        if let Some(s) = self.stages.iter().find(|s| matches!(s.status, Status::Fail(_))) {
            let Status::Fail(m) = &s.status else { unreachable!() };
            let _ = writeln!(out, "first mismatch in {}:", s.label);
            if let Some(sql) = &s.sql {
                for line in sql.lines() {
                    let _ = writeln!(out, "  | {line}");
                }
            }
            for (sign, rows) in [("- engine", &m.engine_only), ("+ sql", &m.sql_only)] {
                for r in rows.iter().take(10) {
                    let _ = writeln!(out, "  {sign}: {}", r.join(", "));
                }
                if rows.len() > 10 {
                    let _ = writeln!(out, "  {sign}: ... {} more", rows.len() - 10);
                }
            }
        }
        out
    }
}

fn rows_of(rel: &Relation) -> Rows {
    rel.tuples()
        .iter()
        .map(|t| t.iter().map(ToString::to_string).collect())
        .collect()
}

/// Multiset comparison.
pub fn compare(engine: Rows, sql: Rows) -> Option<Mismatch> {
    let mut counts: BTreeMap<Vec<String>, i64> = BTreeMap::new();
    for r in engine {
        *counts.entry(r).or_default() += 1;
    }
    for r in sql {
        *counts.entry(r).or_default() -= 1;
    }
    let mut m = Mismatch {
        engine_only: Vec::new(),
        sql_only: Vec::new(),
    };
    for (row, n) in counts {
        for _ in 0..n.unsigned_abs() {
            if n > 0 {
                m.engine_only.push(row.clone());
            } else {
                m.sql_only.push(row.clone());
            }
        }
    }
    (!m.engine_only.is_empty() || !m.sql_only.is_empty()).then_some(m)
}

/// Engine rows for a generalized relation with `ANY` columns dropped, as
/// the generated SQL leaves those attributes out.
pub fn generalized_rows(g: &GeneralizedRelation, votes: bool) -> Rows {
    let keep: Vec<usize> = g
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.level_name != ANY)
        .map(|(i, _)| i)
        .collect();
    g.tuples()
        .iter()
        .map(|t| {
            let mut row: Vec<String> = keep.iter().map(|&i| t.cells[i].to_string()).collect();
            if votes {
                row.push(t.vote.to_string());
            }
            row
        })
        .collect()
}

fn distinct_rows(g: &GeneralizedRelation) -> Rows {
    let mut rows = generalized_rows(g, false);
    rows.sort();
    rows.dedup();
    rows
}

pub fn classified_rows(c: &ClassifiedRelation) -> Rows {
    c.classes
        .iter()
        .flat_map(|(concept, g)| {
            generalized_rows(g, true).into_iter().map(move |mut r| {
                r.insert(0, concept.clone());
                r
            })
        })
        .collect()
}

/// Runs one generated statement. The inner `Err` carries the reason when
/// the stage cannot be expressed at these levels.
pub fn run_stage(
    plan: &QueryPlan,
    db: &Database,
    levels: &crate::induction::LevelMap,
    stage: Stage,
) -> Result<std::result::Result<(String, Relation), String>> {
    let script = match plan.select(levels, stage) {
        Ok(s) => s,
        Err(Error::Generation(why)) => return Ok(Err(why)),
        Err(e) => return Err(e),
    };
    let query = sql::parse_query(&script.text)?;
    Ok(Ok((script.text, sql::execute(&query, db)?)))
}

fn check(
    report: &mut ValidationReport,
    plan: &QueryPlan,
    db: &Database,
    levels: &crate::induction::LevelMap,
    stage: Stage,
    label: String,
    engine: Rows,
) -> Result<()> {
    let (sql, status) = match run_stage(plan, db, levels, stage)? {
        Err(why) => (None, Status::Skipped(why)),
        Ok((text, rel)) => {
            let status = match compare(engine, rows_of(&rel)) {
                None => Status::Pass,
                Some(m) => Status::Fail(m),
            };
            (Some(text), status)
        }
    };
    report.stages.push(StageReport {
        stage,
        label,
        sql,
        status,
    });
    Ok(())
}

/// Fact values that only match a hierarchy leaf when case is ignored. The
/// engine folds case; a SQL equi-join does not.
fn case_mismatches(
    db: &Database,
    trees: &HierarchySet,
    fact: &str,
    attributes: &[String],
) -> Result<Vec<String>> {
    let rel = db.relation(fact)?;
    let mut problems = Vec::new();
    for attr in attributes {
        let Some(tree) = trees.get(attr) else { continue };
        if tree.kind() != TreeKind::Categorical {
            continue;
        }
        let Some(table) = db.get(tree.table()) else { continue };
        let leaf_col = table.column(&tree.levels()[0])?;
        let leaves: Vec<String> = table.tuples().iter().map(|t| t[leaf_col].to_string()).collect();
        let col = rel.column(attr)?;
        let mut seen = Vec::new();
        for t in rel.tuples() {
            let v = t[col].to_string();
            if leaves.contains(&v) || seen.contains(&v) {
                continue;
            }
            seen.push(v.clone());
            if let Some(l) = leaves.iter().find(|l| fold(l) == fold(&v)) {
                problems.push(format!(
                    "{fact}.{attr} value {v:?} matches {} leaf {l:?} only when case is ignored",
                    tree.table()
                ));
            }
        }
    }
    Ok(problems)
}

fn characteristic_stages(
    report: &mut ValidationReport,
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
) -> Result<()> {
    let trace = trace_characteristic(db, trees, task)?;
    let plan = QueryPlan::new(db, trees, task)?;
    let initial = trace.initial.levels();
    let further = trace.thresholded.levels();
    let none = crate::induction::LevelMap::new();
    let stages: [(Stage, &crate::induction::LevelMap, Rows); 6] = [
        (Stage::SelectClass, &none, rows_of(&trace.target)),
        (Stage::AttributeRemoval, &none, rows_of(&trace.removed)),
        (Stage::AscendDistinct, &initial, distinct_rows(&trace.initial)),
        (Stage::AscendGroup, &initial, distinct_rows(&trace.initial)),
        (Stage::Vote, &initial, generalized_rows(&trace.initial, true)),
        (Stage::Further, &further, generalized_rows(&trace.thresholded, true)),
    ];
    for (stage, levels, rows) in stages {
        check(report, &plan, db, levels, stage, stage.name().to_owned(), rows)?;
    }
    Ok(())
}

/// Validates every stage of `task`. Input problems the engine itself
/// rejects (unknown leaves, bad levels, empty classes) are returned as
/// errors; disagreements between the two routes are reported as failures.
pub fn validate(db: &Database, trees: &HierarchySet, task: &LearningTask) -> Result<ValidationReport> {
    task.validate()?;
    let fact = db.relation(&task.fact)?;
    let mut attrs: Vec<String> = vec![task.target.attribute.clone()];
    attrs.extend(
        fact.schema()
            .names()
            .filter(|n| fold(n) != fold(&task.target.attribute))
            .map(str::to_owned),
    );
    let mut report = ValidationReport {
        precheck: case_mismatches(db, trees, &task.fact, &attrs)?,
        stages: Vec::new(),
    };

    match task.mode {
        Mode::Characteristic => {
            characteristic_stages(&mut report, db, trees, task)?;
        }
        Mode::Classification => {
            let ctrace = trace_classification(db, trees, task)?;
            let mut char_task = task.clone();
            char_task.mode = Mode::Characteristic;
            characteristic_stages(&mut report, db, trees, &char_task)?;
            let plan = QueryPlan::new(db, trees, task)?;
            for (which, classified) in [("initial", &ctrace.initial), ("final", &ctrace.result)] {
                let levels = classified.classes[0].1.levels();
                check(
                    &mut report,
                    &plan,
                    db,
                    &levels,
                    Stage::Classification,
                    format!("classification ({which} levels)"),
                    classified_rows(classified),
                )?;
            }
        }
    }
    Ok(report)
}
