//! SQL text for each induction stage, written against the star schema: the
//! fact table joined to one table per concept hierarchy.
//!
//! Aliases follow a fixed convention: `a` is the fact table, `b` the
//! hierarchy of the target attribute, and `c`, `d`, ... the hierarchies of
//! the kept attributes in fact-schema order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hierarchy::{ConceptTree, HierarchySet, TreeKind};
use crate::induction::{
    extract_target, remove_attributes, trace_characteristic, trace_classification, LevelMap,
};
use crate::relation::{fold, Database, Kind, Relation};
use crate::task::{LearningTask, Mode};
use crate::value::Value;
use crate::ANY;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    SelectClass,
    AttributeRemoval,
    AscendDistinct,
    AscendGroup,
    Vote,
    Further,
    Classification,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::SelectClass,
        Stage::AttributeRemoval,
        Stage::AscendDistinct,
        Stage::AscendGroup,
        Stage::Vote,
        Stage::Further,
        Stage::Classification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SelectClass => "select-class",
            Stage::AttributeRemoval => "attribute-removal",
            Stage::AscendDistinct => "ascend-distinct",
            Stage::AscendGroup => "ascend-group",
            Stage::Vote => "vote",
            Stage::Further => "further",
            Stage::Classification => "classification",
        }
    }

    /// Stages that make sense for a task of the given mode.
    pub fn for_mode(mode: Mode) -> Vec<Stage> {
        Stage::ALL
            .into_iter()
            .filter(|s| mode == Mode::Classification || *s != Stage::Classification)
            .collect()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == fold(s))
            .ok_or_else(|| Error::Generation(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqlScript {
    pub stage: Stage,
    pub text: String,
}

/// A CREATE TABLE statement for one table of the star schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableDdl {
    pub table: String,
    pub text: String,
}

const SQL_KEYWORDS: &[&str] = &[
    "select", "distinct", "from", "where", "and", "group", "by", "as", "count", "create", "table",
    "or", "not", "join", "on", "order", "having", "limit", "in", "is", "null", "like", "between",
    "union", "using", "left", "right", "inner", "outer", "full", "cross", "natural", "exists",
    "case", "when", "offset", "intersect", "except",
];

/// Lower-cased when it is a plain identifier, double-quoted otherwise.
fn ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain && !SQL_KEYWORDS.contains(&fold(name).as_str()) {
        name.to_lowercase()
    } else {
        format!("\"{name}\"")
    }
}

fn literal(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn alias_for(i: usize) -> String {
    // c..z, then h24, h25, ...
    if i < 24 {
        ((b'c' + i as u8) as char).to_string()
    } else {
        format!("h{i}")
    }
}

fn level_lookup<'m>(levels: &'m LevelMap, attr: &str) -> Option<&'m str> {
    levels
        .iter()
        .find(|(k, _)| fold(k) == fold(attr))
        .map(|(_, v)| v.as_str())
}

/// Join predicates linking fact column `a.<attr>` to a hierarchy table.
fn join_predicates(attr: &str, tree: &ConceptTree, alias: &str) -> Vec<String> {
    let col = ident(attr);
    match tree.kind() {
        TreeKind::NumericRange => {
            let prefix = fold(tree.attribute());
            vec![
                format!("a.{col}>={alias}.{}", ident(&format!("{prefix}_start"))),
                format!("a.{col}<={alias}.{}", ident(&format!("{prefix}_fin"))),
            ]
        }
        _ => vec![format!("a.{col}={alias}.{}", ident(&tree.levels()[0]))],
    }
}

/// The fixed parts of every statement for one task: which attributes are
/// kept, which hierarchy each joins to, and how the target class is picked.
#[derive(Clone, Debug)]
pub struct QueryPlan {
    fact: String,
    target_attribute: String,
    target_tree: ConceptTree,
    /// Column of the target hierarchy holding the class concepts, or `None`
    /// when the concept is `ANY`.
    class_column: Option<String>,
    concept: String,
    mode: Mode,
    kept: Vec<KeptAttribute>,
}

#[derive(Clone, Debug)]
struct KeptAttribute {
    name: String,
    /// Alias and tree, for attributes with a hierarchy table.
    hierarchy: Option<(String, ConceptTree)>,
}

impl QueryPlan {
    /// Builds the plan from the data the same way the engine does: the kept
    /// attributes come from attribute removal over the target class, or over
    /// all classes for a classification task.
    pub fn new(db: &Database, trees: &HierarchySet, task: &LearningTask) -> Result<Self> {
        task.validate()?;
        let fact = db.relation(&task.fact)?;
        let target_tree = trees.require(&task.target.attribute)?.clone();
        let node = target_tree.node(&task.target.concept).ok_or_else(|| {
            Error::Task(format!(
                "concept {:?} is not in the hierarchy for {}",
                task.target.concept, task.target.attribute
            ))
        })?;
        let concept = node.name.clone();
        let class_level = node.level;
        let class_column = (class_level < target_tree.root_level())
            .then(|| target_tree.level_name(class_level).to_owned());

        let basis = match task.mode {
            Mode::Characteristic => extract_target(db, trees, task, &concept)?,
            Mode::Classification => fact.clone(),
        };
        let removed = remove_attributes(&basis, task, trees)?;
        let mut kept = Vec::new();
        let mut n = 0;
        for attr in fact.schema().attributes() {
            if removed.schema().index_of(&attr.name).is_none() {
                continue;
            }
            let hierarchy = trees.get(&attr.name).map(|t| {
                let alias = alias_for(n);
                n += 1;
                (alias, t.clone())
            });
            kept.push(KeptAttribute {
                name: attr.name.clone(),
                hierarchy,
            });
        }
        let target_attribute = fact.schema().attributes()[fact.column(&task.target.attribute)?]
            .name
            .clone();
        Ok(QueryPlan {
            fact: task.fact.clone(),
            target_attribute,
            target_tree,
            class_column,
            concept,
            mode: task.mode,
            kept,
        })
    }

    /// Names of the attributes left after attribute removal.
    pub fn kept(&self) -> Vec<&str> {
        self.kept.iter().map(|k| k.name.as_str()).collect()
    }

    fn tables_clause(&self, with_hierarchies: bool) -> String {
        let mut tables = vec![
            format!("{} a", ident(&self.fact)),
            format!("{} b", ident(self.target_tree.table())),
        ];
        if with_hierarchies {
            for k in &self.kept {
                if let Some((alias, tree)) = &k.hierarchy {
                    tables.push(format!("{} {alias}", ident(tree.table())));
                }
            }
        }
        tables.join(", ")
    }

    /// Where-clause lines: the target join (and class filter), then one
    /// line per hierarchy join.
    fn where_lines(&self, class_filter: bool, with_hierarchies: bool) -> Vec<String> {
        let mut first = join_predicates(&self.target_attribute, &self.target_tree, "b");
        if class_filter {
            if let Some(col) = &self.class_column {
                first.push(format!("b.{}={}", ident(col), literal(&self.concept)));
            }
        }
        let mut lines = vec![first.join(" and ")];
        if with_hierarchies {
            for k in &self.kept {
                if let Some((alias, tree)) = &k.hierarchy {
                    lines.push(join_predicates(&k.name, tree, alias).join(" and "));
                }
            }
        }
        lines
    }

    /// Select expressions for the kept attributes at `levels`; attributes at
    /// `ANY` are left out.
    fn level_columns(&self, levels: &LevelMap) -> Result<Vec<String>> {
        let mut cols = Vec::new();
        for k in &self.kept {
            let level = level_lookup(levels, &k.name).ok_or_else(|| {
                Error::Generation(format!("no level given for attribute {}", k.name))
            })?;
            match &k.hierarchy {
                Some((alias, tree)) => {
                    let idx = tree.level_index(level)?;
                    if idx == tree.root_level() {
                        continue;
                    }
                    if idx == 0 && tree.kind() == TreeKind::NumericRange {
                        cols.push(format!("a.{}", ident(&k.name)));
                    } else {
                        cols.push(format!("{alias}.{}", ident(tree.level_name(idx))));
                    }
                }
                None if fold(level) == fold(ANY) => {}
                None if fold(level) == fold(&k.name) => cols.push(format!("a.{}", ident(&k.name))),
                None => {
                    return Err(Error::Generation(format!(
                        "attribute {} has no hierarchy, so it cannot be selected at level {level}",
                        k.name
                    )))
                }
            }
        }
        Ok(cols)
    }

    fn render(&self, select: &str, class_filter: bool, with_hierarchies: bool, group_by: &[String]) -> String {
        let lines = self.where_lines(class_filter, with_hierarchies);
        let mut text = format!(
            "select {select}\nfrom {}\nwhere {}",
            self.tables_clause(with_hierarchies),
            lines.join(" and\n      ")
        );
        if !group_by.is_empty() {
            text.push_str(&format!("\ngroup by {}", group_by.join(", ")));
        }
        text.push_str(";\n");
        text
    }

    /// The statement for `stage` with the kept attributes at `levels`.
    /// `levels` is ignored by the first two stages.
    pub fn select(&self, levels: &LevelMap, stage: Stage) -> Result<SqlScript> {
        let text = match stage {
            Stage::SelectClass => self.render("a.*", true, false, &[]),
            Stage::AttributeRemoval => {
                if self.kept.is_empty() {
                    return Err(Error::Generation("attribute removal left no attributes".into()));
                }
                let cols: Vec<String> =
                    self.kept.iter().map(|k| format!("a.{}", ident(&k.name))).collect();
                self.render(&cols.join(", "), true, false, &[])
            }
            Stage::AscendDistinct | Stage::AscendGroup => {
                let cols = self.level_columns(levels)?;
                if cols.is_empty() {
                    return Err(Error::Generation(
                        "every attribute is at ANY; nothing to select".into(),
                    ));
                }
                if stage == Stage::AscendDistinct {
                    // The function-style spelling reads as DISTINCT over the
                    // whole row.
                    let mut select = format!("distinct({})", cols[0]);
                    for c in &cols[1..] {
                        select.push_str(", ");
                        select.push_str(c);
                    }
                    self.render(&select, true, true, &[])
                } else {
                    self.render(&cols.join(", "), true, true, &cols)
                }
            }
            Stage::Vote | Stage::Further => {
                let cols = self.level_columns(levels)?;
                match cols.first() {
                    Some(first) => {
                        let select = format!("{}, count({first}) as Vote", cols.join(", "));
                        self.render(&select, true, true, &cols)
                    }
                    None => {
                        // Grouping by the class column yields no row for an
                        // empty class, unlike a bare aggregate.
                        let group: Vec<String> = self
                            .class_column
                            .iter()
                            .map(|c| format!("b.{}", ident(c)))
                            .collect();
                        self.render("count(*) as Vote", true, true, &group)
                    }
                }
            }
            Stage::Classification => {
                if self.mode != Mode::Classification {
                    return Err(Error::Generation(
                        "the classification stage needs a classification task".into(),
                    ));
                }
                let class = self.class_column.as_ref().ok_or_else(|| {
                    Error::Generation("the target concept ANY has no contrasting classes".into())
                })?;
                let mut group = vec![format!("b.{}", ident(class))];
                group.extend(self.level_columns(levels)?);
                let select = format!("{}, count(*) as Vote", group.join(", "));
                self.render(&select, false, true, &group)
            }
        };
        Ok(SqlScript { stage, text })
    }
}

/// The statement for one stage. Builds a [`QueryPlan`] first; use the plan
/// directly when generating several stages.
pub fn gen_select(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
    levels: &LevelMap,
    stage: Stage,
) -> Result<SqlScript> {
    QueryPlan::new(db, trees, task)?.select(levels, stage)
}

/// One statement per stage of `task`, at the levels the engine reaches.
/// Classification tasks also get the characteristic stages of their target
/// class and a classification statement at both the initial and the final
/// levels. Stages that cannot be written at those levels carry the reason
/// instead of a script.
pub fn task_scripts(
    db: &Database,
    trees: &HierarchySet,
    task: &LearningTask,
) -> Result<Vec<(String, std::result::Result<SqlScript, String>)>> {
    let mut char_task = task.clone();
    char_task.mode = Mode::Characteristic;
    let trace = trace_characteristic(db, trees, &char_task)?;
    let plan = QueryPlan::new(db, trees, &char_task)?;
    let initial = trace.initial.levels();
    let further = trace.thresholded.levels();
    let none = LevelMap::new();
    let mut jobs: Vec<(String, &QueryPlan, LevelMap, Stage)> = vec![
        (Stage::SelectClass, &none),
        (Stage::AttributeRemoval, &none),
        (Stage::AscendDistinct, &initial),
        (Stage::AscendGroup, &initial),
        (Stage::Vote, &initial),
        (Stage::Further, &further),
    ]
    .into_iter()
    .map(|(stage, levels)| (stage.name().to_owned(), &plan, levels.clone(), stage))
    .collect();

    let class_plan;
    if task.mode == Mode::Classification {
        let ctrace = trace_classification(db, trees, task)?;
        class_plan = QueryPlan::new(db, trees, task)?;
        for (which, classified) in [("initial", &ctrace.initial), ("final", &ctrace.result)] {
            jobs.push((
                format!("classification-{which}"),
                &class_plan,
                classified.classes[0].1.levels(),
                Stage::Classification,
            ));
        }
    }

    jobs.into_iter()
        .map(|(label, plan, levels, stage)| match plan.select(&levels, stage) {
            Ok(script) => Ok((label, Ok(script))),
            Err(Error::Generation(why)) => Ok((label, Err(why))),
            Err(e) => Err(e),
        })
        .collect()
}

fn varchar(values: impl Iterator<Item = usize>) -> String {
    format!("varchar({})", values.max().unwrap_or(0).max(50))
}

fn decimal(scales: impl Iterator<Item = u32>) -> String {
    format!("decimal(18,{})", scales.max().unwrap_or(0))
}

fn column_type(rel: &Relation, i: usize) -> String {
    match rel.schema().attributes()[i].kind {
        Kind::Numeric => decimal(rel.tuples().iter().map(|t| match &t[i] {
            Value::Number(d) => d.scale(),
            _ => 0,
        })),
        Kind::Categorical => varchar(rel.tuples().iter().map(|t| t[i].to_string().chars().count())),
    }
}

fn create(table: &str, columns: &[(String, String)]) -> String {
    let cols: Vec<String> = columns
        .iter()
        .map(|(n, t)| format!("  {} {t}", ident(n)))
        .collect();
    format!("create table {} (\n{}\n);\n", ident(table), cols.join(",\n"))
}

/// CREATE TABLE statements for the fact table and every hierarchy table,
/// hierarchies ordered by the fact attribute they generalize.
pub fn gen_schema(db: &Database, fact: &str, trees: &HierarchySet) -> Result<Vec<TableDdl>> {
    let rel = db.relation(fact)?;
    let columns: Vec<(String, String)> = rel
        .schema()
        .attributes()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.clone(), column_type(rel, i)))
        .collect();
    let mut out = vec![TableDdl {
        table: fact.to_owned(),
        text: create(fact, &columns),
    }];

    let mut ordered: Vec<&ConceptTree> = Vec::new();
    for name in rel.schema().names() {
        if let Some(t) = trees.get(name) {
            if t.kind() != TreeKind::Identity {
                ordered.push(t);
            }
        }
    }
    let mut rest: Vec<&ConceptTree> = trees
        .iter()
        .filter(|t| t.kind() != TreeKind::Identity && rel.schema().index_of(t.attribute()).is_none())
        .collect();
    rest.sort_by_key(|t| fold(t.attribute()));
    ordered.extend(rest);

    for tree in ordered {
        let names = |level: usize| tree.concepts_at(level).into_iter().map(|c| c.chars().count());
        let mut cols = Vec::new();
        match tree.kind() {
            TreeKind::NumericRange => {
                let prefix = fold(tree.attribute());
                let ty = decimal(tree.ranges().iter().flat_map(|r| [r.lo.scale(), r.hi.scale()]));
                cols.push((format!("{prefix}_start"), ty.clone()));
                cols.push((format!("{prefix}_fin"), ty));
                for (l, name) in tree.levels().iter().enumerate().skip(1) {
                    cols.push((name.clone(), varchar(names(l))));
                }
            }
            _ => {
                for (l, name) in tree.levels().iter().enumerate() {
                    cols.push((name.clone(), varchar(names(l))));
                }
            }
        }
        out.push(TableDdl {
            table: tree.table().to_owned(),
            text: create(tree.table(), &cols),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use crate::sql;

    fn plan(task: &str) -> QueryPlan {
        let ds = sample::student().unwrap();
        QueryPlan::new(&ds.db, &ds.trees, &LearningTask::from_json(task).unwrap()).unwrap()
    }

    fn levels(pairs: &[(&str, &str)]) -> LevelMap {
        pairs.iter().map(|(a, l)| (a.to_string(), l.to_string())).collect()
    }

    /// Whitespace-insensitive token comparison.
    fn tokens(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ").replace(", ", ",").replace(" ;", ";")
    }

    #[test]
    fn select_class_listing() {
        let p = plan(sample::GRADUATE_TASK);
        let s = p.select(&LevelMap::new(), Stage::SelectClass).unwrap();
        assert_eq!(
            tokens(&s.text),
            tokens("select a.* from student a, hierarchy_cat b where a.category=b.category and b.study='graduate';")
        );
    }

    #[test]
    fn vote_and_classification_listings() {
        let p = plan(sample::GRADUATE_TASK);
        let city = levels(&[("Major", "studyprog"), ("Birthplace", "city"), ("GPA", "range")]);
        let s = p.select(&city, Stage::Vote).unwrap();
        assert!(s.text.contains("count(c.studyprog) as Vote"), "{}", s.text);
        assert!(tokens(&s.text).contains("group by c.studyprog,d.city,e.range;"));
        assert!(tokens(&s.text).contains(
            "a.major=c.major and a.birthplace=d.birthplace and a.gpa>=e.gpa_start and a.gpa<=e.gpa_fin"
        ));
        assert!(matches!(
            p.select(&city, Stage::Classification),
            Err(Error::Generation(_))
        ));

        let p = plan(sample::CLASSIFICATION_TASK);
        let country = levels(&[("Major", "studyprog"), ("Birthplace", "country"), ("GPA", "range")]);
        let s = p.select(&country, Stage::Classification).unwrap();
        assert!(tokens(&s.text).contains("group by b.study,c.studyprog,d.country,e.range;"));
        assert!(s.text.contains("count(*) as Vote"));
        assert!(!s.text.contains("'graduate'"));
    }

    #[test]
    fn distinct_and_removal_forms() {
        let p = plan(sample::GRADUATE_TASK);
        let city = levels(&[("Major", "studyprog"), ("Birthplace", "city"), ("GPA", "range")]);
        let s = p.select(&city, Stage::AscendDistinct).unwrap();
        assert!(s.text.starts_with("select distinct(c.studyprog), d.city, e.range\n"));
        let s = p.select(&city, Stage::AttributeRemoval).unwrap();
        assert!(s.text.starts_with("select a.major, a.birthplace, a.gpa\n"));
        assert_eq!(p.kept(), ["Major", "Birthplace", "GPA"]);
    }

    #[test]
    fn any_levels_are_omitted_and_leaf_numbers_use_the_fact_column() {
        let p = plan(sample::GRADUATE_TASK);
        let l = levels(&[("Major", "ANY"), ("Birthplace", "birthplace"), ("GPA", "gpa")]);
        let s = p.select(&l, Stage::AscendGroup).unwrap();
        assert!(s.text.starts_with("select d.birthplace, a.gpa\n"), "{}", s.text);
        let all_any = levels(&[("Major", "ANY"), ("Birthplace", "ANY"), ("GPA", "ANY")]);
        let s = p.select(&all_any, Stage::Further).unwrap();
        assert!(s.text.starts_with("select count(*) as Vote\n"));
        assert!(s.text.ends_with("group by b.study;\n"));
        assert!(p.select(&all_any, Stage::AscendGroup).is_err());
    }

    #[test]
    fn attribute_without_hierarchy_at_non_leaf_level() {
        let ds = sample::student().unwrap();
        let mut task = LearningTask::from_json(sample::GRADUATE_TASK).unwrap();
        task.attr_threshold = 20; // keeps Name
        let p = QueryPlan::new(&ds.db, &ds.trees, &task).unwrap();
        assert_eq!(p.kept()[0], "Name");
        let mut l = levels(&[("Major", "studyprog"), ("Birthplace", "city"), ("GPA", "range")]);
        l.insert("Name".into(), "Name".into());
        assert!(p.select(&l, Stage::Vote).unwrap().text.starts_with("select a.name, c.studyprog"));
        l.insert("Name".into(), "studyprog".into());
        assert!(matches!(p.select(&l, Stage::Vote), Err(Error::Generation(_))));
    }

    #[test]
    fn generated_sql_parses_and_is_stable() {
        let p = plan(sample::CLASSIFICATION_TASK);
        let l = levels(&[("Major", "studyprog"), ("Birthplace", "city"), ("GPA", "range")]);
        for stage in Stage::ALL {
            let a = p.select(&l, stage).unwrap();
            let b = plan(sample::CLASSIFICATION_TASK).select(&l, stage).unwrap();
            assert_eq!(a, b);
            assert!(a.text.ends_with(";\n"));
            sql::parse(&a.text).unwrap_or_else(|e| panic!("{stage}: {e}\n{}", a.text));
        }
    }

    #[test]
    fn schema_ddl() {
        let ds = sample::student().unwrap();
        let ddl = gen_schema(&ds.db, "student", &ds.trees).unwrap();
        let tables: Vec<&str> = ddl.iter().map(|d| d.table.as_str()).collect();
        assert_eq!(
            tables,
            ["student", "hierarchy_cat", "hierarchy_major", "hierarchy_birth", "hierarchy_gpa"]
        );
        assert!(ddl[4].text.contains("gpa_start decimal(18,2)"));
        assert!(ddl[4].text.contains("range varchar(50)"));
        let mut db = Database::new();
        for d in &ddl {
            sql::run_script(&d.text, &mut db).unwrap();
        }
        assert_eq!(db.iter().count(), 5);

        let mut only_fact = Database::new();
        only_fact.insert("student", ds.fact_relation().unwrap().clone()).unwrap();
        assert_eq!(gen_schema(&only_fact, "student", &HierarchySet::new()).unwrap().len(), 1);
    }

    #[test]
    fn task_scripts_cover_every_stage_of_a_classification_task() {
        let ds = sample::student().unwrap();
        let task = LearningTask::from_json(sample::CLASSIFICATION_TASK).unwrap();
        let scripts = task_scripts(&ds.db, &ds.trees, &task).unwrap();
        let labels: Vec<&str> = scripts.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(
            labels,
            [
                "select-class",
                "attribute-removal",
                "ascend-distinct",
                "ascend-group",
                "vote",
                "further",
                "classification-initial",
                "classification-final"
            ]
        );
        let last = scripts.last().unwrap().1.as_ref().unwrap();
        assert!(last.text.contains("d.country"), "{}", last.text);
    }
}
