//! Nested-loop executor. Deliberately naive: it serves as an independent
//! check on the induction engine, not as a database.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::parser::check_query;
use crate::error::{Error, Result};
use crate::relation::{fold, AttributeSpec, Database, Kind, Relation, Schema};
use crate::value::{Decimal, Value};

/// A resolved column: (table position in FROM, column position).
type Slot = (usize, usize);

struct Scope<'a> {
    tables: Vec<(&'a TableRef, &'a Relation)>,
}

impl<'a> Scope<'a> {
    fn new(q: &'a Query, db: &'a Database) -> Result<Self> {
        check_query(q)?;
        let tables = q
            .from
            .iter()
            .map(|t| {
                db.get(&t.table)
                    .map(|r| (t, r))
                    .ok_or_else(|| Error::Resolution(format!("unknown table {}", t.table)))
            })
            .collect::<Result<_>>()?;
        Ok(Scope { tables })
    }

    fn table(&self, alias: &str) -> Result<usize> {
        let a = fold(alias);
        self.tables
            .iter()
            .position(|(t, _)| fold(t.name()) == a)
            .ok_or_else(|| Error::Resolution(format!("unknown table alias {alias}")))
    }

    fn resolve(&self, c: &ColumnRef) -> Result<Slot> {
        match &c.qualifier {
            Some(q) => {
                let t = self.table(q)?;
                let col = self.tables[t].1.schema().index_of(&c.column).ok_or_else(|| {
                    Error::Resolution(format!("unknown column {c}"))
                })?;
                Ok((t, col))
            }
            None => {
                let hits: Vec<Slot> = self
                    .tables
                    .iter()
                    .enumerate()
                    .filter_map(|(t, (_, r))| r.schema().index_of(&c.column).map(|col| (t, col)))
                    .collect();
                match hits.as_slice() {
                    [one] => Ok(*one),
                    [] => Err(Error::Resolution(format!("unknown column {c}"))),
                    _ => Err(Error::Resolution(format!("ambiguous column {c}"))),
                }
            }
        }
    }

    fn spec(&self, (t, c): Slot) -> &AttributeSpec {
        &self.tables[t].1.schema().attributes()[c]
    }
}

enum Side {
    Col(Slot),
    Lit(Value),
}

impl Side {
    fn kind(&self, scope: &Scope) -> Kind {
        match self {
            Side::Col(s) => scope.spec(*s).kind,
            Side::Lit(Value::Number(_)) => Kind::Numeric,
            Side::Lit(_) => Kind::Categorical,
        }
    }

    fn table(&self) -> usize {
        match self {
            Side::Col((t, _)) => *t,
            Side::Lit(_) => 0,
        }
    }

    fn get<'v>(&'v self, row: &[&'v [Value]]) -> &'v Value {
        match self {
            Side::Col((t, c)) => &row[*t][*c],
            Side::Lit(v) => v,
        }
    }
}

struct Filter {
    left: Side,
    op: CmpOp,
    right: Side,
}

impl Filter {
    fn holds(&self, row: &[&[Value]]) -> bool {
        let (l, r) = (self.left.get(row), self.right.get(row));
        match self.op {
            CmpOp::Eq => l == r,
            CmpOp::Ge => num(l) >= num(r),
            CmpOp::Le => num(l) <= num(r),
        }
    }
}

fn num(v: &Value) -> Option<Decimal> {
    v.as_number()
}

fn side(scope: &Scope, o: &Operand) -> Result<Side> {
    Ok(match o {
        Operand::Column(c) => Side::Col(scope.resolve(c)?),
        Operand::Literal(v) => Side::Lit(v.clone()),
    })
}

enum Out {
    /// A column, flagged when it came from a `*` expansion.
    Col(Slot, bool),
    Count,
}

/// Run a parsed SELECT against `db`.
pub fn execute(q: &Query, db: &Database) -> Result<Relation> {
    let scope = Scope::new(q, db)?;

    // Predicates are type-checked against the schemas up front so errors do
    // not depend on the data, then attached to the first loop depth at which
    // all their columns are bound.
    let mut by_depth: Vec<Vec<Filter>> = (0..scope.tables.len()).map(|_| Vec::new()).collect();
    for p in &q.predicates {
        let left = side(&scope, &p.left)?;
        let right = side(&scope, &p.right)?;
        let (lk, rk) = (left.kind(&scope), right.kind(&scope));
        match p.op {
            CmpOp::Eq if lk != rk => {
                return Err(Error::SqlType(format!(
                    "cannot compare {} with {} in {p}",
                    kind_name(lk),
                    kind_name(rk)
                )))
            }
            CmpOp::Ge | CmpOp::Le if lk != Kind::Numeric || rk != Kind::Numeric => {
                return Err(Error::SqlType(format!("range predicate on non-numeric operand in {p}")))
            }
            _ => {}
        }
        let depth = left.table().max(right.table());
        by_depth[depth].push(Filter {
            left,
            op: p.op,
            right,
        });
    }

    let mut outputs: Vec<(Out, String, Kind)> = Vec::new();
    for item in &q.items {
        match &item.expr {
            SelectExpr::Star(qual) => {
                let tables: Vec<usize> = match qual {
                    Some(a) => vec![scope.table(a)?],
                    None => (0..scope.tables.len()).collect(),
                };
                for t in tables {
                    for (c, spec) in scope.tables[t].1.schema().attributes().iter().enumerate() {
                        outputs.push((Out::Col((t, c), true), spec.name.clone(), spec.kind));
                    }
                }
            }
            SelectExpr::Column(c) => {
                let slot = scope.resolve(c)?;
                let spec = scope.spec(slot);
                let name = item.alias.clone().unwrap_or_else(|| spec.name.clone());
                outputs.push((Out::Col(slot, false), name, spec.kind));
            }
            SelectExpr::CountStar | SelectExpr::Count(_) => {
                if let SelectExpr::Count(c) = &item.expr {
                    scope.resolve(c)?;
                }
                let name = item.alias.clone().unwrap_or_else(|| "count".into());
                outputs.push((Out::Count, name, Kind::Numeric));
            }
        }
    }

    let group_slots: Vec<Slot> = q
        .group_by
        .iter()
        .map(|c| scope.resolve(c))
        .collect::<Result<_>>()?;
    let grouped = !group_slots.is_empty() || outputs.iter().any(|(o, ..)| matches!(o, Out::Count));
    if grouped {
        for (o, name, _) in &outputs {
            if let Out::Col(slot, star) = o {
                if *star || !group_slots.contains(slot) {
                    return Err(Error::Resolution(format!(
                        "column {name} must appear in GROUP BY"
                    )));
                }
            }
        }
    }

    let schema = output_schema(&scope, &outputs)?;

    let mut rows: Vec<Vec<&[Value]>> = Vec::new();
    let mut current: Vec<&[Value]> = Vec::with_capacity(scope.tables.len());
    nested_loop(&scope, &by_depth, &mut current, &mut rows);

    let project = |row: &[&[Value]], count: u64| -> Vec<Value> {
        outputs
            .iter()
            .map(|(o, ..)| match o {
                Out::Col((t, c), _) => row[*t][*c].clone(),
                Out::Count => Value::Number(Decimal::from(count)),
            })
            .collect()
    };

    let tuples: Vec<Vec<Value>> = if grouped {
        let mut groups: BTreeMap<Vec<&Value>, (usize, u64)> = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            let key: Vec<&Value> = group_slots.iter().map(|(t, c)| &row[*t][*c]).collect();
            groups.entry(key).or_insert((i, 0)).1 += 1;
        }
        if group_slots.is_empty() && groups.is_empty() {
            // A pure aggregate over no rows still yields one row.
            vec![outputs
                .iter()
                .map(|_| Value::Number(Decimal::ZERO))
                .collect()]
        } else {
            let mut out: Vec<Vec<Value>> = groups
                .values()
                .map(|(first, n)| project(&rows[*first], *n))
                .collect();
            if q.distinct {
                out = out.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
            }
            out
        }
    } else {
        let projected = rows.iter().map(|r| project(r, 0));
        if q.distinct {
            projected.collect::<BTreeSet<_>>().into_iter().collect()
        } else {
            projected.collect()
        }
    };
    Relation::new(schema, tuples)
}

fn nested_loop<'a>(
    scope: &Scope<'a>,
    by_depth: &[Vec<Filter>],
    current: &mut Vec<&'a [Value]>,
    out: &mut Vec<Vec<&'a [Value]>>,
) {
    let depth = current.len();
    if depth == scope.tables.len() {
        out.push(current.clone());
        return;
    }
    for tuple in scope.tables[depth].1.tuples() {
        current.push(tuple.as_slice());
        if by_depth[depth].iter().all(|f| f.holds(current)) {
            nested_loop(scope, by_depth, current, out);
        }
        current.pop();
    }
}

fn output_schema(scope: &Scope, outputs: &[(Out, String, Kind)]) -> Result<Schema> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut attrs = Vec::new();
    for (o, name, kind) in outputs {
        let mut name = name.clone();
        if seen.contains(&fold(&name)) {
            if let Out::Col((t, _), _) = o {
                name = format!("{}.{name}", scope.tables[*t].0.name());
            }
        }
        if !seen.insert(fold(&name)) {
            return Err(Error::Resolution(format!("duplicate output column {name}")));
        }
        attrs.push(AttributeSpec::new(name, *kind));
    }
    Schema::new(attrs)
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Numeric => "number",
        Kind::Categorical => "text",
    }
}

/// Apply a CREATE TABLE: registers an empty relation.
pub fn create_table(c: &CreateTable, db: &mut Database) -> Result<()> {
    let attrs = c
        .columns
        .iter()
        .map(|d| {
            let base = fold(d.data_type.split('(').next().unwrap_or_default());
            let kind = match base.as_str() {
                "varchar" | "char" | "text" | "string" | "character" => Kind::Categorical,
                "decimal" | "numeric" | "int" | "integer" | "smallint" | "bigint" | "float"
                | "real" | "double" | "number" => Kind::Numeric,
                _ => return Err(Error::Unsupported(format!("column type {}", d.data_type))),
            };
            Ok(AttributeSpec::new(d.name.clone(), kind))
        })
        .collect::<Result<Vec<_>>>()?;
    if db.get(&c.name).is_some() {
        return Err(Error::Resolution(format!("table {} already exists", c.name)));
    }
    db.insert(c.name.clone(), Relation::empty(Schema::new(attrs)?))
}

/// Execute any statement; SELECT returns its result.
pub fn run(stmt: &Statement, db: &mut Database) -> Result<Option<Relation>> {
    match stmt {
        Statement::Select(q) => execute(q, db).map(Some),
        Statement::CreateTable(c) => create_table(c, db).map(|_| None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use crate::sql::parse_query;

    fn db() -> Database {
        sample::student().unwrap().db
    }

    fn run_sql(sql: &str) -> Result<Relation> {
        execute(&parse_query(sql)?, &db())
    }

    #[test]
    fn graduate_selection() {
        let r = run_sql(
            "select a.* from student a, hierarchy_cat b where a.category=b.category and b.study='graduate'",
        )
        .unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.schema().names().collect::<Vec<_>>(), ["Name", "Category", "Major", "Birthplace", "GPA"]);
    }

    #[test]
    fn vote_statement_matches_hand_count() {
        let sql = "select c.studyprog, d.city,e.range, count(c.studyprog) as Vote \
            from student a, hierarchy_cat b, hierarchy_major c, hierarchy_birth d, hierarchy_gpa e \
            where a.category=b.category and b.study='graduate' and a.major=c.major and \
            a.birthplace=d.birthplace and a.gpa>=e.gpa_start and a.gpa<=e.gpa_fin \
            group by c.studyprog, d.city,e.range";
        let r = run_sql(sql).unwrap();
        let votes: u64 = r
            .tuples()
            .iter()
            .map(|t| u64::try_from(t[3].as_number().unwrap()).unwrap())
            .sum::<u64>();
        assert_eq!(votes, 6);
        assert_eq!(r.len(), 5);
        assert_eq!(r.schema().names().last(), Some("Vote"));
    }

    #[test]
    fn distinct_is_whole_row() {
        let r = run_sql(
            "select distinct(c.studyprog), d.city,e.range from student a, hierarchy_cat b, hierarchy_major c, \
             hierarchy_birth d, hierarchy_gpa e where a.category=b.category and b.study='graduate' and \
             a.major=c.major and a.birthplace=d.birthplace and a.gpa>=e.gpa_start and a.gpa<=e.gpa_fin",
        )
        .unwrap();
        assert_eq!(r.len(), 5);
    }

    #[test]
    fn empty_group_gives_empty_result() {
        let mut d = Database::new();
        create_table(
            &CreateTable {
                name: "student".into(),
                columns: vec![ColumnDef {
                    name: "category".into(),
                    data_type: "varchar(20)".into(),
                }],
            },
            &mut d,
        )
        .unwrap();
        let q = parse_query("select count(*) as n from student a group by a.category").unwrap();
        assert!(execute(&q, &d).unwrap().is_empty());
        let q = parse_query("select count(*) as n from student a").unwrap();
        assert_eq!(execute(&q, &d).unwrap().len(), 1);
    }

    #[test]
    fn resolution_and_type_errors() {
        assert!(matches!(run_sql("select a.* from nosuch a"), Err(Error::Resolution(_))));
        assert!(matches!(run_sql("select a.nosuch from student a"), Err(Error::Resolution(_))));
        assert!(matches!(
            run_sql("select category from student a, hierarchy_cat b"),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            run_sql("select a.name from student a, hierarchy_gpa e where a.major >= e.gpa_start"),
            Err(Error::SqlType(_))
        ));
        assert!(matches!(
            run_sql("select a.name from student a where a.gpa = 'x'"),
            Err(Error::SqlType(_))
        ));
        assert!(matches!(
            run_sql("select a.name, count(*) from student a group by a.major"),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn numeric_literals_compare_exactly() {
        let r = run_sql("select a.name from student a where a.gpa = 3.50").unwrap();
        assert_eq!(r.len(), 2, "Anton and Acai");
    }
}
