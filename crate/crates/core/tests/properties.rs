mod common;

use aoi_core::sql::{
    self, CmpOp, ColumnRef, Operand, Predicate, Query, SelectExpr, SelectItem, TableRef,
};
use aoi_core::induction::trace_classification;
use aoi_core::sqlgen::{gen_select, Stage};
use aoi_core::validate::validate;
use aoi_core::value::Decimal;
use aoi_core::{sample, LearningTask, Mode, Value};
use proptest::prelude::*;

const TABLES: [&str; 4] = ["student", "hierarchy_cat", "facts", "t1"];
const COLUMNS: [&str; 5] = ["major", "gpa", "city", "x1", "vote_count"];
const ALIASES: [&str; 3] = ["a", "b", "c"];

fn column(n_tables: usize) -> impl Strategy<Value = ColumnRef> {
    (
        prop::option::of(prop::sample::select(&ALIASES[..n_tables])),
        prop::sample::select(&COLUMNS[..]),
    )
        .prop_map(|(q, c)| ColumnRef {
            qualifier: q.map(str::to_owned),
            column: c.to_owned(),
        })
}

fn literal() -> impl Strategy<Value = Value> {
    prop_oneof![
        "[A-Za-z' ]{0,8}".prop_map(Value::Text),
        (0i64..100_000, 0u32..=3).prop_map(|(m, s)| Value::Number(Decimal::new(m, s))),
    ]
}

fn operand(n: usize) -> impl Strategy<Value = Operand> {
    prop_oneof![
        column(n).prop_map(Operand::Column),
        literal().prop_map(Operand::Literal),
    ]
}

fn predicate(n: usize) -> impl Strategy<Value = Predicate> {
    (
        column(n).prop_map(Operand::Column),
        prop::sample::select(vec![CmpOp::Eq, CmpOp::Ge, CmpOp::Le]),
        operand(n),
        any::<bool>(),
    )
        .prop_map(|(l, op, r, flip)| {
            let (left, right) = if flip && matches!(r, Operand::Column(_)) { (r, l) } else { (l, r) };
            Predicate { left, op, right }
        })
}

/// Well-formed queries: distinct aliases, qualifiers that name them, and a
/// GROUP BY over every plain column whenever a count is selected.
fn query() -> impl Strategy<Value = Query> {
    (1usize..=3).prop_flat_map(|n| {
        (
            any::<bool>(),
            prop::collection::vec(prop::sample::select(&TABLES[..]), n),
            prop::collection::vec(column(n), 1..=4),
            prop::option::of(prop_oneof![Just(None), column(n).prop_map(Some)]),
            prop::option::of("vote|total"),
            prop::collection::vec(predicate(n), 0..=3),
            any::<bool>(),
        )
            .prop_map(move |(distinct, tables, cols, count, alias, predicates, aliased)| {
                let from = tables
                    .iter()
                    .zip(ALIASES)
                    .map(|(t, a)| TableRef {
                        table: t.to_string(),
                        alias: (aliased || n > 1).then(|| a.to_owned()),
                    })
                    .collect::<Vec<_>>();
                let unaliased = from.iter().all(|t| t.alias.is_none());
                let fix = |mut c: ColumnRef| {
                    if unaliased {
                        c.qualifier = None;
                    }
                    c
                };
                let cols: Vec<ColumnRef> = cols.into_iter().map(fix).collect();
                let mut items: Vec<SelectItem> = cols
                    .iter()
                    .map(|c| SelectItem {
                        expr: SelectExpr::Column(c.clone()),
                        alias: None,
                    })
                    .collect();
                let mut group_by = Vec::new();
                if let Some(count) = count {
                    items.push(SelectItem {
                        expr: match count {
                            None => SelectExpr::CountStar,
                            Some(c) => SelectExpr::Count(fix(c)),
                        },
                        alias: alias.clone(),
                    });
                    group_by = cols;
                }
                let predicates = predicates
                    .into_iter()
                    .map(|p| Predicate {
                        left: fix_operand(p.left, unaliased),
                        op: p.op,
                        right: fix_operand(p.right, unaliased),
                    })
                    .collect();
                Query {
                    distinct,
                    items,
                    from,
                    predicates,
                    group_by,
                }
            })
    })
}

fn fix_operand(o: Operand, unaliased: bool) -> Operand {
    match o {
        Operand::Column(mut c) if unaliased => {
            c.qualifier = None;
            Operand::Column(c)
        }
        other => other,
    }
}

fn case() -> impl Strategy<Value = (Vec<common::Student>, [&'static str; 3], usize, Option<usize>)> {
    (
        common::students(),
        common::levels(),
        1usize..=6,
        prop::option::of(1usize..=6),
    )
}

fn task(concept: &str, mode: Mode, levels: [&str; 3], attr: usize, rel: Option<usize>) -> LearningTask {
    let mut task = LearningTask::new("student", "category", concept, mode)
        .with_level("major", levels[0])
        .with_level("birthplace", levels[1])
        .with_level("gpa", levels[2]);
    task.attr_threshold = attr;
    task.rel_threshold = rel;
    task
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rendered_queries_parse_back_unchanged(q in query()) {
        let text = q.to_string();
        let parsed = sql::parse_query(&text).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(parsed, q);
    }

    #[test]
    fn join_order_does_not_change_results(
        (students, levels, _, _) in case(),
        order in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let ds = sample::with_fact(&common::to_csv(&students)).unwrap();
        let t = task("graduate", Mode::Classification, levels, 3, None);
        let lv = trace_classification(&ds.db, &ds.trees, &t).unwrap().result.classes[0].1.levels();
        let script = gen_select(&ds.db, &ds.trees, &t, &lv, Stage::Classification).unwrap();
        let q = sql::parse_query(&script.text).unwrap();
        let mut shuffled = q.clone();
        shuffled.from = order.iter().filter(|&&i| i < q.from.len()).map(|&i| q.from[i].clone()).collect();
        let a = sql::execute(&q, &ds.db).unwrap();
        let b = sql::execute(&shuffled, &ds.db).unwrap();
        prop_assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn engine_and_generated_sql_agree_on_random_tables((students, levels, attr, rel) in case()) {
        let ds = sample::with_fact(&common::to_csv(&students)).unwrap();
        for (concept, mode) in [
            ("graduate", Mode::Characteristic),
            ("undergraduate", Mode::Characteristic),
            ("graduate", Mode::Classification),
        ] {
            let report = validate(&ds.db, &ds.trees, &task(concept, mode, levels, attr, rel)).unwrap();
            prop_assert!(report.passed(), "{}", report.render());
        }
    }
}
