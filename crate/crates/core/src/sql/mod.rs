//! A small SQL dialect: SELECT with comma joins, AND-ed equality and range
//! predicates, GROUP BY with `count`, DISTINCT, and CREATE TABLE.

mod ast;
mod exec;
mod lexer;
mod parser;

pub use ast::*;
pub use exec::{create_table, execute, run};
pub use parser::{check_query, parse, parse_query, parse_script};

use crate::error::Result;
use crate::relation::{Database, Relation};

/// Parse and run a script; returns the result of each SELECT in order.
pub fn run_script(sql: &str, db: &mut Database) -> Result<Vec<Relation>> {
    let mut out = Vec::new();
    for stmt in parse_script(sql)? {
        if let Some(r) = run(&stmt, db)? {
            out.push(r);
        }
    }
    Ok(out)
}
