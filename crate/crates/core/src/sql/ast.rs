use std::fmt;

use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Select(Query),
    CreateTable(CreateTable),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: Vec<TableRef>,
    pub predicates: Vec<Predicate>,
    pub group_by: Vec<ColumnRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRef {
    pub table: String,
    pub alias: Option<String>,
}

impl TableRef {
    pub fn name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.table)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectItem {
    pub expr: SelectExpr,
    pub alias: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectExpr {
    Column(ColumnRef),
    /// `*` or `alias.*`.
    Star(Option<String>),
    CountStar,
    Count(ColumnRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub column: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ge,
    Le,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    pub left: Operand,
    pub op: CmpOp,
    pub right: Operand,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub data_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CreateTable {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.column),
            None => f.write_str(&self.column),
        }
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.expr {
            SelectExpr::Column(c) => write!(f, "{c}")?,
            SelectExpr::Star(None) => f.write_str("*")?,
            SelectExpr::Star(Some(q)) => write!(f, "{q}.*")?,
            SelectExpr::CountStar => f.write_str("count(*)")?,
            SelectExpr::Count(c) => write!(f, "count({c})")?,
        }
        if let Some(a) = &self.alias {
            write!(f, " AS {a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => write!(f, "{c}"),
            Operand::Literal(Value::Number(n)) => write!(f, "{n}"),
            Operand::Literal(v) => write!(f, "'{}'", v.to_string().replace('\'', "''")),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        };
        write!(f, "{} {op} {}", self.left, self.right)
    }
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        write!(f, "{} FROM ", join(&self.items, ", "))?;
        let from: Vec<String> = self
            .from
            .iter()
            .map(|t| match &t.alias {
                Some(a) => format!("{} {a}", t.table),
                None => t.table.clone(),
            })
            .collect();
        f.write_str(&from.join(", "))?;
        if !self.predicates.is_empty() {
            write!(f, " WHERE {}", join(&self.predicates, " AND "))?;
        }
        if !self.group_by.is_empty() {
            write!(f, " GROUP BY {}", join(&self.group_by, ", "))?;
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Select(q) => write!(f, "{q}"),
            Statement::CreateTable(c) => {
                let cols: Vec<String> = c
                    .columns
                    .iter()
                    .map(|d| format!("{} {}", d.name, d.data_type))
                    .collect();
                write!(f, "CREATE TABLE {} ({})", c.name, cols.join(", "))
            }
        }
    }
}
