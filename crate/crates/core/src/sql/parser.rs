//! Recursive-descent parser for the SELECT subset plus `CREATE TABLE`.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::error::{Error, Result};
use crate::relation::fold;
use crate::value::Value;

/// Words that end a table or item and so cannot be used as bare aliases.
const RESERVED: &[&str] = &[
    "select", "distinct", "from", "where", "and", "group", "by", "as", "count", "create", "table",
    "or", "not", "join", "inner", "left", "right", "outer", "full", "cross", "natural", "on",
    "using", "union", "intersect", "except", "order", "having", "limit", "offset", "in", "like",
    "between", "is", "null", "exists", "case", "when",
];

/// Constructs outside the dialect, reported as unsupported rather than as
/// syntax errors.
const UNSUPPORTED: &[&str] = &[
    "or", "not", "join", "inner", "left", "right", "outer", "full", "cross", "natural", "on",
    "using", "union", "intersect", "except", "order", "having", "limit", "offset", "in", "like",
    "between", "is", "null", "exists", "case", "insert", "update", "delete", "drop", "alter",
    "sum", "avg", "min", "max",
];

/// Parse exactly one statement, optionally terminated by `;`.
pub fn parse(sql: &str) -> Result<Statement> {
    let mut p = Parser::new(sql)?;
    let stmt = p.statement()?;
    p.eat(&Tok::Semi);
    p.expect_end()?;
    Ok(stmt)
}

/// Parse a single SELECT statement.
pub fn parse_query(sql: &str) -> Result<Query> {
    match parse(sql)? {
        Statement::Select(q) => Ok(q),
        Statement::CreateTable(_) => Err(Error::Syntax {
            offset: 0,
            expected: vec!["SELECT".into()],
        }),
    }
}

/// Parse a sequence of `;`-separated statements.
pub fn parse_script(sql: &str) -> Result<Vec<Statement>> {
    let mut p = Parser::new(sql)?;
    let mut out = Vec::new();
    loop {
        while p.eat(&Tok::Semi) {}
        if p.at_end() {
            return Ok(out);
        }
        out.push(p.statement()?);
        if !p.at_end() && !p.eat(&Tok::Semi) {
            return Err(p.unexpected(&[";"]));
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(sql: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(sql)?,
            pos: 0,
            len: sql.len(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.toks.get(self.pos + n)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.len, |t| t.offset)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Error for the current token: unsupported if it names a construct
    /// outside the dialect, otherwise a syntax error.
    fn unexpected(&self, expected: &[&str]) -> Error {
        if let Some(t) = self.peek() {
            match &t.tok {
                Tok::Ident(w) if UNSUPPORTED.contains(&fold(w).as_str()) => {
                    return Error::Unsupported(w.to_uppercase());
                }
                Tok::OtherOp(op) => return Error::Unsupported(format!("operator {op}")),
                Tok::LParen if self.peek_at(1).is_some_and(|t| t.is_keyword("select")) => {
                    return Error::Unsupported("subquery".into());
                }
                _ => {}
            }
        }
        Error::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&[label]))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[&kw.to_uppercase()]))
        }
    }

    fn expect_end(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) if !RESERVED.contains(&fold(s).as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn at_alias(&self) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if !RESERVED.contains(&fold(s).as_str()))
    }

    fn statement(&mut self) -> Result<Statement> {
        if self.eat_keyword("create") {
            return self.create_table().map(Statement::CreateTable);
        }
        if self.at_keyword("select") {
            return self.query().map(Statement::Select);
        }
        Err(self.unexpected(&["SELECT", "CREATE"]))
    }

    fn create_table(&mut self) -> Result<CreateTable> {
        self.expect_keyword("table")?;
        let name = self.ident()?;
        self.expect(Tok::LParen, "(")?;
        let mut columns = Vec::new();
        loop {
            let col = self.ident()?;
            let mut data_type = self.ident()?;
            if self.eat(&Tok::LParen) {
                let mut args = Vec::new();
                loop {
                    match self.peek().map(|t| t.tok.clone()) {
                        Some(Tok::Num(n)) => {
                            self.pos += 1;
                            args.push(n.to_string());
                        }
                        _ => return Err(self.unexpected(&["number"])),
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen, ")")?;
                data_type = format!("{data_type}({})", args.join(","));
            }
            columns.push(ColumnDef {
                name: col,
                data_type,
            });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen, ")")?;
        Ok(CreateTable { name, columns })
    }

    fn query(&mut self) -> Result<Query> {
        self.expect_keyword("select")?;
        let mut distinct = false;
        let mut items = Vec::new();
        if self.eat_keyword("distinct") {
            distinct = true;
            // `distinct(x)` is read as statement-level DISTINCT applied to
            // the whole row.
            if self.eat(&Tok::LParen) {
                let col = self.column_ref()?;
                self.expect(Tok::RParen, ")")?;
                let alias = self.item_alias()?;
                items.push(SelectItem {
                    expr: SelectExpr::Column(col),
                    alias,
                });
                if !self.eat(&Tok::Comma) {
                    return self.query_tail(distinct, items);
                }
            }
        }
        loop {
            items.push(self.select_item()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.query_tail(distinct, items)
    }

    fn query_tail(&mut self, distinct: bool, items: Vec<SelectItem>) -> Result<Query> {
        if !self.eat_keyword("from") {
            return Err(self.unexpected(&["FROM", ","]));
        }
        let mut from = Vec::new();
        loop {
            if self.at_keyword("select") || self.peek().is_some_and(|t| t.tok == Tok::LParen) {
                return Err(Error::Unsupported("subquery".into()));
            }
            let table = self.ident()?;
            let alias = if self.eat_keyword("as") || self.at_alias() {
                Some(self.ident()?)
            } else {
                None
            };
            from.push(TableRef { table, alias });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let mut predicates = Vec::new();
        if self.eat_keyword("where") {
            loop {
                predicates.push(self.predicate()?);
                if !self.eat_keyword("and") {
                    break;
                }
            }
        }
        let mut group_by = Vec::new();
        if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            loop {
                group_by.push(self.column_ref()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        if !self.at_end() && self.peek().is_some_and(|t| t.tok != Tok::Semi) {
            let mut expected = vec![","];
            if predicates.is_empty() && group_by.is_empty() {
                expected.push("WHERE");
            } else if group_by.is_empty() {
                expected.push("AND");
            }
            if group_by.is_empty() {
                expected.push("GROUP BY");
            }
            expected.push(";");
            return Err(self.unexpected(&expected));
        }
        let q = Query {
            distinct,
            items,
            from,
            predicates,
            group_by,
        };
        check_query(&q)?;
        Ok(q)
    }

    fn item_alias(&mut self) -> Result<Option<String>> {
        if self.eat_keyword("as") || self.at_alias() {
            Ok(Some(self.ident()?))
        } else {
            Ok(None)
        }
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if self.eat(&Tok::Star) {
            return Ok(SelectItem {
                expr: SelectExpr::Star(None),
                alias: None,
            });
        }
        if self.at_keyword("count") && self.peek_at(1).is_some_and(|t| t.tok == Tok::LParen) {
            self.pos += 2;
            let expr = if self.eat(&Tok::Star) {
                SelectExpr::CountStar
            } else {
                SelectExpr::Count(self.column_ref()?)
            };
            self.expect(Tok::RParen, ")")?;
            let alias = self.item_alias()?;
            return Ok(SelectItem { expr, alias });
        }
        if let Some(Token {
            tok: Tok::Ident(w), ..
        }) = self.peek()
        {
            if self.peek_at(1).is_some_and(|t| t.tok == Tok::LParen) {
                return Err(Error::Unsupported(format!("function {w}")));
            }
        }
        let first = self.ident()?;
        if self.eat(&Tok::Dot) {
            if self.eat(&Tok::Star) {
                return Ok(SelectItem {
                    expr: SelectExpr::Star(Some(first)),
                    alias: None,
                });
            }
            let column = self.ident()?;
            let alias = self.item_alias()?;
            return Ok(SelectItem {
                expr: SelectExpr::Column(ColumnRef {
                    qualifier: Some(first),
                    column,
                }),
                alias,
            });
        }
        let alias = self.item_alias()?;
        Ok(SelectItem {
            expr: SelectExpr::Column(ColumnRef {
                qualifier: None,
                column: first,
            }),
            alias,
        })
    }

    fn column_ref(&mut self) -> Result<ColumnRef> {
        let first = self.ident()?;
        if self.eat(&Tok::Dot) {
            let column = self.ident()?;
            Ok(ColumnRef {
                qualifier: Some(first),
                column,
            })
        } else {
            Ok(ColumnRef {
                qualifier: None,
                column: first,
            })
        }
    }

    fn operand(&mut self) -> Result<Operand> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Operand::Literal(Value::Text(s)))
            }
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Operand::Literal(Value::Number(n)))
            }
            Some(Tok::LParen) => Err(self.unexpected(&["column", "literal"])),
            _ => self.column_ref().map(Operand::Column),
        }
    }

    fn predicate(&mut self) -> Result<Predicate> {
        if self.at_keyword("not") || self.at_keyword("exists") {
            return Err(self.unexpected(&[]));
        }
        let left = self.operand()?;
        let op = match self.peek().map(|t| &t.tok) {
            Some(Tok::Eq) => CmpOp::Eq,
            Some(Tok::Ge) => CmpOp::Ge,
            Some(Tok::Le) => CmpOp::Le,
            _ => return Err(self.unexpected(&["=", ">=", "<="])),
        };
        self.pos += 1;
        let right = self.operand()?;
        if matches!((&left, &right), (Operand::Literal(_), Operand::Literal(_))) {
            return Err(Error::Unsupported(format!("predicate without a column: {left} .. {right}")));
        }
        Ok(Predicate { left, op, right })
    }
}

/// Static checks that do not need the database: qualifiers name a FROM
/// entry, aliases are unique, and counts only appear in aggregates.
pub fn check_query(q: &Query) -> Result<()> {
    let mut names: Vec<String> = Vec::new();
    for t in &q.from {
        let n = fold(t.name());
        if names.contains(&n) {
            return Err(Error::Resolution(format!("duplicate table alias {}", t.name())));
        }
        names.push(n);
    }
    let check = |qual: &Option<String>| -> Result<()> {
        match qual {
            Some(a) if !names.contains(&fold(a)) => {
                Err(Error::Resolution(format!("unknown table alias {a}")))
            }
            _ => Ok(()),
        }
    };
    for item in &q.items {
        match &item.expr {
            SelectExpr::Column(c) | SelectExpr::Count(c) => check(&c.qualifier)?,
            SelectExpr::Star(q) => check(q)?,
            SelectExpr::CountStar => {}
        }
    }
    for p in &q.predicates {
        for o in [&p.left, &p.right] {
            if let Operand::Column(c) = o {
                check(&c.qualifier)?;
            }
        }
    }
    for c in &q.group_by {
        check(&c.qualifier)?;
    }
    let counts = q
        .items
        .iter()
        .filter(|i| matches!(i.expr, SelectExpr::CountStar | SelectExpr::Count(_)))
        .count();
    if counts > 0 && q.group_by.is_empty() && counts != q.items.len() {
        return Err(Error::Resolution(
            "count mixed with plain columns requires GROUP BY".into(),
        ));
    }
    Ok(())
}
