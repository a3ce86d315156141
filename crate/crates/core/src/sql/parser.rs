use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::tokenizer::{tokenize, Token, TokenKind};
use super::{ErrorKind, SqlError};
use crate::model::DatabaseSchema;

const CLAUSE_KEYWORDS: &[&str] = &[
    "select", "from", "where", "group", "order", "limit", "intersect", "union", "except",
];
const JOIN_KEYWORDS: &[&str] = &["join", "on", "as"];
const SET_OPS: &[&str] = &["intersect", "union", "except"];

/// Lowercased table and column names of one database.
#[derive(Debug, Clone, Default)]
pub struct SchemaIndex {
    tables: BTreeMap<String, Vec<String>>,
}

impl SchemaIndex {
    pub fn new(schema: &DatabaseSchema) -> Self {
        let tables = schema
            .tables
            .iter()
            .map(|t| {
                (
                    t.original_name.to_lowercase(),
                    t.columns.iter().map(|c| c.original_name.to_lowercase()).collect(),
                )
            })
            .collect();
        SchemaIndex { tables }
    }

    pub fn has_table(&self, table: &str) -> bool {
        self.tables.contains_key(table)
    }

    pub fn has_column(&self, table: &str, column: &str) -> bool {
        self.tables
            .get(table)
            .is_some_and(|cols| cols.iter().any(|c| c == column))
    }

    pub fn columns(&self, table: &str) -> &[String] {
        self.tables.get(table).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }
}

/// What an identifier occurrence in the source resolved to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolved {
    Table { table: String },
    Column { table: String, column: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub span: Range<usize>,
    pub target: Resolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub tree: SqlTree,
    /// Table and column name occurrences, sorted by position. Aliases are not included.
    pub resolutions: Vec<Resolution>,
}

pub fn parse(sql: &str, schema: &DatabaseSchema) -> Result<SqlTree, SqlError> {
    parse_with_spans(sql, schema).map(|p| p.tree)
}

pub fn parse_with_spans(sql: &str, schema: &DatabaseSchema) -> Result<Parsed, SqlError> {
    parse_indexed(sql, &SchemaIndex::new(schema))
}

/// Parses against a prebuilt index. Tokens after a complete statement are ignored.
pub fn parse_indexed(sql: &str, index: &SchemaIndex) -> Result<Parsed, SqlError> {
    let toks = tokenize(sql)?;
    if toks.is_empty() {
        return Err(SqlError::new(ErrorKind::Empty, 0));
    }
    let mut p = Parser {
        src: sql,
        index,
        aliases: HashMap::new(),
        resolutions: Vec::new(),
    };
    p.scan_aliases(&toks)?;
    let (_, tree) = p.parse_sql(&toks, 0)?;
    let mut resolutions = p.resolutions;
    resolutions.sort_by(|a, b| (a.span.start, a.span.end, &a.target).cmp(&(b.span.start, b.span.end, &b.target)));
    resolutions.dedup();
    Ok(Parsed { tree, resolutions })
}

type PResult<T> = Result<(usize, T), SqlError>;

struct Parser<'s> {
    src: &'s str,
    index: &'s SchemaIndex,
    aliases: HashMap<String, String>,
    resolutions: Vec<Resolution>,
}

fn key_of(tok: &Token) -> String {
    tok.display()
}

fn is_clause(tok: &Token) -> bool {
    tok.is_any(CLAUSE_KEYWORDS)
}

impl<'s> Parser<'s> {
    fn at<'t>(&self, toks: &'t [Token], idx: usize) -> Result<&'t Token, SqlError> {
        toks.get(idx)
            .ok_or_else(|| SqlError::new(ErrorKind::UnexpectedEnd, self.src.len()))
    }

    fn expect(&self, toks: &[Token], idx: usize, what: &'static str) -> Result<(), SqlError> {
        let tok = self.at(toks, idx)?;
        if tok.is(what) {
            Ok(())
        } else {
            Err(unexpected(tok, what))
        }
    }

    fn scan_aliases(&mut self, toks: &[Token]) -> Result<(), SqlError> {
        for (i, tok) in toks.iter().enumerate() {
            if !tok.is("as") {
                continue;
            }
            let Some(prev) = i.checked_sub(1).map(|j| &toks[j]) else {
                return Err(unexpected(tok, "a table before AS"));
            };
            let alias = self.at(toks, i + 1)?;
            self.aliases.insert(key_of(alias), key_of(prev));
        }
        for table in self.index.table_names() {
            if self.aliases.contains_key(table) {
                let offset = toks
                    .iter()
                    .find(|t| t.is(table))
                    .map_or(0, |t| t.span.start);
                return Err(SqlError::new(ErrorKind::AliasShadowsTable(table.to_string()), offset));
            }
        }
        for table in self.index.table_names() {
            self.aliases.insert(table.to_string(), table.to_string());
        }
        Ok(())
    }

    fn record(&mut self, span: Range<usize>, target: Resolved) {
        self.resolutions.push(Resolution { span, target });
    }

    fn parse_col(&mut self, toks: &[Token], idx: usize, scope: &[String]) -> PResult<ColumnId> {
        let tok = self.at(toks, idx)?;
        if tok.is("*") {
            return Ok((idx + 1, ColumnId::All));
        }
        let TokenKind::Word(text) = &tok.kind else {
            return Err(SqlError::new(ErrorKind::UnknownColumn(tok.display()), tok.span.start));
        };
        if text.contains('.') {
            let mut parts = text.split('.');
            let (Some(alias), Some(col), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(SqlError::new(ErrorKind::MalformedColumn(text.clone()), tok.span.start));
            };
            let table = self
                .aliases
                .get(alias)
                .cloned()
                .ok_or_else(|| SqlError::new(ErrorKind::UnknownTable(alias.to_string()), tok.span.start))?;
            if !self.index.has_column(&table, col) {
                return Err(SqlError::new(
                    ErrorKind::UnknownColumn(format!("{alias}.{col}")),
                    tok.span.start,
                ));
            }
            let raw = &self.src[tok.span.clone()];
            let dot = tok.span.start + raw.find('.').unwrap_or(0);
            if alias == table {
                self.record(tok.span.start..dot, Resolved::Table { table: table.clone() });
            }
            self.record(
                dot + 1..tok.span.end,
                Resolved::Column {
                    table: table.clone(),
                    column: col.to_string(),
                },
            );
            return Ok((idx + 1, ColumnId::new(&table, col)));
        }
        if scope.is_empty() {
            return Err(SqlError::new(ErrorKind::NoTableInScope(text.clone()), tok.span.start));
        }
        for alias in scope {
            let Some(table) = self.aliases.get(alias).cloned() else {
                continue;
            };
            if self.index.has_column(&table, text) {
                self.record(
                    tok.span.clone(),
                    Resolved::Column {
                        table: table.clone(),
                        column: text.clone(),
                    },
                );
                return Ok((idx + 1, ColumnId::new(&table, text)));
            }
        }
        Err(SqlError::new(ErrorKind::UnknownColumn(text.clone()), tok.span.start))
    }

    fn parse_col_unit(&mut self, toks: &[Token], start: usize, scope: &[String]) -> PResult<ColUnit> {
        let mut idx = start;
        let mut is_block = false;
        let mut distinct = false;
        if self.at(toks, idx)?.is("(") {
            is_block = true;
            idx += 1;
        }
        let tok = self.at(toks, idx)?;
        if let Some(agg) = tok.text().and_then(AggOp::from_keyword) {
            idx += 1;
            match toks.get(idx) {
                Some(t) if t.is("(") => idx += 1,
                Some(t) => return Err(unexpected(t, "(")),
                None => return Err(SqlError::new(ErrorKind::UnexpectedEnd, self.src.len())),
            }
            if self.at(toks, idx)?.is("distinct") {
                idx += 1;
                distinct = true;
            }
            let (next, column) = self.parse_col(toks, idx, scope)?;
            idx = next;
            match toks.get(idx) {
                Some(t) if t.is(")") => idx += 1,
                Some(t) => return Err(unexpected(t, ")")),
                None => return Err(SqlError::new(ErrorKind::UnexpectedEnd, self.src.len())),
            }
            // the opening block paren, if any, is left for the caller
            return Ok((idx, ColUnit { agg, column, distinct }));
        }
        if tok.is("distinct") {
            idx += 1;
            distinct = true;
        }
        let (next, column) = self.parse_col(toks, idx, scope)?;
        idx = next;
        if is_block {
            self.expect(toks, idx, ")")?;
            idx += 1;
        }
        Ok((
            idx,
            ColUnit {
                agg: AggOp::None,
                column,
                distinct,
            },
        ))
    }

    fn parse_val_unit(&mut self, toks: &[Token], start: usize, scope: &[String]) -> PResult<ValUnit> {
        let mut idx = start;
        let mut is_block = false;
        if self.at(toks, idx)?.is("(") {
            is_block = true;
            idx += 1;
        }
        let (next, left) = self.parse_col_unit(toks, idx, scope)?;
        idx = next;
        let mut op = UnitOp::None;
        let mut right = None;
        if let Some(o) = toks.get(idx).and_then(|t| t.text()).and_then(UnitOp::from_symbol) {
            op = o;
            idx += 1;
            let (next, r) = self.parse_col_unit(toks, idx, scope)?;
            idx = next;
            right = Some(r);
        }
        if is_block {
            self.expect(toks, idx, ")")?;
            idx += 1;
        }
        Ok((idx, ValUnit { op, left, right }))
    }

    fn parse_table_unit(&mut self, toks: &[Token], start: usize) -> PResult<String> {
        let tok = self.at(toks, start)?;
        let key = key_of(tok);
        let table = self
            .aliases
            .get(&key)
            .cloned()
            .ok_or_else(|| SqlError::new(ErrorKind::UnknownTable(key.clone()), tok.span.start))?;
        if !self.index.has_table(&table) {
            return Err(SqlError::new(ErrorKind::UnknownTable(table), tok.span.start));
        }
        if key == table {
            self.record(tok.span.clone(), Resolved::Table { table: table.clone() });
        }
        let idx = if toks.get(start + 1).is_some_and(|t| t.is("as")) {
            start + 3
        } else {
            start + 1
        };
        Ok((idx, table))
    }

    fn parse_value(&mut self, toks: &[Token], start: usize, scope: &[String]) -> PResult<Value> {
        let mut idx = start;
        let mut is_block = false;
        if self.at(toks, idx)?.is("(") {
            is_block = true;
            idx += 1;
        }
        let tok = self.at(toks, idx)?;
        let value = if tok.is("select") {
            let (next, sql) = self.parse_sql(toks, idx)?;
            idx = next;
            Value::Subquery(Box::new(sql))
        } else if let TokenKind::Str(s) = &tok.kind {
            idx += 1;
            Value::Str(s.clone())
        } else if let Some(n) = tok.text().and_then(|t| t.parse::<f64>().ok()) {
            idx += 1;
            Value::Number(Number::new(n))
        } else {
            let mut end = idx;
            while end < toks.len()
                && !toks[end].is_any(&[",", ")", "and"])
                && !is_clause(&toks[end])
                && !toks[end].is_any(JOIN_KEYWORDS)
            {
                end += 1;
            }
            let (_, unit) = self.parse_col_unit(&toks[start..end], 0, scope)?;
            idx = end;
            Value::Column(unit)
        };
        if is_block {
            self.expect(toks, idx, ")")?;
            idx += 1;
        }
        Ok((idx, value))
    }

    fn parse_condition(&mut self, toks: &[Token], start: usize, scope: &[String]) -> PResult<Condition> {
        let mut idx = start;
        let mut cond = Condition::default();
        while idx < toks.len() {
            let (next, lhs) = self.parse_val_unit(toks, idx, scope)?;
            idx = next;
            let mut negated = false;
            if self.at(toks, idx)?.is("not") {
                negated = true;
                idx += 1;
            }
            let tok = self.at(toks, idx)?;
            let op = tok
                .text()
                .and_then(CondOp::from_token)
                .ok_or_else(|| unexpected(tok, "a comparison operator"))?;
            idx += 1;
            let (next, first) = self.parse_value(toks, idx, scope)?;
            idx = next;
            let mut second = None;
            if op == CondOp::Between {
                self.expect(toks, idx, "and")?;
                let (next, v) = self.parse_value(toks, idx + 1, scope)?;
                idx = next;
                second = Some(v);
            }
            cond.units.push(CondUnit {
                negated,
                op,
                lhs,
                first,
                second,
            });
            let Some(tok) = toks.get(idx) else {
                break;
            };
            if is_clause(tok) || tok.is_any(&[")", ";"]) || tok.is_any(JOIN_KEYWORDS) {
                break;
            }
            if tok.is("and") {
                cond.conjs.push(Conj::And);
            } else if tok.is("or") {
                cond.conjs.push(Conj::Or);
            } else {
                return Err(SqlError::new(ErrorKind::MissingConjunction(tok.display()), tok.span.start));
            }
            idx += 1;
        }
        if !cond.units.is_empty() && cond.conjs.len() >= cond.units.len() {
            return Err(SqlError::new(ErrorKind::TrailingConjunction, self.src.len()));
        }
        Ok((idx, cond))
    }

    fn parse_select(&mut self, toks: &[Token], start: usize, scope: &[String]) -> PResult<Select> {
        self.expect(toks, start, "select")?;
        let mut idx = start + 1;
        let mut select = Select::default();
        if toks.get(idx).is_some_and(|t| t.is("distinct")) {
            idx += 1;
            select.distinct = true;
        }
        while idx < toks.len() && !is_clause(&toks[idx]) {
            let mut agg = AggOp::None;
            if let Some(a) = toks[idx].text().and_then(AggOp::from_keyword) {
                agg = a;
                idx += 1;
            }
            let (next, value) = self.parse_val_unit(toks, idx, scope)?;
            idx = next;
            select.items.push(SelectItem { agg, value });
            if toks.get(idx).is_some_and(|t| t.is(",")) {
                idx += 1;
            }
        }
        Ok((idx, select))
    }

    fn parse_from(&mut self, toks: &[Token], start: usize) -> PResult<(From, Vec<String>)> {
        let from_pos = (start..toks.len())
            .find(|&i| toks[i].is("from"))
            .ok_or_else(|| SqlError::new(ErrorKind::MissingFrom, toks.get(start).map_or(0, |t| t.span.start)))?;
        let mut idx = from_pos + 1;
        let mut from = From::default();
        let mut scope: Vec<String> = Vec::new();
        while idx < toks.len() {
            let mut is_block = false;
            if toks[idx].is("(") {
                is_block = true;
                idx += 1;
            }
            if self.at(toks, idx)?.is("select") {
                let (next, sql) = self.parse_sql(toks, idx)?;
                idx = next;
                from.tables.push(TableUnit::Subquery(Box::new(sql)));
            } else {
                if toks.get(idx).is_some_and(|t| t.is("join")) {
                    idx += 1;
                }
                let (next, table) = self.parse_table_unit(toks, idx)?;
                idx = next;
                from.tables.push(TableUnit::Table(table.clone()));
                scope.push(table);
            }
            if toks.get(idx).is_some_and(|t| t.is("on")) {
                let (next, cond) = self.parse_condition(toks, idx + 1, &scope)?;
                idx = next;
                if !from.conditions.is_empty() && !cond.is_empty() {
                    from.conditions.conjs.push(Conj::And);
                }
                from.conditions.units.extend(cond.units);
                from.conditions.conjs.extend(cond.conjs);
            }
            if is_block {
                self.expect(toks, idx, ")")?;
                idx += 1;
            }
            if toks
                .get(idx)
                .is_some_and(|t| is_clause(t) || t.is_any(&[")", ";"]))
            {
                break;
            }
        }
        Ok((idx, (from, scope)))
    }

    fn parse_sql(&mut self, toks: &[Token], start: usize) -> PResult<SqlTree> {
        let mut idx = start;
        let mut is_block = false;
        if self.at(toks, idx)?.is("(") {
            is_block = true;
            idx += 1;
        }
        let (from_end, (from, scope)) = self.parse_from(toks, start)?;
        let (_, select) = self.parse_select(toks, idx, &scope)?;
        idx = from_end;
        let mut tree = SqlTree {
            select,
            from,
            ..SqlTree::default()
        };

        if toks.get(idx).is_some_and(|t| t.is("where")) {
            let (next, cond) = self.parse_condition(toks, idx + 1, &scope)?;
            idx = next;
            tree.where_clause = cond;
        }

        if toks.get(idx).is_some_and(|t| t.is("group")) {
            self.expect(toks, idx + 1, "by")?;
            idx += 2;
            while idx < toks.len() && !(is_clause(&toks[idx]) || toks[idx].is_any(&[")", ";"])) {
                let (next, unit) = self.parse_col_unit(toks, idx, &scope)?;
                idx = next;
                tree.group_by.push(unit);
                if toks.get(idx).is_some_and(|t| t.is(",")) {
                    idx += 1;
                } else {
                    break;
                }
            }
        }

        if toks.get(idx).is_some_and(|t| t.is("having")) {
            let (next, cond) = self.parse_condition(toks, idx + 1, &scope)?;
            idx = next;
            tree.having = cond;
        }

        if toks.get(idx).is_some_and(|t| t.is("order")) {
            self.expect(toks, idx + 1, "by")?;
            idx += 2;
            let mut order = OrderBy {
                direction: Direction::Asc,
                items: Vec::new(),
            };
            while idx < toks.len() && !(is_clause(&toks[idx]) || toks[idx].is_any(&[")", ";"])) {
                let (next, unit) = self.parse_val_unit(toks, idx, &scope)?;
                idx = next;
                order.items.push(unit);
                match toks.get(idx).and_then(|t| t.text()) {
                    Some("asc") => {
                        order.direction = Direction::Asc;
                        idx += 1;
                    }
                    Some("desc") => {
                        order.direction = Direction::Desc;
                        idx += 1;
                    }
                    _ => {}
                }
                if toks.get(idx).is_some_and(|t| t.is(",")) {
                    idx += 1;
                } else {
                    break;
                }
            }
            tree.order_by = Some(order);
        }

        if toks.get(idx).is_some_and(|t| t.is("limit")) {
            let tok = self.at(toks, idx + 1)?;
            let n = tok
                .text()
                .and_then(|t| t.parse::<u64>().ok())
                .ok_or_else(|| SqlError::new(ErrorKind::InvalidLimit(tok.display()), tok.span.start))?;
            tree.limit = Some(n);
            idx += 2;
        }

        while toks.get(idx).is_some_and(|t| t.is(";")) {
            idx += 1;
        }
        if is_block {
            self.expect(toks, idx, ")")?;
            idx += 1;
        }
        while toks.get(idx).is_some_and(|t| t.is(";")) {
            idx += 1;
        }
        if let Some(op) = toks.get(idx).filter(|t| t.is_any(SET_OPS)).and_then(|t| t.text()) {
            let op = match op {
                "intersect" => SetOp::Intersect,
                "union" => SetOp::Union,
                _ => SetOp::Except,
            };
            let (next, rhs) = self.parse_sql(toks, idx + 1)?;
            idx = next;
            tree.compound = Some((op, Box::new(rhs)));
        }
        Ok((idx, tree))
    }
}

fn unexpected(tok: &Token, expected: &'static str) -> SqlError {
    SqlError::new(
        ErrorKind::Unexpected {
            expected,
            found: tok.display(),
        },
        tok.span.start,
    )
}
