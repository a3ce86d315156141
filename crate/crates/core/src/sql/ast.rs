use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggOp {
    None,
    Max,
    Min,
    Count,
    Sum,
    Avg,
}

impl AggOp {
    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "max" => AggOp::Max,
            "min" => AggOp::Min,
            "count" => AggOp::Count,
            "sum" => AggOp::Sum,
            "avg" => AggOp::Avg,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            AggOp::None => "",
            AggOp::Max => "max",
            AggOp::Min => "min",
            AggOp::Count => "count",
            AggOp::Sum => "sum",
            AggOp::Avg => "avg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitOp {
    None,
    Minus,
    Plus,
    Times,
    Divide,
}

impl UnitOp {
    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "-" => UnitOp::Minus,
            "+" => UnitOp::Plus,
            "*" => UnitOp::Times,
            "/" => UnitOp::Divide,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            UnitOp::None => "",
            UnitOp::Minus => "-",
            UnitOp::Plus => "+",
            UnitOp::Times => "*",
            UnitOp::Divide => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CondOp {
    Between,
    Eq,
    Gt,
    Lt,
    Ge,
    Le,
    Ne,
    In,
    Like,
    Is,
    Exists,
}

impl CondOp {
    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "between" => CondOp::Between,
            "=" => CondOp::Eq,
            ">" => CondOp::Gt,
            "<" => CondOp::Lt,
            ">=" => CondOp::Ge,
            "<=" => CondOp::Le,
            "!=" => CondOp::Ne,
            "in" => CondOp::In,
            "like" => CondOp::Like,
            "is" => CondOp::Is,
            "exists" => CondOp::Exists,
            _ => return None,
        })
    }

    pub fn token(self) -> &'static str {
        match self {
            CondOp::Between => "BETWEEN",
            CondOp::Eq => "=",
            CondOp::Gt => ">",
            CondOp::Lt => "<",
            CondOp::Ge => ">=",
            CondOp::Le => "<=",
            CondOp::Ne => "!=",
            CondOp::In => "IN",
            CondOp::Like => "LIKE",
            CondOp::Is => "IS",
            CondOp::Exists => "EXISTS",
        }
    }
}

/// Resolved column, lowercased original names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ColumnId {
    All,
    Column { table: String, column: String },
}

impl ColumnId {
    pub fn new(table: &str, column: &str) -> Self {
        ColumnId::Column {
            table: table.to_lowercase(),
            column: column.to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColUnit {
    pub agg: AggOp,
    pub column: ColumnId,
    pub distinct: bool,
}

impl ColUnit {
    pub fn plain(column: ColumnId) -> Self {
        ColUnit {
            agg: AggOp::None,
            column,
            distinct: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValUnit {
    pub op: UnitOp,
    pub left: ColUnit,
    pub right: Option<ColUnit>,
}

impl ValUnit {
    pub fn col(unit: ColUnit) -> Self {
        ValUnit {
            op: UnitOp::None,
            left: unit,
            right: None,
        }
    }
}

/// Numeric literal with a total order, `-0.0` folded into `0.0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Number(f64);

impl Number {
    pub fn new(v: f64) -> Self {
        Number(if v == 0.0 { 0.0 } else { v })
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Number {}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Number(Number),
    Str(String),
    Column(ColUnit),
    Subquery(Box<SqlTree>),
    /// A literal removed by value abstraction.
    Masked,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CondUnit {
    pub negated: bool,
    pub op: CondOp,
    pub lhs: ValUnit,
    pub first: Value,
    pub second: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conj {
    And,
    Or,
}

/// `units[0] conjs[0] units[1] ...`; `conjs.len() + 1 == units.len()` unless empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub units: Vec<CondUnit>,
    pub conjs: Vec<Conj>,
}

impl Condition {
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn single(unit: CondUnit) -> Self {
        Condition {
            units: vec![unit],
            conjs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SelectItem {
    pub agg: AggOp,
    pub value: ValUnit,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TableUnit {
    Table(String),
    Subquery(Box<SqlTree>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct From {
    pub tables: Vec<TableUnit>,
    /// All `ON` conditions flattened, groups joined with `AND`.
    pub conditions: Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderBy {
    pub direction: Direction,
    pub items: Vec<ValUnit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Intersect,
    Union,
    Except,
}

impl SetOp {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOp::Intersect => "INTERSECT",
            SetOp::Union => "UNION",
            SetOp::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SqlTree {
    pub select: Select,
    pub from: From,
    pub where_clause: Condition,
    pub group_by: Vec<ColUnit>,
    pub having: Condition,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
    pub compound: Option<(SetOp, Box<SqlTree>)>,
}

impl SqlTree {
    /// The tree an unparsable prediction is scored as.
    pub fn empty() -> Self {
        SqlTree::default()
    }

    /// Calls `f` on every column unit in the tree, subqueries included.
    pub fn visit_columns(&self, f: &mut impl FnMut(&ColUnit)) {
        self.visit_columns_dyn(f)
    }

    fn visit_columns_dyn(&self, f: &mut dyn FnMut(&ColUnit)) {
        let val = |v: &ValUnit, f: &mut dyn FnMut(&ColUnit)| {
            f(&v.left);
            if let Some(r) = &v.right {
                f(r);
            }
        };
        let cond = |c: &Condition, f: &mut dyn FnMut(&ColUnit)| {
            for u in &c.units {
                val(&u.lhs, f);
                for v in std::iter::once(&u.first).chain(u.second.as_ref()) {
                    match v {
                        Value::Column(cu) => f(cu),
                        Value::Subquery(t) => t.visit_columns_dyn(f),
                        _ => {}
                    }
                }
            }
        };
        for item in &self.select.items {
            val(&item.value, f);
        }
        for t in &self.from.tables {
            if let TableUnit::Subquery(s) = t {
                s.visit_columns_dyn(f);
            }
        }
        cond(&self.from.conditions, f);
        cond(&self.where_clause, f);
        for g in &self.group_by {
            f(g);
        }
        cond(&self.having, f);
        if let Some(o) = &self.order_by {
            for v in &o.items {
                val(v, f);
            }
        }
        if let Some((_, t)) = &self.compound {
            t.visit_columns_dyn(f);
        }
    }

    /// Calls `f` on every table name in the tree, subqueries included.
    pub fn visit_tables(&self, f: &mut impl FnMut(&str)) {
        for t in &self.from.tables {
            match t {
                TableUnit::Table(name) => f(name),
                TableUnit::Subquery(s) => s.visit_tables(f),
            }
        }
        for c in [&self.from.conditions, &self.where_clause, &self.having] {
            for u in &c.units {
                for v in std::iter::once(&u.first).chain(u.second.as_ref()) {
                    if let Value::Subquery(s) = v {
                        s.visit_tables(f);
                    }
                }
            }
        }
        if let Some((_, t)) = &self.compound {
            t.visit_tables(f);
        }
    }
}
