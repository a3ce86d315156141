use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ast::*;
use crate::model::{ColumnRef, DatabaseSchema};

/// Whether literal values take part in matching.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    /// Literals and LIMIT counts are abstracted away.
    #[default]
    WithoutValues,
    WithValues,
}

/// A tree normalized for comparison against trees of the same database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalSql {
    pub mode: ValueMode,
    pub tree: SqlTree,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot compare a {pred:?} tree with a {gold:?} tree")]
pub struct ModeMismatch {
    pub pred: ValueMode,
    pub gold: ValueMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Clause {
    #[serde(rename = "select")]
    Select,
    #[serde(rename = "select(no AGG)")]
    SelectNoAgg,
    #[serde(rename = "where")]
    Where,
    #[serde(rename = "where(no OP)")]
    WhereNoOp,
    #[serde(rename = "group(no Having)")]
    GroupNoHaving,
    #[serde(rename = "group")]
    Group,
    #[serde(rename = "order")]
    Order,
    #[serde(rename = "and/or")]
    AndOr,
    #[serde(rename = "IUEN")]
    Iuen,
    #[serde(rename = "keywords")]
    Keywords,
}

impl Clause {
    pub const ALL: [Clause; 10] = [
        Clause::Select,
        Clause::SelectNoAgg,
        Clause::Where,
        Clause::WhereNoOp,
        Clause::GroupNoHaving,
        Clause::Group,
        Clause::Order,
        Clause::AndOr,
        Clause::Iuen,
        Clause::Keywords,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Clause::Select => "select",
            Clause::SelectNoAgg => "select(no AGG)",
            Clause::Where => "where",
            Clause::WhereNoOp => "where(no OP)",
            Clause::GroupNoHaving => "group(no Having)",
            Clause::Group => "group",
            Clause::Order => "order",
            Clause::AndOr => "and/or",
            Clause::Iuen => "IUEN",
            Clause::Keywords => "keywords",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub exact: bool,
    pub clauses: BTreeMap<Clause, bool>,
}

/// Normalizes parsed trees of one database. Columns linked by foreign keys
/// are replaced by one representative when their table is in the FROM list.
#[derive(Debug, Clone)]
pub struct Canonicalizer {
    key_map: HashMap<ColumnId, ColumnId>,
}

impl Canonicalizer {
    pub fn new(schema: &DatabaseSchema) -> Self {
        let mut offsets = Vec::with_capacity(schema.tables.len());
        let mut next = 1;
        for t in &schema.tables {
            offsets.push(next);
            next += t.columns.len();
        }
        let global = |r: ColumnRef| offsets[r.table] + r.column;
        let id = |g: usize| -> ColumnId {
            let t = offsets.iter().rposition(|&o| o <= g).unwrap_or(0);
            let table = &schema.tables[t];
            ColumnId::new(&table.original_name, &table.columns[g - offsets[t]].original_name)
        };

        // pairs are grouped greedily into the first overlapping set, never merged
        let mut sets: Vec<BTreeSet<usize>> = Vec::new();
        for fk in &schema.foreign_keys {
            let pair = [global(fk.from), global(fk.to)];
            match sets.iter_mut().find(|s| pair.iter().any(|k| s.contains(k))) {
                Some(s) => s.extend(pair),
                None => sets.push(pair.into_iter().collect()),
            }
        }
        let mut key_map = HashMap::new();
        for set in &sets {
            let rep = id(*set.iter().next().unwrap());
            for &k in set {
                key_map.insert(id(k), rep.clone());
            }
        }
        Canonicalizer { key_map }
    }

    pub fn canonicalize(&self, tree: &SqlTree, mode: ValueMode) -> CanonicalSql {
        let mut t = tree.clone();
        if mode == ValueMode::WithoutValues {
            mask_values(&mut t);
            mark_limits(&mut t);
        }
        let valid: BTreeSet<String> = t
            .from
            .tables
            .iter()
            .filter_map(|u| match u {
                TableUnit::Table(name) => Some(name.clone()),
                TableUnit::Subquery(_) => None,
            })
            .collect();
        self.rebuild_columns(&mut t, &valid);
        sort_units(&mut t);
        CanonicalSql { mode, tree: t }
    }

    fn rebuild_col(&self, c: &mut ColUnit, valid: &BTreeSet<String>) {
        c.distinct = false;
        if let ColumnId::Column { table, .. } = &c.column {
            if valid.contains(table) {
                if let Some(rep) = self.key_map.get(&c.column) {
                    c.column = rep.clone();
                }
            }
        }
    }

    fn rebuild_val(&self, v: &mut ValUnit, valid: &BTreeSet<String>) {
        self.rebuild_col(&mut v.left, valid);
        if let Some(r) = &mut v.right {
            self.rebuild_col(r, valid);
        }
    }

    fn rebuild_cond(&self, c: &mut Condition, valid: &BTreeSet<String>) {
        for u in &mut c.units {
            self.rebuild_val(&mut u.lhs, valid);
        }
    }

    fn rebuild_columns(&self, t: &mut SqlTree, valid: &BTreeSet<String>) {
        t.select.distinct = false;
        for item in &mut t.select.items {
            self.rebuild_val(&mut item.value, valid);
        }
        self.rebuild_cond(&mut t.from.conditions, valid);
        self.rebuild_cond(&mut t.where_clause, valid);
        for g in &mut t.group_by {
            self.rebuild_col(g, valid);
        }
        if let Some(o) = &mut t.order_by {
            for v in &mut o.items {
                self.rebuild_val(v, valid);
            }
        }
        self.rebuild_cond(&mut t.having, valid);
        if let Some((_, sub)) = &mut t.compound {
            self.rebuild_columns(sub, valid);
        }
    }
}

fn mask_value(v: &mut Value) {
    match v {
        Value::Subquery(t) => mask_values(t),
        _ => *v = Value::Masked,
    }
}

fn mask_values(t: &mut SqlTree) {
    for c in [&mut t.from.conditions, &mut t.where_clause, &mut t.having] {
        for u in &mut c.units {
            mask_value(&mut u.first);
            if let Some(s) = &mut u.second {
                mask_value(s);
            }
        }
    }
    if let Some((_, sub)) = &mut t.compound {
        mask_values(sub);
    }
}

fn mark_limits(t: &mut SqlTree) {
    if t.limit.is_some() {
        t.limit = Some(1);
    }
    for u in &mut t.from.tables {
        if let TableUnit::Subquery(s) = u {
            mark_limits(s);
        }
    }
    for c in [&mut t.from.conditions, &mut t.where_clause, &mut t.having] {
        for u in &mut c.units {
            for v in std::iter::once(&mut u.first).chain(u.second.as_mut()) {
                if let Value::Subquery(s) = v {
                    mark_limits(s);
                }
            }
        }
    }
    if let Some((_, sub)) = &mut t.compound {
        mark_limits(sub);
    }
}

fn sort_units(t: &mut SqlTree) {
    t.select.items.sort();
    t.from.tables.sort();
    t.where_clause.units.sort();
    t.where_clause.conjs.sort();
    if let Some((_, sub)) = &mut t.compound {
        sort_units(sub);
    }
}

/// Compares a predicted tree with a gold tree clause by clause.
pub fn exact_match(pred: &CanonicalSql, gold: &CanonicalSql) -> Result<MatchResult, ModeMismatch> {
    if pred.mode != gold.mode {
        return Err(ModeMismatch {
            pred: pred.mode,
            gold: gold.mode,
        });
    }
    let clauses = partial(&pred.tree, &gold.tree);
    let exact = is_exact(&pred.tree, &gold.tree, &clauses);
    Ok(MatchResult { exact, clauses })
}

fn is_exact(pred: &SqlTree, gold: &SqlTree, clauses: &BTreeMap<Clause, bool>) -> bool {
    if !clauses.values().all(|&m| m) {
        return false;
    }
    if gold.from.tables.is_empty() {
        return true;
    }
    let mut p = pred.from.tables.clone();
    let mut g = gold.from.tables.clone();
    p.sort();
    g.sort();
    p == g
}

fn same_multiset<T: Ord + Clone>(pred: &[T], gold: &[T]) -> bool {
    let mut p = pred.to_vec();
    let mut g = gold.to_vec();
    p.sort();
    g.sort();
    p == g
}

fn partial(pred: &SqlTree, gold: &SqlTree) -> BTreeMap<Clause, bool> {
    let mut out = BTreeMap::new();

    out.insert(Clause::Select, same_multiset(&pred.select.items, &gold.select.items));
    let vals = |t: &SqlTree| t.select.items.iter().map(|i| i.value.clone()).collect::<Vec<_>>();
    out.insert(Clause::SelectNoAgg, same_multiset(&vals(pred), &vals(gold)));

    out.insert(Clause::Where, same_multiset(&pred.where_clause.units, &gold.where_clause.units));
    let lhs = |t: &SqlTree| t.where_clause.units.iter().map(|u| u.lhs.clone()).collect::<Vec<_>>();
    out.insert(Clause::WhereNoOp, same_multiset(&lhs(pred), &lhs(gold)));

    let group_names = |t: &SqlTree| {
        t.group_by
            .iter()
            .map(|c| match &c.column {
                ColumnId::All => "*".to_string(),
                ColumnId::Column { column, .. } => column.clone(),
            })
            .collect::<Vec<_>>()
    };
    out.insert(Clause::GroupNoHaving, same_multiset(&group_names(pred), &group_names(gold)));

    let group = match (pred.group_by.is_empty(), gold.group_by.is_empty()) {
        (true, true) => true,
        (false, false) => {
            let ids = |t: &SqlTree| t.group_by.iter().map(|c| c.column.clone()).collect::<Vec<_>>();
            ids(pred) == ids(gold) && pred.having == gold.having
        }
        _ => false,
    };
    out.insert(Clause::Group, group);

    let order = match (&pred.order_by, &gold.order_by) {
        (None, None) => true,
        (_, Some(g)) => pred.order_by.as_ref() == Some(g) && pred.limit == gold.limit,
        (Some(_), None) => false,
    };
    out.insert(Clause::Order, order);

    let conjs = |t: &SqlTree| t.where_clause.conjs.iter().copied().collect::<BTreeSet<_>>();
    out.insert(Clause::AndOr, conjs(pred) == conjs(gold));

    let iuen = match (&pred.compound, &gold.compound) {
        (None, None) => true,
        (Some((po, p)), Some((go, g))) => po == go && {
            let c = partial(p, g);
            is_exact(p, g, &c)
        },
        _ => false,
    };
    out.insert(Clause::Iuen, iuen);

    out.insert(Clause::Keywords, keywords(pred) == keywords(gold));
    out
}

fn keywords(t: &SqlTree) -> BTreeSet<&'static str> {
    let mut k = BTreeSet::new();
    if !t.where_clause.is_empty() {
        k.insert("where");
    }
    if !t.group_by.is_empty() {
        k.insert("group");
    }
    if !t.having.is_empty() {
        k.insert("having");
    }
    if let Some(o) = &t.order_by {
        k.insert("order");
        k.insert(match o.direction {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
        });
    }
    if t.limit.is_some() {
        k.insert("limit");
    }
    if let Some((op, _)) = &t.compound {
        k.insert(match op {
            SetOp::Except => "except",
            SetOp::Union => "union",
            SetOp::Intersect => "intersect",
        });
    }
    for c in [&t.from.conditions, &t.where_clause, &t.having] {
        if c.conjs.contains(&Conj::Or) {
            k.insert("or");
        }
        for u in &c.units {
            if u.negated {
                k.insert("not");
            }
            match u.op {
                CondOp::In => {
                    k.insert("in");
                }
                CondOp::Like => {
                    k.insert("like");
                }
                _ => {}
            }
        }
    }
    k
}
