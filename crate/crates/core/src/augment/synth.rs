use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use super::pipeline::SynonymMap;
use super::AugmentError;
use crate::model::{Dataset, DatabaseSchema, Example, SchemaItemRef, SchemaMap};
use crate::sql::{
    exact_match, parse, parse_with_spans, Canonicalizer, ColUnit, ColumnId, Condition, Resolved, SqlTree,
    TableUnit, Value, ValueMode,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisPolicy {
    pub variants_per_example: u32,
    /// Chance that an item with synonyms is renamed in a variant.
    pub replace_probability: f64,
    pub seed: u64,
}

impl Default for SynthesisPolicy {
    fn default() -> Self {
        SynthesisPolicy {
            variants_per_example: 2,
            replace_probability: 0.5,
            seed: 0,
        }
    }
}

impl SynthesisPolicy {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(1..=2).contains(&self.variants_per_example) {
            return Err(AugmentError::Config(format!(
                "variants_per_example must be 1 or 2, got {}",
                self.variants_per_example
            )));
        }
        if !(0.0..=1.0).contains(&self.replace_probability) {
            return Err(AugmentError::Config(format!(
                "replace_probability {} outside [0, 1]",
                self.replace_probability
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    UnparsableGold,
    NoReplacement,
    InvalidIdentifier { synonym: String },
    ReservedWord { identifier: String },
    Collision { item: String, name: String },
    Reparse { error: String },
    NotEquivalent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedVariant {
    pub example_id: String,
    pub variant: u32,
    #[serde(flatten)]
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutput {
    /// Originals in input order, then variants.
    pub examples: Vec<Example>,
    /// Schemas of the originals plus every renamed variant schema.
    pub schemas: SchemaMap,
    pub originals: usize,
    pub variants: usize,
    pub skipped: Vec<SkippedVariant>,
}

impl SynthesisOutput {
    pub fn expansion_factor(&self) -> f64 {
        if self.originals == 0 {
            1.0
        } else {
            self.examples.len() as f64 / self.originals as f64
        }
    }
}

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "having", "order", "by", "limit", "intersect", "union", "except",
    "join", "on", "as", "not", "between", "in", "like", "is", "exists", "and", "or", "asc", "desc",
    "distinct", "count", "max", "min", "sum", "avg", "null",
];

// keys of a source record derived from the SQL text
const SQL_DERIVED: &[&str] = &["sql", "query_toks", "query_toks_no_value"];

/// Turns a synonym into an identifier: whitespace runs become `_`,
/// characters other than letters, digits and `_` are dropped.
pub fn to_identifier(synonym: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for c in synonym.nfc() {
        if c.is_whitespace() || c == '-' {
            gap = !out.is_empty();
        } else if c.is_alphanumeric() || c == '_' {
            if gap {
                out.push('_');
                gap = false;
            }
            out.push(c);
        }
    }
    out
}

fn variant_rng(seed: u64, example_id: &str, variant: u32) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(example_id.as_bytes());
    h.update([0u8]);
    h.update(variant.to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone)]
struct Rename {
    item: SchemaItemRef,
    key: String,
    display: String,
    ident: String,
}

fn plan(
    ex: &Example,
    variant: u32,
    schema: &DatabaseSchema,
    synonyms: Option<&BTreeMap<String, Vec<super::SynonymEntry>>>,
    policy: &SynthesisPolicy,
) -> Result<Vec<Rename>, SkipReason> {
    let mut rng = variant_rng(policy.seed, &ex.example_id, variant);
    let mut out = Vec::new();
    for (key, syns) in synonyms.into_iter().flatten() {
        if syns.is_empty() {
            continue;
        }
        let r: f64 = rng.random();
        if r >= policy.replace_probability {
            continue;
        }
        let pick = &syns[rng.random_range(0..syns.len())];
        let Some(item) = schema.item_by_key(key) else { continue };
        let ident = to_identifier(&pick.synonym);
        if ident.is_empty() {
            return Err(SkipReason::InvalidIdentifier {
                synonym: pick.synonym.clone(),
            });
        }
        if RESERVED.contains(&ident.to_lowercase().as_str()) || ident.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(SkipReason::ReservedWord { identifier: ident });
        }
        out.push(Rename {
            item,
            key: key.clone(),
            display: pick.synonym.trim().to_string(),
            ident,
        });
    }
    if out.is_empty() {
        return Err(SkipReason::NoReplacement);
    }
    Ok(out)
}

fn renamed_schema(schema: &DatabaseSchema, renames: &[Rename]) -> Result<DatabaseSchema, SkipReason> {
    let mut s = schema.clone();
    for r in renames {
        match r.item {
            SchemaItemRef::Table { table } => {
                s.tables[table].original_name = r.ident.clone();
                s.tables[table].display_name = r.display.clone();
            }
            SchemaItemRef::Column { table, column } => {
                s.tables[table].columns[column].original_name = r.ident.clone();
                s.tables[table].columns[column].display_name = r.display.clone();
            }
        }
    }
    let clash = |names: Vec<(&str, &str)>, idx: usize, r: &Rename| -> Result<(), SkipReason> {
        let (ident, display) = names[idx];
        for (j, (o, d)) in names.iter().enumerate() {
            if j != idx && (o.eq_ignore_ascii_case(ident) || d.to_lowercase() == display.to_lowercase()) {
                return Err(SkipReason::Collision {
                    item: r.key.clone(),
                    name: if o.eq_ignore_ascii_case(ident) { o.to_string() } else { d.to_string() },
                });
            }
        }
        Ok(())
    };
    for r in renames {
        match r.item {
            SchemaItemRef::Table { table } => {
                let names = s.tables.iter().map(|t| (t.original_name.as_str(), t.display_name.as_str())).collect();
                clash(names, table, r)?;
            }
            SchemaItemRef::Column { table, column } => {
                let names = s.tables[table]
                    .columns
                    .iter()
                    .map(|c| (c.original_name.as_str(), c.display_name.as_str()))
                    .collect();
                clash(names, column, r)?;
            }
        }
    }
    let mut h = Sha256::new();
    for r in renames {
        h.update(format!("{}\t{}\t{}\n", r.key, r.ident, r.display).as_bytes());
    }
    s.db_id = format!("{}__v{}", schema.db_id, &hex::encode(h.finalize())[..8]);
    Ok(s)
}

fn rewrite_sql(sql: &str, schema: &DatabaseSchema, renamed: &DatabaseSchema) -> Result<String, SkipReason> {
    let parsed = parse_with_spans(sql, schema).map_err(|_| SkipReason::UnparsableGold)?;
    let mut out = String::with_capacity(sql.len());
    let mut at = 0;
    for res in &parsed.resolutions {
        let new = match &res.target {
            Resolved::Table { table } => schema
                .table_index(table)
                .map(|t| &renamed.tables[t].original_name),
            Resolved::Column { table, column } => schema
                .column_ref(table, column)
                .map(|r| &renamed.tables[r.table].columns[r.column].original_name),
        };
        let Some(new) = new else { continue };
        if res.span.start < at {
            continue;
        }
        out.push_str(&sql[at..res.span.start]);
        if sql[res.span.clone()].eq_ignore_ascii_case(new) {
            out.push_str(&sql[res.span.clone()]);
        } else {
            out.push_str(new);
        }
        at = res.span.end;
    }
    out.push_str(&sql[at..]);
    Ok(out)
}

struct Inverse {
    tables: HashMap<String, String>,
    columns: HashMap<(String, String), String>,
}

impl Inverse {
    fn new(schema: &DatabaseSchema, renamed: &DatabaseSchema) -> Self {
        let mut tables = HashMap::new();
        let mut columns = HashMap::new();
        for (t, rt) in schema.tables.iter().zip(&renamed.tables) {
            let old_t = t.original_name.to_lowercase();
            tables.insert(rt.original_name.to_lowercase(), old_t.clone());
            for (c, rc) in t.columns.iter().zip(&rt.columns) {
                columns.insert((old_t.clone(), rc.original_name.to_lowercase()), c.original_name.to_lowercase());
            }
        }
        Inverse { tables, columns }
    }

    fn table(&self, name: &mut String) {
        if let Some(old) = self.tables.get(name.as_str()) {
            *name = old.clone();
        }
    }

    fn col(&self, c: &mut ColUnit) {
        if let ColumnId::Column { table, column } = &mut c.column {
            self.table(table);
            if let Some(old) = self.columns.get(&(table.clone(), column.clone())) {
                *column = old.clone();
            }
        }
    }

    fn val(&self, v: &mut crate::sql::ValUnit) {
        self.col(&mut v.left);
        if let Some(r) = &mut v.right {
            self.col(r);
        }
    }

    fn cond(&self, c: &mut Condition) {
        for u in &mut c.units {
            self.val(&mut u.lhs);
            for v in std::iter::once(&mut u.first).chain(u.second.as_mut()) {
                match v {
                    Value::Column(cu) => self.col(cu),
                    Value::Subquery(t) => self.tree(t),
                    _ => {}
                }
            }
        }
    }

    fn tree(&self, t: &mut SqlTree) {
        for i in &mut t.select.items {
            self.val(&mut i.value);
        }
        for u in &mut t.from.tables {
            match u {
                TableUnit::Table(name) => self.table(name),
                TableUnit::Subquery(s) => self.tree(s),
            }
        }
        self.cond(&mut t.from.conditions);
        self.cond(&mut t.where_clause);
        for g in &mut t.group_by {
            self.col(g);
        }
        self.cond(&mut t.having);
        if let Some(o) = &mut t.order_by {
            for v in &mut o.items {
                self.val(v);
            }
        }
        if let Some((_, s)) = &mut t.compound {
            self.tree(s);
        }
    }
}

fn make_variant(
    ex: &Example,
    variant: u32,
    schema: &DatabaseSchema,
    synonyms: &SynonymMap,
    policy: &SynthesisPolicy,
) -> Result<(Example, DatabaseSchema), SkipReason> {
    if ex.gold_error.is_some() {
        return Err(SkipReason::UnparsableGold);
    }
    let original_tree = parse(&ex.gold_sql, schema).map_err(|_| SkipReason::UnparsableGold)?;
    let renames = plan(ex, variant, schema, synonyms.get(&ex.db_id), policy)?;
    let renamed = renamed_schema(schema, &renames)?;
    let sql = rewrite_sql(&ex.gold_sql, schema, &renamed)?;

    let mut tree = parse(&sql, &renamed).map_err(|e| SkipReason::Reparse { error: e.to_string() })?;
    Inverse::new(schema, &renamed).tree(&mut tree);
    let canon = Canonicalizer::new(schema);
    let m = exact_match(
        &canon.canonicalize(&tree, ValueMode::WithValues),
        &canon.canonicalize(&original_tree, ValueMode::WithValues),
    )
    .expect("same mode");
    if !m.exact {
        return Err(SkipReason::NotEquivalent);
    }

    let mut extra = ex.extra.clone();
    for k in SQL_DERIVED {
        extra.remove(*k);
    }
    let out = Example {
        example_id: format!("{}#v{variant}", ex.example_id),
        language: ex.language,
        db_id: renamed.db_id.clone(),
        question: ex.question.clone(),
        gold_sql: sql,
        gold_error: None,
        extra,
    };
    Ok((out, renamed))
}

/// Adds up to `variants_per_example` renamed copies of every example. Each
/// variant draws from a random stream keyed by seed, example id and variant
/// number, so output does not depend on scheduling.
pub fn synthesize_examples(
    dataset: &Dataset,
    synonyms: &SynonymMap,
    policy: &SynthesisPolicy,
) -> Result<SynthesisOutput, AugmentError> {
    policy.validate()?;
    for ex in &dataset.examples {
        if dataset.schema(&ex.db_id).is_none() {
            return Err(AugmentError::Config(format!(
                "example {} references unknown database `{}`",
                ex.example_id, ex.db_id
            )));
        }
    }
    let results: Vec<Vec<(u32, Result<(Example, DatabaseSchema), SkipReason>)>> = dataset
        .examples
        .par_iter()
        .map(|ex| {
            let schema = &dataset.schemas[&ex.db_id];
            (1..=policy.variants_per_example)
                .map(|v| (v, make_variant(ex, v, schema, synonyms, policy)))
                .collect()
        })
        .collect();

    let mut schemas: SchemaMap = dataset
        .referenced_dbs()
        .into_iter()
        .map(|id| (id.clone(), dataset.schemas[&id].clone()))
        .collect();
    let mut examples = dataset.examples.clone();
    let mut skipped = Vec::new();
    let mut variants = 0;
    for (ex, per_example) in dataset.examples.iter().zip(results) {
        for (variant, r) in per_example {
            match r {
                Ok((e, s)) => {
                    variants += 1;
                    examples.push(e);
                    schemas.entry(s.db_id.clone()).or_insert(s);
                }
                Err(reason) => {
                    tracing::info!(example = %ex.example_id, variant, ?reason, "variant skipped");
                    skipped.push(SkippedVariant {
                        example_id: ex.example_id.clone(),
                        variant,
                        reason,
                    });
                }
            }
        }
    }
    Ok(SynthesisOutput {
        examples,
        schemas,
        originals: dataset.examples.len(),
        variants,
        skipped,
    })
}
