//! Fuzzy question/schema overlap scores per example and per language.

mod tokenize;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tokenize::{is_cjk_char, tokenize, TokenizedText};

use crate::model::{Dataset, DatabaseSchema, Example, Language, SchemaItemRef};
use crate::sql::{parse, ColumnId};

/// Best span of the question for one schema item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMatch {
    pub score: f64,
    pub span: Option<String>,
}

fn word_similarity(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 0.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / max as f64
}

fn contains_run(haystack: &[String], needle: &[String]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Scores how well `display_name` is mentioned in the question. An exact
/// contiguous mention scores 1.0. Otherwise spans of up to one unit more
/// than the item are compared: normalized edit similarity for alphabetic
/// languages, character-bigram Dice for Chinese and Japanese.
pub fn fuzzy_item_match(display_name: &str, question: &TokenizedText) -> ItemMatch {
    let item = tokenize(display_name, question.language).units;
    let q = &question.units;
    if item.is_empty() || q.is_empty() {
        return ItemMatch { score: 0.0, span: None };
    }
    let cjk = question.language.is_cjk();
    let sep = if cjk { "" } else { " " };
    if let Some(i) = contains_run(q, &item) {
        return ItemMatch {
            score: 1.0,
            span: Some(q[i..i + item.len()].join(sep)),
        };
    }
    let target = item.join(sep);
    let mut best = ItemMatch { score: 0.0, span: None };
    for len in 1..=(item.len() + 1).min(q.len()) {
        for w in q.windows(len) {
            let span = w.join(sep);
            let s = if cjk {
                strsim::sorensen_dice(&target, &span)
            } else {
                word_similarity(&target, &span)
            };
            if s > best.score {
                best = ItemMatch { score: s, span: Some(span) };
            }
        }
    }
    best
}

pub fn fuzzy_item_score(display_name: &str, question: &TokenizedText) -> f64 {
    fuzzy_item_match(display_name, question).score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemLink {
    /// `table` or `table.column`, original names.
    pub key: String,
    pub display_name: String,
    pub span: Option<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleLink {
    pub example_id: String,
    pub language: Language,
    pub score: f64,
    pub items: Vec<ItemLink>,
}

/// Tables and columns (other than `*`) that a gold tree mentions, in schema order.
pub fn referenced_items(tree: &crate::sql::SqlTree, schema: &DatabaseSchema) -> BTreeSet<SchemaItemRef> {
    let mut items = BTreeSet::new();
    tree.visit_tables(&mut |t| {
        if let Some(table) = schema.table_index(t) {
            items.insert(SchemaItemRef::Table { table });
        }
    });
    tree.visit_columns(&mut |c| {
        if let ColumnId::Column { table, column } = &c.column {
            if let Some(r) = schema.column_ref(table, column) {
                items.insert(SchemaItemRef::Column {
                    table: r.table,
                    column: r.column,
                });
            }
        }
    });
    items
}

/// Mean item score over the schema items the gold SQL references. `None`
/// when the gold SQL does not parse or references nothing.
pub fn example_link_score(example: &Example, schema: &DatabaseSchema) -> Option<ExampleLink> {
    if example.gold_error.is_some() {
        return None;
    }
    let tree = parse(&example.gold_sql, schema).ok()?;
    let question = tokenize(&example.question, example.language);
    let items: Vec<ItemLink> = referenced_items(&tree, schema)
        .into_iter()
        .filter_map(|item| {
            let display = schema.display_name(&item)?.to_string();
            let m = fuzzy_item_match(&display, &question);
            Some(ItemLink {
                key: schema.item_key(&item)?,
                display_name: display,
                span: m.span,
                score: m.score,
            })
        })
        .collect();
    if items.is_empty() {
        return None;
    }
    let score = items.iter().map(|i| i.score).sum::<f64>() / items.len() as f64;
    Some(ExampleLink {
        example_id: example.example_id.clone(),
        language: example.language,
        score,
        items,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageLinkScore {
    pub scored: usize,
    pub skipped: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub by_language: BTreeMap<Language, LanguageLinkScore>,
    pub skipped: Vec<String>,
    pub examples: Vec<ExampleLink>,
}

/// Scores every example of every dataset against that dataset's schemas.
pub fn link_report(datasets: &[&Dataset]) -> LinkReport {
    let mut report = LinkReport::default();
    for ds in datasets {
        let scored: Vec<(&Example, Option<ExampleLink>)> = ds
            .examples
            .par_iter()
            .map(|ex| (ex, ds.schema(&ex.db_id).and_then(|s| example_link_score(ex, s))))
            .collect();
        for (ex, link) in scored {
            let entry = report.by_language.entry(ex.language).or_default();
            match link {
                Some(l) => {
                    entry.scored += 1;
                    report.examples.push(l);
                }
                None => {
                    entry.skipped += 1;
                    report.skipped.push(ex.example_id.clone());
                }
            }
        }
    }
    for (lang, entry) in report.by_language.iter_mut() {
        let scores: Vec<f64> = report
            .examples
            .iter()
            .filter(|e| e.language == *lang)
            .map(|e| e.score)
            .collect();
        if !scores.is_empty() {
            entry.mean = scores.iter().sum::<f64>() / scores.len() as f64;
        }
    }
    report
}

impl LinkReport {
    pub fn render_text(&self) -> String {
        let mut out = String::from("language  scored  skipped  mean\n");
        for (lang, s) in &self.by_language {
            out.push_str(&format!("{:<8} {:>7} {:>8}  {:.4}\n", lang.code(), s.scored, s.skipped, s.mean));
        }
        out
    }
}
