use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canonical::{exact_match, Canonicalizer, Clause, ValueMode};
use super::hardness::{hardness, Hardness};
use super::parser::{parse_indexed, SchemaIndex};
use super::SqlTree;
use crate::model::{Example, SchemaMap};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{examples} examples but {predictions} predictions")]
    LengthMismatch { examples: usize, predictions: usize },
    #[error("example {example_id} references unknown database `{db_id}`")]
    UnknownDatabase { example_id: String, db_id: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleOutcome {
    pub example_id: String,
    pub hardness: Hardness,
    pub exact: bool,
    pub prediction_parsed: bool,
    pub clauses: BTreeMap<Clause, bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HardnessBucket {
    pub count: usize,
    pub exact: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: ValueMode,
    /// Examples with a parsable gold query.
    pub total: usize,
    pub exact: usize,
    pub accuracy: f64,
    pub skipped_gold: Vec<String>,
    pub unparsable_predictions: usize,
    pub by_hardness: BTreeMap<Hardness, HardnessBucket>,
    /// Fraction of scored examples on which each clause matched.
    pub by_clause: BTreeMap<Clause, f64>,
    pub details: Vec<ExampleOutcome>,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Scores predictions against gold queries, aligned by position.
pub fn evaluate_corpus(
    examples: &[Example],
    predictions: &[String],
    schemas: &SchemaMap,
    mode: ValueMode,
) -> Result<EvaluationReport, EvalError> {
    if examples.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            examples: examples.len(),
            predictions: predictions.len(),
        });
    }
    let mut prepared = BTreeMap::new();
    for ex in examples {
        if prepared.contains_key(ex.db_id.as_str()) {
            continue;
        }
        let schema = schemas.get(&ex.db_id).ok_or_else(|| EvalError::UnknownDatabase {
            example_id: ex.example_id.clone(),
            db_id: ex.db_id.clone(),
        })?;
        prepared.insert(ex.db_id.as_str(), (SchemaIndex::new(schema), Canonicalizer::new(schema)));
    }

    let scored: Vec<Option<ExampleOutcome>> = examples
        .par_iter()
        .zip(predictions.par_iter())
        .map(|(ex, pred)| {
            if ex.gold_error.is_some() {
                return None;
            }
            let (index, canon) = &prepared[ex.db_id.as_str()];
            let gold = parse_indexed(&ex.gold_sql, index).ok()?.tree;
            let parsed = parse_indexed(pred, index).ok().map(|p| p.tree);
            let prediction_parsed = parsed.is_some();
            let pred_tree = parsed.unwrap_or_else(SqlTree::empty);
            let m = exact_match(&canon.canonicalize(&pred_tree, mode), &canon.canonicalize(&gold, mode))
                .expect("same mode on both sides");
            Some(ExampleOutcome {
                example_id: ex.example_id.clone(),
                hardness: hardness(&gold),
                exact: m.exact,
                prediction_parsed,
                clauses: m.clauses,
            })
        })
        .collect();

    let mut skipped_gold = Vec::new();
    let mut details = Vec::new();
    for (ex, s) in examples.iter().zip(scored) {
        match s {
            Some(o) => details.push(o),
            None => skipped_gold.push(ex.example_id.clone()),
        }
    }
    let total = details.len();
    let exact = details.iter().filter(|d| d.exact).count();
    let mut by_hardness: BTreeMap<Hardness, HardnessBucket> =
        Hardness::ALL.iter().map(|&h| (h, HardnessBucket::default())).collect();
    for d in &details {
        let b = by_hardness.get_mut(&d.hardness).unwrap();
        b.count += 1;
        b.exact += usize::from(d.exact);
    }
    for b in by_hardness.values_mut() {
        b.accuracy = ratio(b.exact, b.count);
    }
    let by_clause = Clause::ALL
        .iter()
        .map(|&c| (c, ratio(details.iter().filter(|d| d.clauses[&c]).count(), total)))
        .collect();
    Ok(EvaluationReport {
        mode,
        total,
        exact,
        accuracy: ratio(exact, total),
        skipped_gold,
        unparsable_predictions: details.iter().filter(|d| !d.prediction_parsed).count(),
        by_hardness,
        by_clause,
        details,
    })
}

/// One prediction per line; anything after a tab (such as a db id) is dropped.
pub fn read_predictions(path: &Path) -> Result<Vec<String>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .map(|l| l.split('\t').next().unwrap_or("").trim().to_string())
        .collect())
}

impl EvaluationReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mode = match self.mode {
            ValueMode::WithoutValues => "without values",
            ValueMode::WithValues => "with values",
        };
        let _ = writeln!(out, "exact match ({mode})");
        let _ = writeln!(out, "{:<18} {:>6} {:>6} {:.3}", "overall", self.total, self.exact, self.accuracy);
        let _ = writeln!(
            out,
            "skipped gold: {}  unparsable predictions: {}",
            self.skipped_gold.len(),
            self.unparsable_predictions
        );
        for (h, b) in &self.by_hardness {
            let _ = writeln!(out, "{:<18} {:>6} {:>6} {:.3}", h.as_str(), b.count, b.exact, b.accuracy);
        }
        let _ = writeln!(out, "clause accuracy");
        for (c, r) in &self.by_clause {
            let _ = writeln!(out, "{:<18} {:.3}", c.name(), r);
        }
        out
    }
}
