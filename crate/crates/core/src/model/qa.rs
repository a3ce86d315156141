use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{DatabaseSchema, Example};
use crate::sql::{self, ErrorKind, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    UnknownTable,
    UnknownColumn,
    UnparsableSql,
    MissingValueLiteral,
    EmptyQuestion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaFinding {
    pub example_id: String,
    pub kind: FindingKind,
    pub severity: Severity,
    pub detail: String,
}

fn fold(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

fn is_numeric(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

/// Checks one example against its schema. Findings are ordered as found.
pub fn validate_example(example: &Example, schema: &DatabaseSchema) -> Vec<QaFinding> {
    let mut out = Vec::new();
    let mut push = |kind, severity, detail: String| {
        out.push(QaFinding {
            example_id: example.example_id.clone(),
            kind,
            severity,
            detail,
        })
    };
    if example.question.trim().is_empty() {
        push(FindingKind::EmptyQuestion, Severity::Error, "question is empty".into());
    }
    if let Err(e) = sql::parse(&example.gold_sql, schema) {
        let kind = match e.kind {
            ErrorKind::UnknownTable(_) => FindingKind::UnknownTable,
            ErrorKind::UnknownColumn(_) => FindingKind::UnknownColumn,
            _ => FindingKind::UnparsableSql,
        };
        push(kind, Severity::Error, e.to_string());
    }
    let Ok(tokens) = sql::tokenize(&example.gold_sql) else {
        return out;
    };
    let question = fold(&example.question);
    for tok in tokens {
        let TokenKind::Str(value) = &tok.kind else {
            continue;
        };
        let core = value.trim_matches('%');
        if core.trim().is_empty() || is_numeric(core) {
            continue;
        }
        if !question.contains(&fold(core)) {
            push(
                FindingKind::MissingValueLiteral,
                Severity::Warning,
                format!("literal `{value}` does not occur in the question"),
            );
        }
    }
    out
}
