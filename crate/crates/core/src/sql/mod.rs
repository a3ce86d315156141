//! SQL parsing, canonicalization, exact-match scoring and hardness.

mod ast;
mod canonical;
mod eval;
mod hardness;
mod parser;
mod printer;
mod tokenizer;

pub use ast::*;
pub use canonical::{exact_match, CanonicalSql, Canonicalizer, Clause, MatchResult, ModeMismatch, ValueMode};
pub use eval::{
    evaluate_corpus, read_predictions, EvalError, EvaluationReport, ExampleOutcome, HardnessBucket,
};
pub use hardness::{hardness, Hardness};
pub use parser::{parse, parse_indexed, parse_with_spans, Parsed, Resolution, Resolved, SchemaIndex};
pub use printer::to_sql;
pub use tokenizer::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ErrorKind {
    #[error("unbalanced quote")]
    UnbalancedQuote,
    #[error("empty query")]
    Empty,
    #[error("unexpected end of query")]
    UnexpectedEnd,
    #[error("expected {expected}, found `{found}`")]
    Unexpected { expected: &'static str, found: String },
    #[error("no FROM clause")]
    MissingFrom,
    #[error("unknown table or alias `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("no table in scope for column `{0}`")]
    NoTableInScope(String),
    #[error("malformed column reference `{0}`")]
    MalformedColumn(String),
    #[error("alias shadows table name `{0}`")]
    AliasShadowsTable(String),
    #[error("invalid LIMIT value `{0}`")]
    InvalidLimit(String),
    #[error("conditions must be joined by AND or OR, found `{0}`")]
    MissingConjunction(String),
    #[error("condition ends with a conjunction")]
    TrailingConjunction,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} (byte {offset})")]
pub struct SqlError {
    pub kind: ErrorKind,
    pub offset: usize,
}

impl SqlError {
    pub fn new(kind: ErrorKind, offset: usize) -> Self {
        SqlError { kind, offset }
    }
}
