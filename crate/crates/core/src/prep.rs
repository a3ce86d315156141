//! Dataset preparation for the zero-shot settings: machine-translated
//! evaluation or training data with gold SQL left untouched.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{BackendError, BackendIdentity, TranslationRequest, Translator};
use crate::model::{emit_examples, emit_schemas, Dataset, DatabaseSchema, Example, Language, SchemaItemRef};
use crate::sql::{self, TokenKind};

pub const EXAMPLES_FILE: &str = "examples.json";
pub const TABLES_FILE: &str = "tables.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroShotMode {
    DirectlyPredict,
    TranslateThenPredict,
    TranslateThenTrain,
}

impl ZeroShotMode {
    pub const ALL: [ZeroShotMode; 3] = [
        ZeroShotMode::DirectlyPredict,
        ZeroShotMode::TranslateThenPredict,
        ZeroShotMode::TranslateThenTrain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ZeroShotMode::DirectlyPredict => "directly_predict",
            ZeroShotMode::TranslateThenPredict => "translate_then_predict",
            ZeroShotMode::TranslateThenTrain => "translate_then_train",
        }
    }
}

impl std::str::FromStr for ZeroShotMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s2 = s.replace('-', "_");
        ZeroShotMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s2)
            .ok_or_else(|| format!("unknown zero-shot mode `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PrepError {
    #[error("invalid job: {0}")]
    Job(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroShotJob {
    pub mode: ZeroShotMode,
    pub source: Language,
    pub target: Language,
    pub inputs: Vec<String>,
    pub output_dir: String,
}

impl ZeroShotJob {
    pub fn validate(&self) -> Result<(), PrepError> {
        let bad = |m: &str| Err(PrepError::Job(m.into()));
        match self.mode {
            ZeroShotMode::TranslateThenPredict if self.target != Language::En => {
                bad("translate_then_predict must target en")
            }
            ZeroShotMode::TranslateThenTrain if self.source != Language::En => {
                bad("translate_then_train must source en")
            }
            ZeroShotMode::TranslateThenPredict | ZeroShotMode::TranslateThenTrain if self.source == self.target => {
                bad("source and target languages are the same")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlagTarget {
    Question { example_id: String },
    SchemaItem { db_id: String, item: String },
}

/// A text left untranslated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrepFlag {
    #[serde(flatten)]
    pub target: FlagTarget,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub dataset: Dataset,
    pub flags: Vec<PrepFlag>,
}

/// Value literals of a query: quoted strings and numbers.
fn literals(sql: &str) -> Vec<String> {
    let Ok(tokens) = sql::tokenize(sql) else { return Vec::new() };
    let mut out: Vec<String> = tokens
        .into_iter()
        .filter_map(|t| match t.kind {
            TokenKind::Str(s) if !s.trim().is_empty() => Some(s),
            TokenKind::Word(w) if w.parse::<f64>().is_ok() => Some(w),
            _ => None,
        })
        .collect();
    // longest first so a literal inside another is not masked separately
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out.dedup();
    out
}

fn placeholder(i: usize) -> String {
    format!("[[V{i}]]")
}

/// Replaces literal occurrences in `question` with placeholders.
pub fn mask_literals(question: &str, sql: &str) -> (String, Vec<String>) {
    let mut text = question.to_string();
    let mut masked = Vec::new();
    for lit in literals(sql) {
        let at = text.find(&lit).or_else(|| {
            let lower = text.to_lowercase();
            (lower.len() == text.len()).then(|| lower.find(&lit.to_lowercase())).flatten()
        });
        if let Some(i) = at {
            let original = text[i..i + lit.len()].to_string();
            text.replace_range(i..i + lit.len(), &placeholder(masked.len()));
            masked.push(original);
        }
    }
    (text, masked)
}

/// Puts masked literals back; `None` if a placeholder went missing.
pub fn unmask_literals(text: &str, masked: &[String]) -> Option<String> {
    let mut out = text.to_string();
    for (i, lit) in masked.iter().enumerate() {
        let p = placeholder(i);
        let at = out.find(&p)?;
        out.replace_range(at..at + p.len(), lit);
    }
    Some(out)
}

fn translate(backend: &dyn Translator, text: &str, src: Language, tgt: Language) -> Result<String, BackendError> {
    backend.translate(&TranslationRequest::new(text, src, tgt)?)
}

fn translate_question(ex: &Example, tgt: Language, backend: &dyn Translator) -> Result<String, String> {
    let (masked, lits) = mask_literals(&ex.question, &ex.gold_sql);
    let out = translate(backend, &masked, ex.language, tgt).map_err(|e| e.to_string())?;
    unmask_literals(&out, &lits).ok_or_else(|| "a value placeholder was lost in translation".to_string())
}

fn translate_schema(
    schema: &DatabaseSchema,
    src: Language,
    tgt: Language,
    backend: &dyn Translator,
) -> (DatabaseSchema, Vec<PrepFlag>) {
    let mut out = schema.clone();
    let mut flags = Vec::new();
    let mut memo: BTreeMap<String, Result<String, String>> = BTreeMap::new();
    for item in schema.items() {
        let name = schema.display_name(&item).unwrap_or_default().to_string();
        if name.trim().is_empty() {
            continue;
        }
        let r = memo
            .entry(name.clone())
            .or_insert_with(|| translate(backend, &name, src, tgt).map_err(|e| e.to_string()))
            .clone();
        match r {
            Ok(t) => match item {
                SchemaItemRef::Table { table } => out.tables[table].display_name = t,
                SchemaItemRef::Column { table, column } => out.tables[table].columns[column].display_name = t,
            },
            Err(error) => flags.push(PrepFlag {
                target: FlagTarget::SchemaItem {
                    db_id: schema.db_id.clone(),
                    item: schema.item_key(&item).unwrap_or_default(),
                },
                error,
            }),
        }
    }
    (out, flags)
}

/// Machine-translates questions and schema display names from the dataset's
/// language into `target`. Gold SQL, original names and example ids are
/// kept; failed texts keep their original wording and are flagged.
pub fn translate_dataset(
    dataset: &Dataset,
    target: Language,
    backend: &dyn Translator,
) -> Result<PreparedDataset, PrepError> {
    let source = dataset
        .language()
        .ok_or_else(|| PrepError::Job("dataset language is mixed or empty".into()))?;
    if source == target {
        return Err(PrepError::Job("source and target languages are the same".into()));
    }
    let db_ids = dataset.referenced_dbs();
    let schema_results: Vec<(DatabaseSchema, Vec<PrepFlag>)> = db_ids
        .par_iter()
        .map(|id| translate_schema(&dataset.schemas[id], source, target, backend))
        .collect();
    let questions: Vec<Result<String, String>> = dataset
        .examples
        .par_iter()
        .map(|ex| translate_question(ex, target, backend))
        .collect();

    let mut flags = Vec::new();
    let mut schemas = BTreeMap::new();
    for (s, f) in schema_results {
        flags.extend(f);
        schemas.insert(s.db_id.clone(), s);
    }
    let mut examples = Vec::with_capacity(dataset.examples.len());
    for (ex, q) in dataset.examples.iter().zip(questions) {
        let mut out = ex.clone();
        out.language = target;
        match q {
            Ok(q) => out.question = q,
            Err(error) => {
                tracing::warn!(example = %ex.example_id, %error, "question left untranslated");
                flags.push(PrepFlag {
                    target: FlagTarget::Question {
                        example_id: ex.example_id.clone(),
                    },
                    error,
                });
            }
        }
        examples.push(out);
    }
    Ok(PreparedDataset {
        dataset: Dataset {
            split: dataset.split,
            examples,
            schemas: Arc::new(schemas),
        },
        flags,
    })
}

/// Target-language evaluation data translated into English.
pub fn prep_translate_then_predict(dataset: &Dataset, backend: &dyn Translator) -> Result<PreparedDataset, PrepError> {
    translate_dataset(dataset, Language::En, backend)
}

/// English training data translated into the target language.
pub fn prep_translate_then_train(
    dataset: &Dataset,
    target: Language,
    backend: &dyn Translator,
) -> Result<PreparedDataset, PrepError> {
    if dataset.language() != Some(Language::En) {
        return Err(PrepError::Job("translate_then_train needs an English dataset".into()));
    }
    translate_dataset(dataset, target, backend)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotManifest {
    pub job: ZeroShotJob,
    pub backend: Option<BackendIdentity>,
    pub examples: usize,
    pub flags: Vec<PrepFlag>,
    /// File name → sha256 hex.
    pub files: BTreeMap<String, String>,
}

/// Writes examples, schemas and the job manifest into `dir`.
pub fn write_prepared(
    dir: &Path,
    job: &ZeroShotJob,
    prepared: &PreparedDataset,
    backend: Option<BackendIdentity>,
) -> Result<ZeroShotManifest, PrepError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PrepError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let ds = &prepared.dataset;
    let ids = ds.referenced_dbs();
    let files = [
        (EXAMPLES_FILE, emit_examples(&ds.examples)),
        (TABLES_FILE, emit_schemas(ids.iter().map(|id| &ds.schemas[id]))),
    ];
    let mut digests = BTreeMap::new();
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, &text).map_err(io(&path))?;
        digests.insert(name.to_string(), hex::encode(Sha256::digest(text.as_bytes())));
    }
    let manifest = ZeroShotManifest {
        job: job.clone(),
        backend,
        examples: ds.examples.len(),
        flags: prepared.flags.clone(),
        files: digests,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(io(&path))?;
    Ok(manifest)
}
