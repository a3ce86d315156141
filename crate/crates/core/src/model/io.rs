use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    ColumnDef, ColumnRef, ColumnType, Dataset, DatabaseSchema, Example, ForeignKey, Language,
    SchemaMap, Split, TableDef,
};
use crate::sql;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{origin}: {source}")]
    Io {
        origin: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        origin: String,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: database `{db_id}`: {message}")]
    Schema {
        origin: String,
        db_id: String,
        message: String,
    },
    #[error("{origin}: duplicate db_id `{db_id}`")]
    DuplicateDb { origin: String, db_id: String },
    #[error("{origin}: example {index}: {message}")]
    Example {
        origin: String,
        index: usize,
        message: String,
    },
    #[error("datasets are not aligned: {0}")]
    Misaligned(String),
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        origin: path.display().to_string(),
        source,
    })
}

fn json_error(origin: &str, text: &str, err: serde_json::Error) -> LoadError {
    let (line, column) = (err.line(), err.column());
    let offset = if line == 0 {
        text.len()
    } else {
        let start: usize = text
            .split_inclusive('\n')
            .take(line - 1)
            .map(str::len)
            .sum();
        (start + column.saturating_sub(1)).min(text.len())
    };
    LoadError::Json {
        origin: origin.to_string(),
        offset,
        line,
        column,
        message: err.to_string(),
    }
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum RawKey {
    Single(usize),
    Composite(Vec<usize>),
}

#[derive(Deserialize, Serialize)]
struct RawSchema {
    db_id: String,
    table_names: Vec<String>,
    table_names_original: Vec<String>,
    column_names: Vec<(i64, String)>,
    column_names_original: Vec<(i64, String)>,
    column_types: Vec<String>,
    primary_keys: Vec<RawKey>,
    foreign_keys: Vec<(usize, usize)>,
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

fn convert_schema(origin: &str, raw: RawSchema) -> Result<DatabaseSchema, LoadError> {
    let err = |message: String| LoadError::Schema {
        origin: origin.to_string(),
        db_id: raw.db_id.clone(),
        message,
    };
    if raw.table_names.len() != raw.table_names_original.len() {
        return Err(err("table_names and table_names_original differ in length".into()));
    }
    if raw.column_names.len() != raw.column_names_original.len()
        || raw.column_names.len() != raw.column_types.len()
    {
        return Err(err("column_names, column_names_original and column_types differ in length".into()));
    }
    let mut tables: Vec<TableDef> = Vec::with_capacity(raw.table_names.len());
    for (display, original) in raw.table_names.iter().zip(&raw.table_names_original) {
        if !is_identifier(original) {
            return Err(err(format!("table name `{original}` is not an identifier")));
        }
        if display.trim().is_empty() {
            return Err(err(format!("table `{original}` has an empty display name")));
        }
        if tables.iter().any(|t| t.original_name.eq_ignore_ascii_case(original)) {
            return Err(err(format!("duplicate table `{original}`")));
        }
        tables.push(TableDef {
            original_name: original.clone(),
            display_name: display.clone(),
            columns: Vec::new(),
        });
    }

    // global column index -> position, `None` for `*`
    let mut global: Vec<Option<ColumnRef>> = Vec::with_capacity(raw.column_names.len());
    for (i, ((t_disp, display), (t_orig, original))) in raw
        .column_names
        .iter()
        .zip(&raw.column_names_original)
        .enumerate()
    {
        if t_disp != t_orig {
            return Err(err(format!("column {i}: table index differs between display and original names")));
        }
        if *t_orig < 0 {
            if original != "*" {
                return Err(err(format!("column {i}: `{original}` has no table")));
            }
            global.push(None);
            continue;
        }
        let ti = *t_orig as usize;
        let table = tables
            .get_mut(ti)
            .ok_or_else(|| err(format!("column {i}: table index {ti} out of range")))?;
        if !is_identifier(original) {
            return Err(err(format!("column `{original}` is not an identifier")));
        }
        if display.trim().is_empty() {
            return Err(err(format!("column `{original}` has an empty display name")));
        }
        if table
            .columns
            .iter()
            .any(|c| c.original_name.eq_ignore_ascii_case(original))
        {
            return Err(err(format!("duplicate column `{}.{original}`", table.original_name)));
        }
        let col_type: ColumnType = raw.column_types[i].parse().map_err(|m| err(format!("column {i}: {m}")))?;
        global.push(Some(ColumnRef {
            table: ti,
            column: table.columns.len(),
        }));
        table.columns.push(ColumnDef {
            original_name: original.clone(),
            display_name: display.clone(),
            col_type,
        });
    }

    let resolve = |idx: usize| -> Result<ColumnRef, LoadError> {
        match global.get(idx) {
            Some(Some(r)) => Ok(*r),
            Some(None) => Err(err(format!("key references `*` (column {idx})"))),
            None => Err(err(format!("key references column {idx}, out of range"))),
        }
    };
    let mut primary_keys = Vec::with_capacity(raw.primary_keys.len());
    for key in &raw.primary_keys {
        let cols = match key {
            RawKey::Single(i) => vec![resolve(*i)?],
            RawKey::Composite(is) => is.iter().map(|i| resolve(*i)).collect::<Result<_, _>>()?,
        };
        primary_keys.push(cols);
    }
    let mut foreign_keys = Vec::with_capacity(raw.foreign_keys.len());
    for (from, to) in &raw.foreign_keys {
        foreign_keys.push(ForeignKey {
            from: resolve(*from)?,
            to: resolve(*to)?,
        });
    }
    Ok(DatabaseSchema {
        db_id: raw.db_id.clone(),
        tables,
        primary_keys,
        foreign_keys,
    })
}

/// Parses the contents of a `tables.json` file. `origin` names the source in errors.
pub fn parse_schemas(origin: &str, text: &str) -> Result<SchemaMap, LoadError> {
    let raw: Vec<RawSchema> = serde_json::from_str(text).map_err(|e| json_error(origin, text, e))?;
    let mut out = BTreeMap::new();
    for entry in raw {
        let db_id = entry.db_id.clone();
        let schema = convert_schema(origin, entry)?;
        if out.insert(db_id.clone(), schema).is_some() {
            return Err(LoadError::DuplicateDb {
                origin: origin.to_string(),
                db_id,
            });
        }
    }
    Ok(out)
}

pub fn load_schemas(path: impl AsRef<Path>) -> Result<SchemaMap, LoadError> {
    let path = path.as_ref();
    parse_schemas(&path.display().to_string(), &read(path)?)
}

fn global_indices(schema: &DatabaseSchema) -> BTreeMap<ColumnRef, usize> {
    let mut map = BTreeMap::new();
    let mut next = 1;
    for (ti, t) in schema.tables.iter().enumerate() {
        for ci in 0..t.columns.len() {
            map.insert(ColumnRef { table: ti, column: ci }, next);
            next += 1;
        }
    }
    map
}

fn raw_schema(schema: &DatabaseSchema) -> RawSchema {
    let idx = global_indices(schema);
    let mut column_names = vec![(-1, "*".to_string())];
    let mut column_names_original = vec![(-1, "*".to_string())];
    let mut column_types = vec!["text".to_string()];
    for (ti, t) in schema.tables.iter().enumerate() {
        for c in &t.columns {
            column_names.push((ti as i64, c.display_name.clone()));
            column_names_original.push((ti as i64, c.original_name.clone()));
            column_types.push(c.col_type.as_str().to_string());
        }
    }
    RawSchema {
        db_id: schema.db_id.clone(),
        table_names: schema.tables.iter().map(|t| t.display_name.clone()).collect(),
        table_names_original: schema.tables.iter().map(|t| t.original_name.clone()).collect(),
        column_names,
        column_names_original,
        column_types,
        primary_keys: schema
            .primary_keys
            .iter()
            .map(|k| match k.as_slice() {
                [single] => RawKey::Single(idx[single]),
                many => RawKey::Composite(many.iter().map(|c| idx[c]).collect()),
            })
            .collect(),
        foreign_keys: schema
            .foreign_keys
            .iter()
            .map(|fk| (idx[&fk.from], idx[&fk.to]))
            .collect(),
    }
}

/// Serializes schemas in `tables.json` layout, ordered by db_id.
pub fn emit_schemas<'a>(schemas: impl IntoIterator<Item = &'a DatabaseSchema>) -> String {
    let mut raw: Vec<RawSchema> = schemas.into_iter().map(raw_schema).collect();
    raw.sort_by(|a, b| a.db_id.cmp(&b.db_id));
    let mut text = serde_json::to_string_pretty(&raw).expect("schema serialization");
    text.push('\n');
    text
}

const KNOWN_KEYS: [&str; 4] = ["db_id", "question", "query", "example_id"];

/// Parses an examples file. Ids default to `{split}-{offset + position}`.
pub fn parse_examples(
    origin: &str,
    text: &str,
    schemas: &SchemaMap,
    language: Language,
    split: Split,
    offset: usize,
) -> Result<Vec<Example>, LoadError> {
    let raw: Vec<Map<String, Value>> = serde_json::from_str(text).map_err(|e| json_error(origin, text, e))?;
    let mut out = Vec::with_capacity(raw.len());
    for (i, mut record) in raw.into_iter().enumerate() {
        let err = |message: String| LoadError::Example {
            origin: origin.to_string(),
            index: i,
            message,
        };
        let mut take_str = |key: &str| -> Result<Option<String>, LoadError> {
            match record.remove(key) {
                None => Ok(None),
                Some(Value::String(s)) => Ok(Some(s)),
                Some(other) => Err(err(format!("`{key}` must be a string, found {other}"))),
            }
        };
        let db_id = take_str("db_id")?.ok_or_else(|| err("missing `db_id`".into()))?;
        let question = take_str("question")?.ok_or_else(|| err("missing `question`".into()))?;
        let gold_sql = take_str("query")?.ok_or_else(|| err("missing `query`".into()))?;
        let example_id = take_str("example_id")?
            .unwrap_or_else(|| format!("{}-{:05}", split.as_str(), offset + i));
        debug_assert!(KNOWN_KEYS.iter().all(|k| !record.contains_key(*k)));
        let schema = schemas
            .get(&db_id)
            .ok_or_else(|| err(format!("unknown db_id `{db_id}`")))?;
        let gold_error = sql::parse(&gold_sql, schema).err().map(|e| e.to_string());
        out.push(Example {
            example_id,
            language,
            db_id,
            question,
            gold_sql,
            gold_error,
            extra: record,
        });
    }
    Ok(out)
}

pub fn load_examples(
    path: impl AsRef<Path>,
    schemas: &SchemaMap,
    language: Language,
    split: Split,
    offset: usize,
) -> Result<Vec<Example>, LoadError> {
    let path = path.as_ref();
    parse_examples(&path.display().to_string(), &read(path)?, schemas, language, split, offset)
}

/// Loads one schema file and any number of example files into a dataset.
/// Default example ids continue across files.
pub fn load_dataset(
    tables: impl AsRef<Path>,
    examples: &[impl AsRef<Path>],
    language: Language,
    split: Split,
) -> Result<Dataset, LoadError> {
    let schemas = load_schemas(tables)?;
    let mut all = Vec::new();
    for path in examples {
        let mut part = load_examples(path, &schemas, language, split, all.len())?;
        all.append(&mut part);
    }
    let mut seen = std::collections::HashSet::new();
    for e in &all {
        if !seen.insert(e.example_id.as_str()) {
            return Err(LoadError::Example {
                origin: "dataset".into(),
                index: 0,
                message: format!("duplicate example_id `{}`", e.example_id),
            });
        }
    }
    Ok(Dataset {
        split,
        examples: all,
        schemas: Arc::new(schemas),
    })
}

/// Serializes examples in the Spider examples layout (keys sorted).
pub fn emit_examples<'a>(examples: impl IntoIterator<Item = &'a Example>) -> String {
    let records: Vec<Value> = examples
        .into_iter()
        .map(|e| {
            let mut m = e.extra.clone();
            m.insert("db_id".into(), Value::String(e.db_id.clone()));
            m.insert("question".into(), Value::String(e.question.clone()));
            m.insert("query".into(), Value::String(e.gold_sql.clone()));
            m.insert("example_id".into(), Value::String(e.example_id.clone()));
            Value::Object(m)
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&records).expect("example serialization");
    text.push('\n');
    text
}

/// Checks that language copies of one split line up example by example.
pub fn check_alignment(datasets: &[&Dataset]) -> Result<(), LoadError> {
    let Some((first, rest)) = datasets.split_first() else {
        return Ok(());
    };
    for other in rest {
        if other.examples.len() != first.examples.len() {
            return Err(LoadError::Misaligned(format!(
                "{} examples vs {}",
                first.examples.len(),
                other.examples.len()
            )));
        }
        for (i, (a, b)) in first.examples.iter().zip(&other.examples).enumerate() {
            if a.example_id != b.example_id || a.db_id != b.db_id || a.gold_sql != b.gold_sql {
                return Err(LoadError::Misaligned(format!(
                    "position {i}: `{}` ({}) vs `{}` ({})",
                    a.example_id, a.language, b.example_id, b.language
                )));
            }
        }
    }
    Ok(())
}


/// One language directory of a Spider-format corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDir {
    pub language: Language,
    /// Every `train*.json`, in file name order.
    pub train: Option<Dataset>,
    pub dev: Option<Dataset>,
}

impl CorpusDir {
    pub fn datasets(&self) -> Vec<&Dataset> {
        self.train.iter().chain(self.dev.iter()).collect()
    }
}

/// Loads `dir/tables.json` with `dir/train*.json` and `dir/dev.json`.
pub fn load_corpus_dir(dir: impl AsRef<Path>, language: Language) -> Result<CorpusDir, LoadError> {
    let dir = dir.as_ref();
    let listing = fs::read_dir(dir).map_err(|source| LoadError::Io {
        origin: dir.display().to_string(),
        source,
    })?;
    let mut train_files = Vec::new();
    for entry in listing {
        let entry = entry.map_err(|source| LoadError::Io {
            origin: dir.display().to_string(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("train") && name.ends_with(".json") {
            train_files.push(entry.path());
        }
    }
    train_files.sort();
    let tables = dir.join("tables.json");
    let train = if train_files.is_empty() {
        None
    } else {
        Some(load_dataset(&tables, &train_files, language, Split::Train)?)
    };
    let dev_path = dir.join("dev.json");
    let dev = if dev_path.exists() {
        Some(load_dataset(&tables, &[dev_path], language, Split::Dev)?)
    } else {
        None
    };
    if train.is_none() && dev.is_none() {
        return Err(LoadError::Io {
            origin: dir.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no train*.json or dev.json"),
        });
    }
    Ok(CorpusDir { language, train, dev })
}
