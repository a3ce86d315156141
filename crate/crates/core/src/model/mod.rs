//! Dataset model: languages, database schemas, examples and datasets.

mod io;
mod qa;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use io::{
    check_alignment, emit_examples, emit_schemas, load_corpus_dir, load_dataset, load_examples, load_schemas, CorpusDir,
    parse_examples, parse_schemas, LoadError,
};
pub use qa::{validate_example, FindingKind, QaFinding, Severity};
pub use stats::{dataset_stats, DatasetStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    De,
    Es,
    Fr,
    Ja,
    Zh,
    Vi,
    Ru,
    Pt,
    Nl,
    Sv,
}

impl Language {
    pub const ALL: [Language; 11] = [
        Language::En,
        Language::De,
        Language::Es,
        Language::Fr,
        Language::Ja,
        Language::Zh,
        Language::Vi,
        Language::Ru,
        Language::Pt,
        Language::Nl,
        Language::Sv,
    ];

    /// The seven languages the dataset ships in.
    pub const DATASET: [Language; 7] = [
        Language::En,
        Language::De,
        Language::Es,
        Language::Fr,
        Language::Ja,
        Language::Zh,
        Language::Vi,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::De => "de",
            Language::Es => "es",
            Language::Fr => "fr",
            Language::Ja => "ja",
            Language::Zh => "zh",
            Language::Vi => "vi",
            Language::Ru => "ru",
            Language::Pt => "pt",
            Language::Nl => "nl",
            Language::Sv => "sv",
        }
    }

    pub fn is_dataset_language(self) -> bool {
        Self::DATASET.contains(&self)
    }

    /// Scripts written without spaces between words.
    pub fn is_cjk(self) -> bool {
        matches!(self, Language::Ja | Language::Zh)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language code `{0}`")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Language::ALL
            .into_iter()
            .find(|l| l.code() == lower)
            .ok_or_else(|| UnknownLanguage(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Number,
    Time,
    Boolean,
    Others,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Text => "text",
            ColumnType::Number => "number",
            ColumnType::Time => "time",
            ColumnType::Boolean => "boolean",
            ColumnType::Others => "others",
        }
    }
}

impl FromStr for ColumnType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ColumnType::Text),
            "number" => Ok(ColumnType::Number),
            "time" => Ok(ColumnType::Time),
            "boolean" => Ok(ColumnType::Boolean),
            "others" => Ok(ColumnType::Others),
            other => Err(format!("unknown column type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub original_name: String,
    pub display_name: String,
    pub col_type: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub original_name: String,
    pub display_name: String,
    pub columns: Vec<ColumnDef>,
}

/// Column position inside a [`DatabaseSchema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: ColumnRef,
    pub to: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseSchema {
    pub db_id: String,
    pub tables: Vec<TableDef>,
    /// One entry per key; composite keys have several columns.
    pub primary_keys: Vec<Vec<ColumnRef>>,
    pub foreign_keys: Vec<ForeignKey>,
}

/// A table or a column of one database, addressed by original names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchemaItemRef {
    Table { table: usize },
    Column { table: usize, column: usize },
}

impl DatabaseSchema {
    pub fn column(&self, r: ColumnRef) -> Option<&ColumnDef> {
        self.tables.get(r.table)?.columns.get(r.column)
    }

    pub fn table_index(&self, original: &str) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| t.original_name.eq_ignore_ascii_case(original))
    }

    pub fn column_ref(&self, table: &str, column: &str) -> Option<ColumnRef> {
        let t = self.table_index(table)?;
        let c = self.tables[t]
            .columns
            .iter()
            .position(|c| c.original_name.eq_ignore_ascii_case(column))?;
        Some(ColumnRef { table: t, column: c })
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    /// All tables followed by their columns, in schema order.
    pub fn items(&self) -> Vec<SchemaItemRef> {
        let mut out = Vec::new();
        for (ti, t) in self.tables.iter().enumerate() {
            out.push(SchemaItemRef::Table { table: ti });
            for ci in 0..t.columns.len() {
                out.push(SchemaItemRef::Column { table: ti, column: ci });
            }
        }
        out
    }

    pub fn display_name(&self, item: &SchemaItemRef) -> Option<&str> {
        match *item {
            SchemaItemRef::Table { table } => self.tables.get(table).map(|t| t.display_name.as_str()),
            SchemaItemRef::Column { table, column } => self
                .column(ColumnRef { table, column })
                .map(|c| c.display_name.as_str()),
        }
    }

    /// `table` or `table.column` using original names.
    pub fn item_key(&self, item: &SchemaItemRef) -> Option<String> {
        match *item {
            SchemaItemRef::Table { table } => self.tables.get(table).map(|t| t.original_name.clone()),
            SchemaItemRef::Column { table, column } => {
                let t = self.tables.get(table)?;
                let c = t.columns.get(column)?;
                Some(format!("{}.{}", t.original_name, c.original_name))
            }
        }
    }

    pub fn item_by_key(&self, key: &str) -> Option<SchemaItemRef> {
        match key.split_once('.') {
            None => self.table_index(key).map(|table| SchemaItemRef::Table { table }),
            Some((t, c)) => self
                .column_ref(t, c)
                .map(|r| SchemaItemRef::Column { table: r.table, column: r.column }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub example_id: String,
    pub language: Language,
    pub db_id: String,
    pub question: String,
    pub gold_sql: String,
    /// Parser error for gold SQL that could not be parsed; the example is kept.
    pub gold_error: Option<String>,
    /// Keys of the source record this model does not interpret.
    pub extra: serde_json::Map<String, serde_json::Value>,
}

pub type SchemaMap = BTreeMap<String, DatabaseSchema>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub examples: Vec<Example>,
    pub schemas: Arc<SchemaMap>,
}

impl Dataset {
    pub fn schema(&self, db_id: &str) -> Option<&DatabaseSchema> {
        self.schemas.get(db_id)
    }

    /// The single language shared by every example, if there is one.
    pub fn language(&self) -> Option<Language> {
        let first = self.examples.first()?.language;
        self.examples
            .iter()
            .all(|e| e.language == first)
            .then_some(first)
    }

    /// Database ids referenced by at least one example, sorted.
    pub fn referenced_dbs(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.examples.iter().map(|e| e.db_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}
