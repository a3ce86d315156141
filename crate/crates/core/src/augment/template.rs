use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::model::{ColumnType, DatabaseSchema, Language, SchemaItemRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Table,
    Column,
}

/// One table or column with the names the templates need.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaItem {
    pub db_id: String,
    pub kind: ItemKind,
    pub table: String,
    pub column: Option<String>,
    pub table_display: String,
    /// Display name of the item itself (the table's for table items).
    pub display_name: String,
    pub col_type: Option<ColumnType>,
}

impl SchemaItem {
    pub fn from_schema(schema: &DatabaseSchema, item: &SchemaItemRef) -> Option<Self> {
        match *item {
            SchemaItemRef::Table { table } => {
                let t = schema.tables.get(table)?;
                Some(SchemaItem {
                    db_id: schema.db_id.clone(),
                    kind: ItemKind::Table,
                    table: t.original_name.clone(),
                    column: None,
                    table_display: t.display_name.clone(),
                    display_name: t.display_name.clone(),
                    col_type: None,
                })
            }
            SchemaItemRef::Column { table, column } => {
                let t = schema.tables.get(table)?;
                let c = t.columns.get(column)?;
                Some(SchemaItem {
                    db_id: schema.db_id.clone(),
                    kind: ItemKind::Column,
                    table: t.original_name.clone(),
                    column: Some(c.original_name.clone()),
                    table_display: t.display_name.clone(),
                    display_name: c.display_name.clone(),
                    col_type: Some(c.col_type),
                })
            }
        }
    }

    /// All tables and columns of a schema, in schema order.
    pub fn all(schema: &DatabaseSchema) -> Vec<SchemaItem> {
        schema
            .items()
            .iter()
            .filter_map(|i| SchemaItem::from_schema(schema, i))
            .collect()
    }

    /// `table` or `table.column`, original names.
    pub fn key(&self) -> String {
        match &self.column {
            None => self.table.clone(),
            Some(c) => format!("{}.{c}", self.table),
        }
    }
}

/// Connective words of the context template in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separators {
    pub of: String,
    pub from: String,
}

impl Separators {
    pub fn new(of: &str, from: &str) -> Self {
        Separators {
            of: of.into(),
            from: from.into(),
        }
    }

    /// Built-in connectives, used when probing is off or inconclusive.
    pub fn builtin(lang: Language) -> Self {
        let (of, from) = match lang {
            Language::En => ("of", "from"),
            Language::De => ("von", "aus"),
            Language::Es => ("de", "en"),
            Language::Fr => ("de", "dans"),
            Language::Ja => ("の", "から"),
            Language::Zh => ("的", "来自"),
            Language::Vi => ("của", "từ"),
            Language::Ru => ("в", "из"),
            Language::Pt => ("de", "em"),
            Language::Nl => ("van", "uit"),
            Language::Sv => ("av", "från"),
        };
        Separators::new(of, from)
    }

    pub fn builtin_table() -> BTreeMap<Language, Separators> {
        Language::ALL.iter().map(|&l| (l, Separators::builtin(l))).collect()
    }
}

fn joiner(lang: Language) -> &'static str {
    if lang.is_cjk() {
        ""
    } else {
        " "
    }
}

/// `{COLUMN} of {TABLE} from ({DB})`, or `{TABLE} from ({DB})` for tables.
/// Chinese and Japanese are rendered without spaces.
pub fn render_context_template(item: &SchemaItem, lang: Language, seps: &Separators) -> String {
    let j = joiner(lang);
    let tail = format!("{}{j}{}{j}({})", item.table_display, seps.from, item.db_id);
    match item.kind {
        ItemKind::Table => tail,
        ItemKind::Column => format!("{}{j}{}{j}{tail}", item.display_name, seps.of),
    }
}

/// `{TABLE} {COLUMN} ({TYPE})`, or `{TABLE} (table)` for tables. `name`
/// replaces the item's own display name when given.
pub fn render_nli_template(item: &SchemaItem, lang: Language, name: Option<&str>) -> String {
    let own = name.unwrap_or(&item.display_name);
    match item.kind {
        ItemKind::Table => format!("{own} (table)"),
        ItemKind::Column => {
            let ty = item.col_type.map_or("others", ColumnType::as_str);
            format!("{}{}{own} ({ty})", item.table_display, joiner(lang))
        }
    }
}

/// NFC, trimmed, lowercased.
pub fn normalize_candidate(s: &str) -> String {
    s.nfc().collect::<String>().trim().to_lowercase()
}

fn is_boundary(c: Option<char>) -> bool {
    c.is_none_or(|c| !c.is_alphanumeric())
}

/// Byte offset of the last occurrence of `needle` in `hay`, matched
/// case-insensitively and, outside CJK, only at word boundaries.
fn rfind_word(hay: &str, needle: &str, cjk: bool) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let lower = hay.to_lowercase();
    let needle = needle.to_lowercase();
    if lower.len() != hay.len() {
        // lowercasing changed byte lengths; fall back to an exact search
        return rfind_in(hay, &needle, cjk);
    }
    rfind_in(&lower, &needle, cjk)
}

fn rfind_in(hay: &str, needle: &str, cjk: bool) -> Option<usize> {
    hay.rmatch_indices(needle).map(|(i, _)| i).find(|&i| {
        cjk || (is_boundary(hay[..i].chars().next_back()) && is_boundary(hay[i + needle.len()..].chars().next()))
    })
}

fn clean(s: &str) -> Option<String> {
    let t = s
        .trim()
        .trim_matches(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | '«' | '»' | '「' | '」' | ',' | '、' | ':'));
    (!t.is_empty()).then(|| t.nfc().collect())
}

/// Recovers the item's slot from a translated context template: the text
/// before the last `from` connective (or opening parenthesis) is the table
/// part; for columns, the text before the last `of` connective in it.
pub fn extract_candidate(translated: &str, item: &SchemaItem, lang: Language, seps: &Separators) -> Option<String> {
    let cjk = lang.is_cjk();
    let text = translated.trim();
    let paren = text.rfind(['(', '（']);
    let head = &text[..paren.unwrap_or(text.len())];
    let head = match rfind_word(head, &seps.from, cjk) {
        Some(i) => &head[..i],
        None if paren.is_some() => head,
        None => return None,
    };
    match item.kind {
        ItemKind::Table => clean(head),
        ItemKind::Column => {
            let i = rfind_word(head, &seps.of, cjk)?;
            clean(&head[..i])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column() -> SchemaItem {
        SchemaItem {
            db_id: "department_management".into(),
            kind: ItemKind::Column,
            table: "department".into(),
            column: Some("head".into()),
            table_display: "department".into(),
            display_name: "head".into(),
            col_type: Some(ColumnType::Text),
        }
    }

    fn table() -> SchemaItem {
        SchemaItem {
            kind: ItemKind::Table,
            column: None,
            display_name: "department".into(),
            col_type: None,
            ..column()
        }
    }

    #[test]
    fn context_templates() {
        let en = Separators::builtin(Language::En);
        assert_eq!(
            render_context_template(&column(), Language::En, &en),
            "head of department from (department_management)"
        );
        assert_eq!(
            render_context_template(&table(), Language::En, &en),
            "department from (department_management)"
        );
        let zh = Separators::builtin(Language::Zh);
        let mut c = column();
        c.display_name = "负责人".into();
        c.table_display = "部门".into();
        assert_eq!(render_context_template(&c, Language::Zh, &zh), "负责人的部门来自(department_management)");
    }

    #[test]
    fn nli_templates() {
        assert_eq!(render_nli_template(&column(), Language::En, None), "department head (text)");
        assert_eq!(render_nli_template(&column(), Language::En, Some("chief")), "department chief (text)");
        assert_eq!(render_nli_template(&table(), Language::En, None), "department (table)");
        assert_eq!(
            render_nli_template(&table(), Language::En, None),
            render_nli_template(&table(), Language::En, None)
        );
    }

    #[test]
    fn extraction() {
        let en = Separators::builtin(Language::En);
        let c = column();
        assert_eq!(
            extract_candidate("chief of department from (department_management)", &c, Language::En, &en).as_deref(),
            Some("chief")
        );
        assert_eq!(
            extract_candidate("Chief of the department from (Department Management)", &c, Language::En, &en).as_deref(),
            Some("Chief")
        );
        assert_eq!(extract_candidate("the boss", &c, Language::En, &en), None);
        assert_eq!(
            extract_candidate("head office of department from (x)", &c, Language::En, &en).as_deref(),
            Some("head office")
        );
        assert_eq!(
            extract_candidate("division from (department_management)", &table(), Language::En, &en).as_deref(),
            Some("division")
        );
        // "of" inside a longer word is not a connective
        assert_eq!(extract_candidate("offer from (x)", &c, Language::En, &en), None);
    }

    #[test]
    fn cjk_extraction() {
        let zh = Separators::builtin(Language::Zh);
        let c = column();
        assert_eq!(extract_candidate("主管的部门来自（department_management）", &c, Language::Zh, &zh).as_deref(), Some("主管"));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_candidate("  Chief "), "chief");
        assert_eq!(normalize_candidate("Cafe\u{301}"), "café");
    }
}
