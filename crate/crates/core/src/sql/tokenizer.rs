use std::ops::Range;

use super::{ErrorKind, SqlError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier, keyword or number, lowercased.
    Word(String),
    /// Quoted literal without its quotes, case preserved.
    Str(String),
    Symbol(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte range in the source, quotes included for literals.
    pub span: Range<usize>,
}

impl Token {
    /// Keyword or symbol text; `None` for literals.
    pub fn text(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Word(w) | TokenKind::Symbol(w) => Some(w),
            TokenKind::Str(_) => None,
        }
    }

    pub fn is(&self, s: &str) -> bool {
        self.text() == Some(s)
    }

    pub fn is_any(&self, set: &[&str]) -> bool {
        self.text().is_some_and(|t| set.contains(&t))
    }

    pub fn display(&self) -> String {
        match &self.kind {
            TokenKind::Word(w) | TokenKind::Symbol(w) => w.clone(),
            TokenKind::Str(s) => format!("'{s}'"),
        }
    }
}

// words after which a `-` or `+` starts a signed number
const VALUE_CONTEXT: &[&str] = &[
    "select", "where", "having", "and", "or", "not", "between", "in", "like", "is", "on", "by",
    "limit", "distinct", "from", "exists",
];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn is_quote(c: char) -> bool {
    c == '\'' || c == '"'
}

/// Splits SQL into tokens. Single and double quotes are interchangeable and
/// pair up in order of appearance; `!=`, `>=` and `<=` are merged even when
/// written with a space.
pub fn tokenize(sql: &str) -> Result<Vec<Token>, SqlError> {
    let quotes: Vec<usize> = sql.char_indices().filter(|(_, c)| is_quote(*c)).map(|(i, _)| i).collect();
    if quotes.len() % 2 == 1 {
        return Err(SqlError::new(ErrorKind::UnbalancedQuote, *quotes.last().unwrap()));
    }
    let mut raw: Vec<Token> = Vec::new();
    let mut chars = sql.char_indices().peekable();
    let mut next_quote = 0;
    while let Some((i, c)) = chars.next() {
        if is_quote(c) {
            let close = quotes[next_quote + 1];
            next_quote += 2;
            raw.push(Token {
                kind: TokenKind::Str(sql[i + 1..close].to_string()),
                span: i..close + 1,
            });
            while chars.peek().is_some_and(|(j, _)| *j <= close) {
                chars.next();
            }
            continue;
        }
        if c.is_whitespace() {
            continue;
        }
        let signed = (c == '-' || c == '+')
            && starts_number(&sql[i + 1..])
            && match raw.last() {
                None => true,
                Some(Token { kind: TokenKind::Symbol(s), .. }) => s != ")",
                Some(Token { kind: TokenKind::Word(w), .. }) => VALUE_CONTEXT.contains(&w.as_str()),
                Some(Token { kind: TokenKind::Str(_), .. }) => false,
            };
        if is_word_char(c) || signed {
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = chars.peek() {
                if !is_word_char(d) {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            raw.push(Token {
                kind: TokenKind::Word(sql[i..end].to_lowercase()),
                span: i..end,
            });
            continue;
        }
        raw.push(Token {
            kind: TokenKind::Symbol(c.to_string()),
            span: i..i + c.len_utf8(),
        });
    }

    let mut out: Vec<Token> = Vec::with_capacity(raw.len());
    for tok in raw {
        if tok.is("=") {
            if let Some(prev) = out.last_mut() {
                if prev.is_any(&["!", ">", "<"]) {
                    let merged = format!("{}=", prev.text().unwrap());
                    prev.kind = TokenKind::Symbol(merged);
                    prev.span = prev.span.start..tok.span.end;
                    continue;
                }
            }
        }
        out.push(tok);
    }
    Ok(out)
}

fn starts_number(rest: &str) -> bool {
    let mut it = rest.chars();
    match it.next() {
        Some(d) if d.is_ascii_digit() => true,
        Some('.') => it.next().is_some_and(|d| d.is_ascii_digit()),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(sql: &str) -> Vec<String> {
        tokenize(sql).unwrap().iter().map(Token::display).collect()
    }

    #[test]
    fn basic_statement() {
        assert_eq!(
            texts("SELECT count(*) FROM head WHERE age  >  56"),
            ["select", "count", "(", "*", ")", "from", "head", "where", "age", ">", "56"]
        );
    }

    #[test]
    fn quotes_are_interchangeable_and_keep_case() {
        let toks = tokenize(r#"WHERE a = 'New York' OR b = "Ab""#).unwrap();
        assert_eq!(toks[3].kind, TokenKind::Str("New York".into()));
        assert_eq!(toks[7].kind, TokenKind::Str("Ab".into()));
        assert_eq!(toks[3].span, 10..20);
    }

    #[test]
    fn odd_quotes_fail() {
        let err = tokenize("WHERE name = 'O'Brien'").unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnbalancedQuote);
    }

    #[test]
    fn comparison_operators_merge() {
        assert_eq!(texts("a != b"), ["a", "!=", "b"]);
        assert_eq!(texts("a ! = b"), ["a", "!=", "b"]);
        assert_eq!(texts("a>=-1.5"), ["a", ">=", "-1.5"]);
        assert_eq!(texts("a <> b"), ["a", "<", ">", "b"]);
    }

    #[test]
    fn minus_is_an_operator_after_a_column() {
        assert_eq!(texts("a - 1"), ["a", "-", "1"]);
        assert_eq!(texts("a -1"), ["a", "-", "1"]);
        assert_eq!(texts("between -1 and 2"), ["between", "-1", "and", "2"]);
    }

    #[test]
    fn qualified_names_stay_whole() {
        assert_eq!(texts("T1.Name,T2.id"), ["t1.name", ",", "t2.id"]);
    }
}
