use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::model::Language;

/// Han, kana and Hangul characters are scored one character at a time.
pub fn is_cjk_char(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF      // hiragana, katakana
        | 0x31F0..=0x31FF    // katakana extensions
        | 0x3400..=0x4DBF    // CJK extension A
        | 0x4E00..=0x9FFF    // CJK unified ideographs
        | 0xAC00..=0xD7AF    // Hangul syllables
        | 0xF900..=0xFAFF    // compatibility ideographs
        | 0xFF66..=0xFF9F    // half-width katakana
        | 0x20000..=0x2FA1F) // supplementary ideographs
}

/// A question split for linking. `units` is the ordered sequence spans are
/// drawn from; `bigrams` holds adjacent character pairs of CJK runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub language: Language,
    pub units: Vec<String>,
    pub bigrams: Vec<String>,
}

impl TokenizedText {
    /// Units followed by bigrams.
    pub fn tokens(&self) -> Vec<&str> {
        self.units.iter().chain(&self.bigrams).map(String::as_str).collect()
    }
}

fn normalize(text: &str) -> String {
    text.nfkc().collect::<String>().replace('_', " ").to_lowercase()
}

fn push_words(out: &mut Vec<String>, segment: &str) {
    out.extend(segment.unicode_words().map(str::to_string));
}

/// Case-folded Unicode words for alphabetic languages. For Chinese and
/// Japanese, CJK characters become single units plus bigrams within each run,
/// and embedded Latin runs stay whole words.
pub fn tokenize(text: &str, language: Language) -> TokenizedText {
    let text = normalize(text);
    let mut units = Vec::new();
    let mut bigrams = Vec::new();
    if !language.is_cjk() {
        push_words(&mut units, &text);
        return TokenizedText { language, units, bigrams };
    }
    let mut buf = String::new();
    let mut prev: Option<char> = None;
    for c in text.chars() {
        if is_cjk_char(c) {
            if !buf.is_empty() {
                push_words(&mut units, &buf);
                buf.clear();
            }
            if let Some(p) = prev {
                bigrams.push(format!("{p}{c}"));
            }
            units.push(c.to_string());
            prev = Some(c);
        } else {
            buf.push(c);
            prev = None;
        }
    }
    push_words(&mut units, &buf);
    TokenizedText { language, units, bigrams }
}
