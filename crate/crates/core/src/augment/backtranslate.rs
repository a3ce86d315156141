use serde::{Deserialize, Serialize};

use super::template::{extract_candidate, render_context_template, SchemaItem, Separators};
use crate::backend::{BackendError, TranslationRequest, Translator};
use crate::model::Language;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub intermediate: Language,
    /// 1-based return to the item's language.
    pub round: u32,
    /// Produced by translating the bare name after template extraction failed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SlotOutcome {
    Candidate { text: String },
    ExtractionFailed,
    BackendError { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub intermediate: Language,
    pub round: u32,
    pub outcome: SlotOutcome,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub item: SchemaItem,
    pub language: Language,
    pub slots: Vec<Slot>,
}

impl CandidateSet {
    pub fn candidates(&self) -> impl Iterator<Item = (&str, Provenance)> {
        self.slots.iter().filter_map(|s| match &s.outcome {
            SlotOutcome::Candidate { text } => Some((
                text.as_str(),
                Provenance {
                    intermediate: s.intermediate,
                    round: s.round,
                    fallback: s.fallback,
                },
            )),
            _ => None,
        })
    }
}

fn round_trip(
    backend: &dyn Translator,
    text: &str,
    lang: Language,
    via: Language,
) -> Result<String, BackendError> {
    let there = backend.translate(&TranslationRequest::new(text, lang, via)?)?;
    backend.translate(&TranslationRequest::new(there, via, lang)?)
}

/// Alternates between the item's language and each intermediate for
/// `rounds` returns, extracting a candidate at every return. A backend
/// failure ends that intermediate's chain.
pub fn backtranslate_item(
    item: &SchemaItem,
    lang: Language,
    intermediates: &[Language],
    rounds: u32,
    seps: &Separators,
    backend: &dyn Translator,
) -> CandidateSet {
    let mut slots = Vec::new();
    let start = render_context_template(item, lang, seps);
    for &via in intermediates.iter().filter(|&&l| l != lang) {
        let mut current = start.clone();
        for round in 1..=rounds {
            let slot = |outcome, fallback| Slot {
                intermediate: via,
                round,
                outcome,
                fallback,
            };
            match round_trip(backend, &current, lang, via) {
                Err(e) => {
                    slots.push(slot(SlotOutcome::BackendError { error: e.to_string() }, false));
                    break;
                }
                Ok(back) => {
                    match extract_candidate(&back, item, lang, seps) {
                        Some(text) => slots.push(slot(SlotOutcome::Candidate { text }, false)),
                        None => match round_trip(backend, &item.display_name, lang, via) {
                            Ok(text) if !text.trim().is_empty() => slots.push(slot(
                                SlotOutcome::Candidate {
                                    text: text.trim().to_string(),
                                },
                                true,
                            )),
                            Ok(_) => slots.push(slot(SlotOutcome::ExtractionFailed, true)),
                            Err(e) => slots.push(slot(SlotOutcome::BackendError { error: e.to_string() }, true)),
                        },
                    }
                    current = back;
                }
            }
        }
    }
    CandidateSet {
        item: item.clone(),
        language: lang,
        slots,
    }
}

/// Asks the translator for the connectives of `lang`. Falls back to the
/// built-in table when a request fails or both words come back identical.
pub fn probe_separators(backend: &dyn Translator, lang: Language) -> (Separators, bool) {
    if lang == Language::En {
        return (Separators::builtin(lang), true);
    }
    let ask = |w: &str| {
        TranslationRequest::new(w, Language::En, lang)
            .and_then(|r| backend.translate(&r))
            .map(|s| s.trim().to_string())
    };
    match (ask("of"), ask("from")) {
        (Ok(of), Ok(from)) if !of.is_empty() && !from.is_empty() && of.to_lowercase() != from.to_lowercase() => {
            (Separators { of, from }, true)
        }
        _ => (Separators::builtin(lang), false),
    }
}
