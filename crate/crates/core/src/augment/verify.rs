use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::template::{render_nli_template, SchemaItem};
use crate::backend::{EntailmentModel, EntailmentRequest};
use crate::model::Language;

/// Minimum entailment probability, in both directions, for a synonym.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub default: f64,
    #[serde(default)]
    pub per_language: BTreeMap<Language, f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            default: 0.65,
            per_language: BTreeMap::from([(Language::Zh, 0.68)]),
        }
    }
}

impl Thresholds {
    pub fn get(&self, lang: Language) -> f64 {
        self.per_language.get(&lang).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedSynonym {
    pub synonym: String,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum Rejection {
    BelowThreshold { forward: f64, backward: f64, threshold: f64 },
    BackendError { error: String },
}

pub type Verification = Result<VerifiedSynonym, Rejection>;

/// Scores the original item template against the candidate's in both
/// directions; accepts iff the smaller score reaches the language threshold.
pub fn verify_pair(
    item: &SchemaItem,
    candidate: &str,
    lang: Language,
    thresholds: &Thresholds,
    nli: &dyn EntailmentModel,
) -> Verification {
    let original = render_nli_template(item, lang, None);
    let replaced = render_nli_template(item, lang, Some(candidate));
    let score = |p: &str, h: &str| {
        EntailmentRequest::new(p, h, lang)
            .and_then(|r| nli.entail(&r))
            .map_err(|e| Rejection::BackendError { error: e.to_string() })
    };
    let forward = score(&original, &replaced)?;
    let backward = score(&replaced, &original)?;
    let threshold = thresholds.get(lang);
    if forward.min(backward) >= threshold {
        Ok(VerifiedSynonym {
            synonym: candidate.to_string(),
            forward,
            backward,
        })
    } else {
        Err(Rejection::BelowThreshold {
            forward,
            backward,
            threshold,
        })
    }
}
