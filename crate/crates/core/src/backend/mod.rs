//! Translation and entailment backends: a sidecar HTTP client, a fixture
//! file backend and a persistent response cache.

mod cache;
mod fixture;
mod http;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cache::{Cached, CacheEntry, CacheError, ResponseCache};
pub use fixture::{EntailmentFixture, FixtureBackend, FixtureError, FixtureFile, TranslationFixture};
pub use http::{HttpBackend, HttpConfig};

use crate::model::Language;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("no fixture for {endpoint} request {request}")]
    FixtureMiss { endpoint: String, request: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Unavailable(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackendIdentity {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub text: String,
    pub src: Language,
    pub tgt: Language,
}

impl TranslationRequest {
    pub fn new(text: impl Into<String>, src: Language, tgt: Language) -> Result<Self, BackendError> {
        let text = text.into();
        if src == tgt {
            return Err(BackendError::InvalidRequest(format!("source and target are both {src}")));
        }
        if text.trim().is_empty() {
            return Err(BackendError::InvalidRequest("empty text".into()));
        }
        Ok(TranslationRequest { text, src, tgt })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntailmentRequest {
    pub premise: String,
    pub hypothesis: String,
    pub lang: Language,
}

impl EntailmentRequest {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>, lang: Language) -> Result<Self, BackendError> {
        let (premise, hypothesis) = (premise.into(), hypothesis.into());
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(BackendError::InvalidRequest("empty premise or hypothesis".into()));
        }
        Ok(EntailmentRequest { premise, hypothesis, lang })
    }
}

pub trait Translator: Send + Sync {
    fn identity(&self) -> BackendIdentity;
    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError>;
}

pub trait EntailmentModel: Send + Sync {
    fn identity(&self) -> BackendIdentity;
    /// Probability that the premise entails the hypothesis, in `[0, 1]`.
    fn entail(&self, request: &EntailmentRequest) -> Result<f64, BackendError>;
}

impl<T: Translator + ?Sized> Translator for std::sync::Arc<T> {
    fn identity(&self) -> BackendIdentity {
        (**self).identity()
    }
    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError> {
        (**self).translate(request)
    }
}

impl<T: EntailmentModel + ?Sized> EntailmentModel for std::sync::Arc<T> {
    fn identity(&self) -> BackendIdentity {
        (**self).identity()
    }
    fn entail(&self, request: &EntailmentRequest) -> Result<f64, BackendError> {
        (**self).entail(request)
    }
}

pub const TRANSLATE: &str = "/translate";
pub const NLI: &str = "/nli";

/// Hex SHA-256 of an endpoint and the request serialized with sorted keys.
pub fn request_digest(endpoint: &str, request: &impl Serialize) -> String {
    let canonical = serde_json::to_value(request)
        .and_then(|v| serde_json::to_string(&v))
        .expect("requests serialize");
    let mut h = Sha256::new();
    h.update(endpoint.as_bytes());
    h.update([0u8]);
    h.update(canonical.as_bytes());
    hex::encode(h.finalize())
}

pub(crate) fn check_score(score: f64) -> Result<f64, BackendError> {
    if score.is_finite() && (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(BackendError::Protocol(format!("entailment score {score} outside [0, 1]")))
    }
}
