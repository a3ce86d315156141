use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationFixture {
    pub src: Language,
    pub tgt: Language,
    pub text: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentFixture {
    pub lang: Language,
    pub premise: String,
    pub hypothesis: String,
    pub score: f64,
}

/// On-disk fixture table. `digests` maps a [`request_digest`] to a response
/// string (translation) or number (entailment).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub version: String,
    /// Unmapped translations return their input instead of failing.
    #[serde(default)]
    pub identity_translation: bool,
    #[serde(default)]
    pub translations: Vec<TranslationFixture>,
    #[serde(default)]
    pub entailments: Vec<EntailmentFixture>,
    #[serde(default)]
    pub digests: std::collections::BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("reading fixture {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture {path}: {message}")]
    Invalid { path: String, message: String },
}

/// Deterministic offline backend answering from a fixture table.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    version: String,
    identity_translation: bool,
    translations: HashMap<(Language, Language, String), String>,
    entailments: HashMap<(Language, String, String), f64>,
    digests: HashMap<String, serde_json::Value>,
}

impl FixtureBackend {
    pub fn new(file: FixtureFile) -> Result<Self, String> {
        let mut translations = HashMap::new();
        for t in file.translations {
            if t.output.trim().is_empty() {
                return Err(format!("empty output for `{}`", t.text));
            }
            translations.insert((t.src, t.tgt, t.text), t.output);
        }
        let mut entailments = HashMap::new();
        for e in file.entailments {
            check_score(e.score).map_err(|e| e.to_string())?;
            entailments.insert((e.lang, e.premise, e.hypothesis), e.score);
        }
        Ok(FixtureBackend {
            version: file.version,
            identity_translation: file.identity_translation,
            translations,
            entailments,
            digests: file.digests.into_iter().collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io { path: p.clone(), source })?;
        let file: FixtureFile =
            serde_json::from_str(&text).map_err(|e| FixtureError::Invalid { path: p.clone(), message: e.to_string() })?;
        FixtureBackend::new(file).map_err(|message| FixtureError::Invalid { path: p, message })
    }

    /// Translates everything to itself and scores only identical pairs.
    pub fn identity(version: &str) -> Self {
        FixtureBackend::new(FixtureFile {
            version: version.into(),
            identity_translation: true,
            ..FixtureFile::default()
        })
        .expect("empty fixture is valid")
    }

    fn miss(endpoint: &str, request: &impl Serialize) -> BackendError {
        BackendError::FixtureMiss {
            endpoint: endpoint.into(),
            request: serde_json::to_string(request).unwrap_or_default(),
        }
    }
}

impl Translator for FixtureBackend {
    fn identity(&self) -> BackendIdentity {
        BackendIdentity {
            name: "fixture".into(),
            version: self.version.clone(),
        }
    }

    fn translate(&self, r: &TranslationRequest) -> Result<String, BackendError> {
        if let Some(out) = self.translations.get(&(r.src, r.tgt, r.text.clone())) {
            return Ok(out.clone());
        }
        if let Some(v) = self.digests.get(&request_digest(TRANSLATE, r)) {
            return v
                .as_str()
                .filter(|s| !s.trim().is_empty())
                .map(str::to_string)
                .ok_or_else(|| BackendError::Protocol("fixture translation is not a non-empty string".into()));
        }
        if self.identity_translation {
            return Ok(r.text.clone());
        }
        Err(Self::miss(TRANSLATE, r))
    }
}

impl EntailmentModel for FixtureBackend {
    fn identity(&self) -> BackendIdentity {
        Translator::identity(self)
    }

    fn entail(&self, r: &EntailmentRequest) -> Result<f64, BackendError> {
        if let Some(&s) = self.entailments.get(&(r.lang, r.premise.clone(), r.hypothesis.clone())) {
            return Ok(s);
        }
        if let Some(v) = self.digests.get(&request_digest(NLI, r)) {
            let s = v
                .as_f64()
                .ok_or_else(|| BackendError::Protocol("fixture score is not a number".into()))?;
            return check_score(s);
        }
        if r.premise == r.hypothesis {
            return Ok(1.0);
        }
        Err(Self::miss(NLI, r))
    }
}
