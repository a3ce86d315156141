use std::path::PathBuf;
use std::sync::Arc;

use mspider_core::backend::{
    BackendError, BackendIdentity, Cached, EntailmentModel, EntailmentRequest, FixtureBackend, HttpBackend,
    HttpConfig, ResponseCache, TranslationRequest, Translator,
};

use crate::error::CliError;

enum Inner {
    Fixture(FixtureBackend),
    Http(HttpBackend),
}

impl Translator for Inner {
    fn identity(&self) -> BackendIdentity {
        match self {
            Inner::Fixture(b) => Translator::identity(b),
            Inner::Http(b) => Translator::identity(b),
        }
    }

    fn translate(&self, r: &TranslationRequest) -> Result<String, BackendError> {
        match self {
            Inner::Fixture(b) => b.translate(r),
            Inner::Http(b) => b.translate(r),
        }
    }
}

impl EntailmentModel for Inner {
    fn identity(&self) -> BackendIdentity {
        Translator::identity(self)
    }

    fn entail(&self, r: &EntailmentRequest) -> Result<f64, BackendError> {
        match self {
            Inner::Fixture(b) => b.entail(r),
            Inner::Http(b) => b.entail(r),
        }
    }
}

/// The configured backend behind a response cache.
pub struct Backend {
    inner: Cached<Inner>,
    cache: Arc<ResponseCache>,
}

#[derive(Debug, Clone, Default)]
pub struct BackendChoice {
    pub fixtures: Option<PathBuf>,
    pub sidecar: Option<String>,
    pub cache: Option<PathBuf>,
}

impl Backend {
    /// Fixtures win over a sidecar address.
    pub fn open(choice: &BackendChoice) -> Result<Self, CliError> {
        let inner = match (&choice.fixtures, &choice.sidecar) {
            (Some(path), _) => Inner::Fixture(FixtureBackend::load(path)?),
            (None, Some(url)) => Inner::Http(HttpBackend::connect(HttpConfig::new(url.clone()))?),
            (None, None) => {
                return Err(CliError::Usage(
                    "no backend: pass --fixtures, --sidecar or set MSPIDER_SIDECAR".into(),
                ))
            }
        };
        let cache = Arc::new(match &choice.cache {
            Some(p) => ResponseCache::open(p)?,
            None => ResponseCache::in_memory(),
        });
        Ok(Backend {
            inner: Cached::new(inner, cache.clone()),
            cache,
        })
    }

    pub fn translator(&self) -> &dyn Translator {
        &self.inner
    }

    pub fn nli(&self) -> &dyn EntailmentModel {
        &self.inner
    }

    pub fn identity(&self) -> BackendIdentity {
        Translator::identity(&self.inner)
    }

    pub fn flush(&self) -> Result<(), CliError> {
        Ok(self.cache.flush()?)
    }
}
