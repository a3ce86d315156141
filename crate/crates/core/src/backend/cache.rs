use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub endpoint: String,
    pub backend: BackendIdentity,
    pub request: serde_json::Value,
    pub response: serde_json::Value,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path} line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

/// Responses keyed by backend identity and request, persisted as JSON lines
/// sorted by key. Reads are concurrent; writes are serialized.
#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, CacheEntry>>,
    dirty: AtomicBool,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache::default()
    }

    /// Opens a cache file, starting empty when it does not exist yet.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let p = path.display().to_string();
        let mut entries = BTreeMap::new();
        match std::fs::File::open(path) {
            Ok(f) => {
                for (i, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.map_err(|source| CacheError::Io { path: p.clone(), source })?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let e: CacheEntry = serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
                        path: p.clone(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                    entries.insert(e.key.clone(), e);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => return Err(CacheError::Io { path: p, source }),
        }
        Ok(ResponseCache {
            path: Some(path.to_path_buf()),
            entries: RwLock::new(entries),
            dirty: AtomicBool::new(false),
        })
    }

    pub fn key(endpoint: &str, backend: &BackendIdentity, request: &impl Serialize) -> String {
        request_digest(
            endpoint,
            &serde_json::json!({"backend": backend.name, "version": backend.version, "request": request}),
        )
    }

    pub fn get(&self, key: &str) -> Option<serde_json::Value> {
        self.entries.read().unwrap().get(key).map(|e| e.response.clone())
    }

    pub fn insert(&self, entry: CacheEntry) {
        self.entries.write().unwrap().insert(entry.key.clone(), entry);
        self.dirty.store(true, Ordering::SeqCst);
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes all entries to a temporary file and renames it over the cache.
    pub fn flush(&self) -> Result<(), CacheError> {
        let Some(path) = &self.path else { return Ok(()) };
        if !self.dirty.swap(false, Ordering::SeqCst) {
            return Ok(());
        }
        let p = path.display().to_string();
        let io = |source| CacheError::Io { path: p.clone(), source };
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp).map_err(io)?);
            for e in self.entries.read().unwrap().values() {
                let line = serde_json::to_string(e).expect("entries serialize");
                writeln!(f, "{line}").map_err(io)?;
            }
            f.into_inner().map_err(|e| io(e.into_error()))?.sync_all().map_err(io)?;
        }
        std::fs::rename(&tmp, path).map_err(io)
    }
}

/// A backend whose responses go through a [`ResponseCache`].
#[derive(Debug, Clone)]
pub struct Cached<B> {
    inner: B,
    cache: Arc<ResponseCache>,
}

impl<B> Cached<B> {
    pub fn new(inner: B, cache: Arc<ResponseCache>) -> Self {
        Cached { inner, cache }
    }

    pub fn cache(&self) -> &Arc<ResponseCache> {
        &self.cache
    }
}

impl<B> Cached<B> {
    fn lookup<R: Serialize>(
        &self,
        endpoint: &str,
        id: BackendIdentity,
        request: &R,
        call: impl FnOnce() -> Result<serde_json::Value, BackendError>,
    ) -> Result<serde_json::Value, BackendError> {
        let key = ResponseCache::key(endpoint, &id, request);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let response = call()?;
        self.cache.insert(CacheEntry {
            key,
            endpoint: endpoint.into(),
            backend: id,
            request: serde_json::to_value(request).expect("requests serialize"),
            response: response.clone(),
        });
        Ok(response)
    }
}

impl<B: Translator> Translator for Cached<B> {
    fn identity(&self) -> BackendIdentity {
        self.inner.identity()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError> {
        let v = self.lookup(TRANSLATE, self.inner.identity(), request, || {
            self.inner.translate(request).map(serde_json::Value::String)
        })?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("cached translation is not a string".into()))
    }
}

impl<B: EntailmentModel> EntailmentModel for Cached<B> {
    fn identity(&self) -> BackendIdentity {
        self.inner.identity()
    }

    fn entail(&self, request: &EntailmentRequest) -> Result<f64, BackendError> {
        let v = self.lookup(NLI, self.inner.identity(), request, || {
            self.inner.entail(request).map(|s| serde_json::json!(s))
        })?;
        v.as_f64()
            .ok_or_else(|| BackendError::Protocol("cached score is not a number".into()))
            .and_then(check_score)
    }
}
