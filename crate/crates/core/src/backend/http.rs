use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// For example `http://127.0.0.1:8765`.
    pub base_url: String,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub timeout_ms: u64,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpConfig {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            max_in_flight: 4,
            max_retries: 5,
            initial_backoff_ms: 200,
            timeout_ms: 60_000,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Deserialize)]
struct Health {
    #[serde(alias = "backend_version")]
    version: String,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

#[derive(Deserialize)]
struct NliResponse {
    entail: f64,
}

#[derive(Deserialize)]
struct ErrorPayload {
    error: String,
    #[serde(default)]
    message: String,
}

/// Client for the model sidecar. Requests in flight are bounded; connection
/// failures, 429 and 5xx responses are retried with exponential backoff.
pub struct HttpBackend {
    agent: ureq::Agent,
    config: HttpConfig,
    version: String,
    slots: Semaphore,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("version", &self.version)
            .finish()
    }
}

enum Attempt<T> {
    Done(T),
    Retry(String),
}

impl HttpBackend {
    /// Connects and reads the backend version from `/healthz`.
    pub fn connect(config: HttpConfig) -> Result<Self, BackendError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        let mut backend = HttpBackend {
            agent,
            slots: Semaphore::new(config.max_in_flight),
            config,
            version: String::new(),
        };
        let health: Health = backend.with_retries(|b| b.attempt_get("/healthz"))?;
        backend.version = health.version;
        Ok(backend)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn with_retries<T>(&self, f: impl Fn(&Self) -> Result<Attempt<T>, BackendError>) -> Result<T, BackendError> {
        let mut delay = Duration::from_millis(self.config.initial_backoff_ms);
        let mut attempt = 0;
        loop {
            match f(self)? {
                Attempt::Done(v) => return Ok(v),
                Attempt::Retry(why) => {
                    if attempt >= self.config.max_retries {
                        return Err(BackendError::Unavailable(why));
                    }
                    tracing::debug!(attempt, %why, "retrying sidecar request");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn attempt_get<T: DeserializeOwned>(&self, path: &str) -> Result<Attempt<T>, BackendError> {
        let _permit = self.slots.acquire();
        let url = format!("{}{}", self.config.base_url, path);
        Self::handle(self.agent.get(&url).call(), path)
    }

    fn attempt_post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<Attempt<T>, BackendError> {
        let _permit = self.slots.acquire();
        let url = format!("{}{}", self.config.base_url, path);
        Self::handle(self.agent.post(&url).send_json(body), path)
    }

    fn handle<T: DeserializeOwned>(
        result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
        path: &str,
    ) -> Result<Attempt<T>, BackendError> {
        let mut resp = match result {
            Ok(r) => r,
            Err(e @ (ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::HostNotFound | ureq::Error::ConnectionFailed)) => {
                return Ok(Attempt::Retry(format!("{path}: {e}")))
            }
            Err(e) => return Err(BackendError::Protocol(format!("{path}: {e}"))),
        };
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Protocol(format!("{path}: reading body: {e}")))?;
        match status {
            200..=299 => serde_json::from_str(&body)
                .map(Attempt::Done)
                .map_err(|e| BackendError::Protocol(format!("{path}: malformed response: {e}"))),
            429 | 500..=599 => Ok(Attempt::Retry(format!("{path}: HTTP {status}"))),
            _ => {
                let payload: Option<ErrorPayload> = serde_json::from_str(&body).ok();
                match payload {
                    Some(p) if p.error == "fixture_miss" => Err(BackendError::FixtureMiss {
                        endpoint: path.into(),
                        request: p.message,
                    }),
                    Some(p) => Err(BackendError::InvalidRequest(format!("{path}: HTTP {status}: {}: {}", p.error, p.message))),
                    None => Err(BackendError::InvalidRequest(format!("{path}: HTTP {status}: {body}"))),
                }
            }
        }
    }
}

impl Translator for HttpBackend {
    fn identity(&self) -> BackendIdentity {
        BackendIdentity {
            name: format!("sidecar:{}", self.config.base_url),
            version: self.version.clone(),
        }
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError> {
        let r: TranslateResponse = self.with_retries(|b| b.attempt_post(TRANSLATE, request))?;
        if r.text.trim().is_empty() {
            return Err(BackendError::Protocol(format!("{TRANSLATE}: empty translation")));
        }
        Ok(r.text)
    }
}

impl EntailmentModel for HttpBackend {
    fn identity(&self) -> BackendIdentity {
        Translator::identity(self)
    }

    fn entail(&self, request: &EntailmentRequest) -> Result<f64, BackendError> {
        let r: NliResponse = self.with_retries(|b| b.attempt_post(NLI, request))?;
        check_score(r.entail)
    }
}
