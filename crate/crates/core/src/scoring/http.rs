use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;

use super::replay::RecordedLogprobs;
use super::{ScoredSequence, ScoringBackend, ScoringError, Tokenizer};
use crate::jsonl::{parse_jsonl, to_line};

pub const ENV_LM_URL: &str = "SHIFTBENCH_LM_URL";
pub const ENV_LM_TOKEN: &str = "SHIFTBENCH_LM_TOKEN";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub token: Option<String>,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub timeout: Duration,
    /// Whether the server includes a beginning-of-sequence logprob.
    pub bos_included: bool,
    pub cache_path: Option<PathBuf>,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            token: None,
            max_in_flight: 4,
            max_retries: 2,
            timeout: Duration::from_secs(60),
            bos_included: false,
            cache_path: None,
        }
    }

    /// Reads `SHIFTBENCH_LM_URL` (required unless `endpoint` is given) and
    /// `SHIFTBENCH_LM_TOKEN`.
    pub fn from_env(endpoint: Option<String>) -> Result<Self, ScoringError> {
        let endpoint = endpoint.or_else(|| std::env::var(ENV_LM_URL).ok()).ok_or_else(|| {
            ScoringError::Unavailable {
                backend: "http".into(),
                message: format!("no endpoint given and {ENV_LM_URL} is unset"),
            }
        })?;
        let mut cfg = HttpConfig::new(endpoint);
        cfg.token = std::env::var(ENV_LM_TOKEN).ok().filter(|t| !t.is_empty());
        Ok(cfg)
    }
}

/// Response cache keyed on `(endpoint, text)`. When backed by a file, every
/// new entry is appended as a recorded-logprob line, so a cache file doubles
/// as a replay fixture.
#[derive(Debug, Default)]
pub struct LogprobCache {
    entries: Mutex<HashMap<(String, String), RecordedLogprobs>>,
    file: Option<Mutex<File>>,
}

impl LogprobCache {
    pub fn in_memory() -> Self {
        LogprobCache::default()
    }

    pub fn open(path: &Path) -> Result<Self, ScoringError> {
        let io = |e: std::io::Error| ScoringError::Unavailable {
            backend: "cache".into(),
            message: format!("{}: {e}", path.display()),
        };
        let mut entries = HashMap::new();
        if path.exists() {
            let records: Vec<RecordedLogprobs> =
                parse_jsonl(BufReader::new(File::open(path).map_err(io)?), &path.display().to_string())
                    .map_err(|e| ScoringError::Unavailable { backend: "cache".into(), message: e.to_string() })?;
            for r in records {
                entries.insert((r.backend_id.clone(), r.text.clone()), r);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(LogprobCache { entries: Mutex::new(entries), file: Some(Mutex::new(file)) })
    }

    pub fn get(&self, endpoint: &str, text: &str) -> Option<RecordedLogprobs> {
        self.entries
            .lock()
            .expect("cache lock")
            .get(&(endpoint.to_string(), text.to_string()))
            .cloned()
    }

    pub fn insert(&self, record: RecordedLogprobs) -> Result<(), ScoringError> {
        let mut entries = self.entries.lock().expect("cache lock");
        let key = (record.backend_id.clone(), record.text.clone());
        if entries.contains_key(&key) {
            return Ok(());
        }
        if let Some(file) = &self.file {
            let mut f = file.lock().expect("cache file lock");
            f.write_all(to_line(&record).as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| ScoringError::Unavailable { backend: "cache".into(), message: e.to_string() })?;
        }
        entries.insert(key, record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("limiter lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("limiter lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Deserialize)]
struct WireResponse {
    tokens: Vec<String>,
    logprobs: Vec<f64>,
}

/// Client for a remote logprob endpoint.
#[derive(Debug)]
pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    cache: LogprobCache,
    limiter: Limiter,
    requests: AtomicUsize,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, ScoringError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ScoringError::Unavailable { backend: config.endpoint.clone(), message: e.to_string() })?;
        let cache = match &config.cache_path {
            Some(p) => LogprobCache::open(p)?,
            None => LogprobCache::in_memory(),
        };
        Ok(HttpBackend {
            limiter: Limiter::new(config.max_in_flight),
            config,
            client,
            cache,
            requests: AtomicUsize::new(0),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    /// Number of HTTP requests actually sent (cache hits excluded).
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn cache(&self) -> &LogprobCache {
        &self.cache
    }

    /// Tokens and logprobs for `text`, from the cache when possible.
    /// Retryable transport failures are retried up to `max_retries` times.
    pub fn fetch_logprobs(&self, text: &str) -> Result<ScoredSequence, ScoringError> {
        let endpoint = &self.config.endpoint;
        if let Some(hit) = self.cache.get(endpoint, text) {
            return ScoredSequence::new(endpoint, text, hit.tokens, hit.logprobs);
        }
        let mut attempt = 0;
        let wire = loop {
            match self.request(text) {
                Ok(w) => break w,
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
                }
                Err(e) => return Err(e),
            }
        };
        let scored = ScoredSequence::new(endpoint, text, wire.tokens, wire.logprobs)?;
        self.cache.insert(RecordedLogprobs {
            text: text.to_string(),
            tokens: scored.tokens.clone(),
            logprobs: scored.token_logprobs.clone(),
            backend_id: endpoint.clone(),
            bos_included: self.config.bos_included,
        })?;
        Ok(scored)
    }

    fn request(&self, text: &str) -> Result<WireResponse, ScoringError> {
        let endpoint = &self.config.endpoint;
        let _permit = self.limiter.acquire();
        self.requests.fetch_add(1, Ordering::SeqCst);
        let mut req = self.client.post(endpoint).json(&serde_json::json!({ "text": text }));
        if let Some(tok) = &self.config.token {
            req = req.bearer_auth(tok);
        }
        let resp = req.send().map_err(|e| ScoringError::Transport {
            endpoint: endpoint.clone(),
            message: e.to_string(),
            retryable: e.is_timeout() || e.is_connect() || e.is_request(),
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ScoringError::Transport {
                endpoint: endpoint.clone(),
                message: format!("HTTP status {status}"),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        let body = resp.bytes().map_err(|e| ScoringError::Transport {
            endpoint: endpoint.clone(),
            message: e.to_string(),
            retryable: true,
        })?;
        serde_json::from_slice(&body).map_err(|e| ScoringError::Protocol {
            backend: endpoint.clone(),
            message: format!("malformed response body: {e}"),
        })
    }
}

impl Tokenizer for HttpBackend {
    fn tokenizer_id(&self) -> String {
        self.config.endpoint.clone()
    }

    /// Counted on the constituent with one leading space, as it would appear
    /// mid-sentence.
    fn count_tokens(&self, constituent: &str) -> Result<usize, ScoringError> {
        let n = self.fetch_logprobs(&format!(" {constituent}"))?.tokens.len();
        Ok(n - usize::from(self.config.bos_included && n > 0))
    }
}

impl ScoringBackend for HttpBackend {
    fn backend_id(&self) -> String {
        self.config.endpoint.clone()
    }

    fn score(&self, text: &str) -> Result<ScoredSequence, ScoringError> {
        self.fetch_logprobs(text)
    }
}
