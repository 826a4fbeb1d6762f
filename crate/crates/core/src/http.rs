//! Record/replay HTTP client shared by every pipeline that talks to the
//! outside world.
//!
//! Requests are keyed by `sha256("METHOD url\nbody")`. In offline mode only
//! the replay store is consulted; in record mode misses go to the network and
//! are written back; live mode bypasses the store entirely.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub method: Method,
    pub url: String,
    pub body: Option<String>,
    /// Sent on the wire but never part of the replay key.
    pub headers: Vec<(String, String)>,
}

impl Request {
    pub fn get(url: impl Into<String>) -> Self {
        Request {
            method: Method::Get,
            url: url.into(),
            body: None,
            headers: Vec::new(),
        }
    }

    pub fn post_json(url: impl Into<String>, body: impl Into<String>) -> Self {
        Request {
            method: Method::Post,
            url: url.into(),
            body: Some(body.into()),
            headers: vec![("content-type".into(), "application/json".into())],
        }
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    pub fn replay_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.method.as_str().as_bytes());
        h.update(b" ");
        h.update(self.url.as_bytes());
        h.update(b"\n");
        h.update(self.body.as_deref().unwrap_or("").as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

impl Response {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("transport error for {url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url} returned status {status}")]
    Status { url: String, status: u16 },
    #[error("malformed response from {url}: {message} (body starts {excerpt:?})")]
    Protocol {
        url: String,
        message: String,
        excerpt: String,
    },
    #[error("replay store {path}: {message}")]
    Store { path: PathBuf, message: String },
}

impl HttpError {
    pub fn protocol(url: &str, message: impl Into<String>, body: &str) -> Self {
        HttpError::Protocol {
            url: url.to_string(),
            message: message.into(),
            excerpt: body.chars().take(120).collect(),
        }
    }

    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport { .. } => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Something that can perform a request.
pub trait Transport: Send + Sync {
    fn send(&self, req: &Request) -> Result<Response, HttpError>;
}

/// Minimum spacing between requests to the same host.
#[derive(Debug)]
struct RateLimiter {
    interval: Duration,
    last: Mutex<HashMap<String, Instant>>,
}

impl RateLimiter {
    fn new(per_second: f64) -> Self {
        let interval = if per_second > 0.0 {
            Duration::from_secs_f64(1.0 / per_second)
        } else {
            Duration::ZERO
        };
        RateLimiter {
            interval,
            last: Mutex::new(HashMap::new()),
        }
    }

    fn wait(&self, url: &str) {
        if self.interval.is_zero() {
            return;
        }
        let host = url::Url::parse(url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_default();
        let sleep = {
            let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let next = match last.get(&host) {
                Some(t) if *t + self.interval > now => *t + self.interval,
                _ => now,
            };
            last.insert(host, next);
            next - now
        };
        if !sleep.is_zero() {
            std::thread::sleep(sleep);
        }
    }
}

/// Network transport over `ureq` with a per-host politeness limit.
pub struct LiveTransport {
    agent: ureq::Agent,
    limiter: RateLimiter,
}

impl LiveTransport {
    pub fn new(timeout: Duration, requests_per_second: f64) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent("modelselect/0.1")
            .build()
            .into();
        LiveTransport {
            agent,
            limiter: RateLimiter::new(requests_per_second),
        }
    }
}

impl Transport for LiveTransport {
    fn send(&self, req: &Request) -> Result<Response, HttpError> {
        self.limiter.wait(&req.url);
        let transport = |e: ureq::Error| HttpError::Transport {
            url: req.url.clone(),
            message: e.to_string(),
        };
        let result = match req.method {
            Method::Get => {
                let mut r = self.agent.get(&req.url);
                for (k, v) in &req.headers {
                    r = r.header(k.as_str(), v.as_str());
                }
                r.call()
            }
            Method::Post => {
                let mut r = self.agent.post(&req.url);
                for (k, v) in &req.headers {
                    r = r.header(k.as_str(), v.as_str());
                }
                r.send(req.body.as_deref().unwrap_or(""))
            }
        };
        let mut resp = result.map_err(transport)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(transport)?;
        Ok(Response { status, body })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub method: Method,
    pub url: String,
    #[serde(default)]
    pub request_body: Option<String>,
    pub status: u16,
    pub body: String,
}

/// Content-addressed directory of recorded responses, one JSON file per key.
#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, req: &Request) -> Result<Option<Response>, HttpError> {
        let path = self.path(&req.replay_key());
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                return Err(HttpError::Store {
                    path,
                    message: e.to_string(),
                })
            }
        };
        let entry: ReplayEntry = serde_json::from_str(&text).map_err(|e| HttpError::Store {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok(Some(Response {
            status: entry.status,
            body: entry.body,
        }))
    }

    /// Writes through a temporary file and rename, so concurrent writers of
    /// the same key never leave a torn file behind.
    pub fn put(&self, req: &Request, resp: &Response) -> Result<(), HttpError> {
        let store_err = |path: &Path, e: std::io::Error| HttpError::Store {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        fs::create_dir_all(&self.dir).map_err(|e| store_err(&self.dir, e))?;
        let key = req.replay_key();
        let entry = ReplayEntry {
            method: req.method.clone(),
            url: req.url.clone(),
            request_body: req.body.clone(),
            status: resp.status,
            body: resp.body.clone(),
        };
        let mut text = serde_json::to_string_pretty(&entry).expect("replay entry serializes");
        text.push('\n');
        let path = self.path(&key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(|e| store_err(&tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| store_err(&tmp, e))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(|e| store_err(&path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Offline,
    Record,
    Live,
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

#[derive(Clone)]
pub struct HttpClient {
    mode: Mode,
    store: Option<ReplayStore>,
    transport: Option<Arc<dyn Transport>>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("mode", &self.mode)
            .field("store", &self.store)
            .finish()
    }
}

impl HttpClient {
    /// Replay-only client: a missing entry is a transport error.
    pub fn offline(store: ReplayStore) -> Self {
        HttpClient {
            mode: Mode::Offline,
            store: Some(store),
            transport: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn record(store: ReplayStore, transport: Arc<dyn Transport>) -> Self {
        HttpClient {
            mode: Mode::Record,
            store: Some(store),
            transport: Some(transport),
            retry: RetryPolicy::default(),
        }
    }

    pub fn live(transport: Arc<dyn Transport>) -> Self {
        HttpClient {
            mode: Mode::Live,
            store: None,
            transport: Some(transport),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Performs a request. Non-2xx statuses are returned as responses, not
    /// errors, except 429 and 5xx which are retried and then reported.
    pub fn send(&self, req: &Request) -> Result<Response, HttpError> {
        if self.mode != Mode::Live {
            if let Some(hit) = self.store.as_ref().map(|s| s.get(req)).transpose()?.flatten() {
                return Ok(hit);
            }
        }
        let Some(transport) = self.transport.as_ref().filter(|_| self.mode != Mode::Offline) else {
            return Err(HttpError::Transport {
                url: req.url.clone(),
                message: "offline mode and no replay entry".into(),
            });
        };
        let mut delay = self.retry.base_delay;
        let mut attempt = 1;
        let resp = loop {
            let result = transport.send(req).and_then(|r| {
                if r.status == 429 || r.status >= 500 {
                    Err(HttpError::Status {
                        url: req.url.clone(),
                        status: r.status,
                    })
                } else {
                    Ok(r)
                }
            });
            match result {
                Ok(r) => break r,
                Err(e) if e.retryable() && attempt < self.retry.attempts.max(1) => {
                    tracing::warn!(url = %req.url, attempt, error = %e, "retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        if self.mode == Mode::Record {
            if let Some(store) = &self.store {
                store.put(req, &resp)?;
            }
        }
        Ok(resp)
    }

    pub fn get(&self, url: &str) -> Result<Response, HttpError> {
        self.send(&Request::get(url))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Transport that fails `failures` times before answering.
    pub struct Flaky {
        pub failures: usize,
        pub calls: AtomicUsize,
        pub status: u16,
    }

    impl Transport for Flaky {
        fn send(&self, req: &Request) -> Result<Response, HttpError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(HttpError::Transport {
                    url: req.url.clone(),
                    message: "connection reset".into(),
                })
            } else {
                Ok(Response {
                    status: self.status,
                    body: format!("{} {}", req.method.as_str(), req.url),
                })
            }
        }
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
        }
    }

    #[test]
    fn key_ignores_headers() {
        let a = Request::get("https://x.org/a");
        let b = Request::get("https://x.org/a").header("authorization", "Bearer t");
        assert_eq!(a.replay_key(), b.replay_key());
        assert_ne!(a.replay_key(), Request::post_json("https://x.org/a", "{}").replay_key());
    }

    #[test]
    fn record_then_offline_replays() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::new(dir.path());
        let t = Arc::new(Flaky { failures: 0, calls: AtomicUsize::new(0), status: 200 });
        let rec = HttpClient::record(store.clone(), t.clone()).with_retry(fast());
        let first = rec.get("https://x.org/a").unwrap();
        let again = rec.get("https://x.org/a").unwrap();
        assert_eq!(first, again);
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
        let off = HttpClient::offline(store);
        assert_eq!(off.get("https://x.org/a").unwrap(), first);
        assert!(matches!(off.get("https://x.org/b"), Err(HttpError::Transport { .. })));
    }

    #[test]
    fn retries_three_times() {
        let t = Arc::new(Flaky { failures: 2, calls: AtomicUsize::new(0), status: 200 });
        let c = HttpClient::live(t.clone()).with_retry(fast());
        assert!(c.get("https://x.org/").is_ok());
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);

        let t = Arc::new(Flaky { failures: 3, calls: AtomicUsize::new(0), status: 200 });
        let c = HttpClient::live(t.clone()).with_retry(fast());
        assert!(matches!(c.get("https://x.org/"), Err(HttpError::Transport { .. })));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn server_errors_are_retried_then_reported() {
        let t = Arc::new(Flaky { failures: 0, calls: AtomicUsize::new(0), status: 503 });
        let c = HttpClient::live(t.clone()).with_retry(fast());
        assert!(matches!(c.get("https://x.org/"), Err(HttpError::Status { status: 503, .. })));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn not_found_is_a_response() {
        let t = Arc::new(Flaky { failures: 0, calls: AtomicUsize::new(0), status: 404 });
        let c = HttpClient::live(t).with_retry(fast());
        assert_eq!(c.get("https://x.org/").unwrap().status, 404);
    }
}
