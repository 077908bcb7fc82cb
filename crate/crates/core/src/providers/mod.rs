//! Clients for remote transliteration and translation services.
//!
//! Every request goes through [`ProviderClient`], which consults the cache
//! first, batches the misses, enforces the rate limit and retries failed
//! items with exponential backoff.

mod cache;
mod http;
mod mock;

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, Cache, CacheEntry, CacheError};
pub use http::{parse_translate_response, parse_transliterate_response, HttpProvider};
pub use mock::{DictionaryProvider, EchoProvider};

pub const API_KEY_ENV: &str = "CSF_PROVIDER_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("invalid provider config: {0}")]
    Config(String),
    #[error("no inputs given")]
    EmptyInput,
    #[error("authentication rejected by provider: {0}")]
    Auth(String),
    #[error("provider failed for {} item(s) after retries: indices {failed:?}", failed.len())]
    Exhausted { failed: Vec<usize> },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub backoff_factor: f64,
    pub batch_size: usize,
    pub rate_limit: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: String::new(),
            api_key: None,
            timeout_secs: 10.0,
            max_retries: 3,
            backoff_base_secs: 0.5,
            backoff_factor: 2.0,
            batch_size: 25,
            rate_limit: 5,
        }
    }
}

impl ProviderConfig {
    /// Fills `api_key` from the environment when unset.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::Config(m.to_string()));
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad("timeout must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.rate_limit == 0 {
            return bad("rate_limit must be at least 1");
        }
        if !(self.backoff_base_secs >= 0.0 && self.backoff_factor >= 1.0) {
            return bad("backoff base must be >= 0 and factor >= 1");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Delay before retry number `attempt` (0-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_base_secs * self.backoff_factor.powi(attempt as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Service {
    Translate,
    Transliterate,
}

impl Service {
    pub fn as_str(self) -> &'static str {
        match self {
            Service::Translate => "translate",
            Service::Transliterate => "transliterate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request<'a> {
    pub service: Service,
    pub source: &'a str,
    pub target: &'a str,
}

/// Failure of a whole provider call. Per-item failures are reported as
/// `None` entries in a successful response instead.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request rejected: {0}")]
    Rejected(String),
}

pub trait Provider: Send + Sync {
    /// Identifies the backend in cache keys.
    fn kind(&self) -> &str;

    /// Returns one entry per input, `None` for items that failed.
    fn call(&self, request: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, CallError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn kind(&self) -> &str {
        (**self).kind()
    }

    fn call(&self, request: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, CallError> {
        (**self).call(request, inputs)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn kind(&self) -> &str {
        (**self).kind()
    }

    fn call(&self, request: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, CallError> {
        (**self).call(request, inputs)
    }
}

pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Virtual clock: `sleep` advances time instantly and is recorded.
#[derive(Debug, Default)]
pub struct ManualClock {
    state: Mutex<(Duration, Vec<Duration>)>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        self.state.lock().expect("clock poisoned").0 += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().expect("clock poisoned").1.clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.state.lock().expect("clock poisoned").0
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().expect("clock poisoned");
        s.0 += d;
        s.1.push(d);
    }
}

/// Sliding one-second window admitting at most `rate` calls.
#[derive(Debug)]
pub struct RateLimiter {
    rate: usize,
    window: Duration,
    issued: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(rate: u32) -> Self {
        RateLimiter { rate: rate.max(1) as usize, window: Duration::from_secs(1), issued: Mutex::new(VecDeque::new()) }
    }

    /// Blocks until a call may be issued, then records it.
    pub fn acquire(&self, clock: &dyn Clock) {
        let mut issued = self.issued.lock().expect("limiter poisoned");
        loop {
            let now = clock.now();
            while issued.front().is_some_and(|&t| t + self.window <= now) {
                issued.pop_front();
            }
            if issued.len() < self.rate {
                issued.push_back(now);
                return;
            }
            let wait = issued[0] + self.window - now;
            clock.sleep(wait);
        }
    }
}

/// Synchronous facade over a provider, a cache and a clock.
pub struct ProviderClient<'a> {
    cfg: ProviderConfig,
    provider: &'a dyn Provider,
    cache: &'a Cache,
    clock: &'a dyn Clock,
    limiter: RateLimiter,
}

impl<'a> ProviderClient<'a> {
    pub fn new(
        cfg: ProviderConfig,
        provider: &'a dyn Provider,
        cache: &'a Cache,
        clock: &'a dyn Clock,
    ) -> Result<Self, ProviderError> {
        cfg.validate()?;
        let limiter = RateLimiter::new(cfg.rate_limit);
        Ok(ProviderClient { cfg, provider, cache, clock, limiter })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn translate_sentences(&self, sentences: &[String], source: &str, target: &str) -> Result<Vec<String>, ProviderError> {
        self.run(&Request { service: Service::Translate, source, target }, sentences)
    }

    pub fn transliterate_remote(&self, words: &[String]) -> Result<Vec<String>, ProviderError> {
        self.run(&Request { service: Service::Transliterate, source: "hi-Latn", target: "hi-Deva" }, words)
    }

    /// Like [`Self::run`] but returns per-item results so callers can
    /// exclude failed items. Authentication failure is still an error.
    pub fn run_partial(&self, request: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, ProviderError> {
        if inputs.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let kind = format!("{}:{}", request.service.as_str(), self.provider.kind());
        let key_of = |text: &str| cache_key(&kind, request.source, request.target, text);

        let mut out: Vec<Option<String>> = vec![None; inputs.len()];
        // Unique uncached texts in first-occurrence order.
        let mut pending: Vec<String> = Vec::new();
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for (i, text) in inputs.iter().enumerate() {
            if text.trim().is_empty() {
                out[i] = Some(text.clone());
            } else if let Some(v) = self.cache.get(&key_of(text)) {
                out[i] = Some(v);
            } else if seen.insert(text.as_str(), ()).is_none() {
                pending.push(text.clone());
            }
        }

        let mut resolved: HashMap<String, String> = HashMap::new();
        for batch in pending.chunks(self.cfg.batch_size) {
            let mut todo: Vec<String> = batch.to_vec();
            let mut attempt = 0u32;
            loop {
                self.limiter.acquire(self.clock);
                let mut failed = Vec::new();
                match self.provider.call(request, &todo) {
                    Ok(results) if results.len() == todo.len() => {
                        for (text, result) in todo.into_iter().zip(results) {
                            match result {
                                Some(v) => {
                                    self.cache.put(&key_of(&text), &v)?;
                                    resolved.insert(text, v);
                                }
                                None => failed.push(text),
                            }
                        }
                    }
                    Ok(results) => {
                        log::warn!("provider returned {} results for {} inputs", results.len(), todo.len());
                        failed = todo;
                    }
                    Err(CallError::Auth(m)) => return Err(ProviderError::Auth(m)),
                    Err(CallError::Rejected(m)) => {
                        log::warn!("provider rejected batch: {m}");
                        break;
                    }
                    Err(CallError::Transient(m)) => {
                        log::debug!("transient provider failure: {m}");
                        failed = todo;
                    }
                }
                if failed.is_empty() || attempt >= self.cfg.max_retries {
                    break;
                }
                self.clock.sleep(self.cfg.backoff(attempt));
                attempt += 1;
                todo = failed;
            }
        }

        for (i, text) in inputs.iter().enumerate() {
            if out[i].is_none() {
                out[i] = resolved.get(text).cloned();
            }
        }
        Ok(out)
    }

    /// Resolves every input or fails with the indices left unresolved.
    pub fn run(&self, request: &Request<'_>, inputs: &[String]) -> Result<Vec<String>, ProviderError> {
        let partial = self.run_partial(request, inputs)?;
        let failed: Vec<usize> = partial.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i).collect();
        if !failed.is_empty() {
            return Err(ProviderError::Exhausted { failed });
        }
        Ok(partial.into_iter().map(|v| v.expect("checked above")).collect())
    }
}
