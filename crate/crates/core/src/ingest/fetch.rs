//! Polite HTTP fetching with retries, exponential backoff and per-host spacing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use super::robots::RobotsRules;
use super::{FetchError, IngestError};

pub const USER_AGENT: &str = concat!("statelaw/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchPolicy {
    pub max_retries: u32,
    /// Milliseconds before the first retry.
    pub base_backoff: u64,
    pub backoff_factor: f64,
    /// Minimum milliseconds between two requests to the same host.
    pub per_host_delay: u64,
    pub request_timeout: u64,
    pub respect_robots: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            max_retries: 3,
            base_backoff: 500,
            backoff_factor: 2.0,
            per_host_delay: 1000,
            request_timeout: 30_000,
            respect_robots: true,
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.base_backoff == 0 {
            return Err(IngestError::InvalidPolicy("base_backoff must be > 0".into()));
        }
        if !(self.backoff_factor >= 1.0 && self.backoff_factor.is_finite()) {
            return Err(IngestError::InvalidPolicy("backoff_factor must be >= 1".into()));
        }
        if self.request_timeout == 0 {
            return Err(IngestError::InvalidPolicy("request_timeout must be > 0".into()));
        }
        Ok(())
    }

    /// Wait before retry number `retry` (0-based): `base * factor^retry`.
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.base_backoff as f64 * self.backoff_factor.powi(retry as i32);
        Duration::from_secs_f64(ms / 1000.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub url: String,
    pub body: String,
    pub fetched_at: DateTime<Utc>,
    pub status: u16,
}

/// Reserves request slots per host so that requests to one host are at
/// least `spacing` apart, across threads.
#[derive(Debug, Default)]
pub struct HostThrottle {
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostThrottle {
    pub fn wait_turn(&self, host: &str, spacing: Duration) {
        let now = Instant::now();
        let slot = {
            let mut slots = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let slot = slots.get(host).copied().filter(|s| *s > now).unwrap_or(now);
            slots.insert(host.to_string(), slot + spacing);
            slot
        };
        let wait = slot.saturating_duration_since(Instant::now());
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

enum Failure {
    Status(u16),
    Timeout,
    Transport(String),
}

fn is_transient(status: u16) -> bool {
    status == 429 || (500..=599).contains(&status)
}

/// One crawling session: shared cookie jar, host throttle and robots cache.
/// Safe to share between threads.
pub struct Fetcher {
    client: reqwest::blocking::Client,
    policy: FetchPolicy,
    throttle: Arc<HostThrottle>,
    robots: Mutex<HashMap<String, RobotsRules>>,
}

impl Fetcher {
    pub fn new(policy: FetchPolicy) -> Result<Self, IngestError> {
        policy.validate()?;
        let client = reqwest::blocking::Client::builder()
            .cookie_store(true)
            .user_agent(USER_AGENT)
            .timeout(Duration::from_millis(policy.request_timeout))
            .build()
            .map_err(|e| IngestError::InvalidPolicy(e.to_string()))?;
        Ok(Fetcher {
            client,
            policy,
            throttle: Arc::new(HostThrottle::default()),
            robots: Mutex::new(HashMap::new()),
        })
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    fn spacing(&self) -> Duration {
        Duration::from_millis(self.policy.per_host_delay)
    }

    fn host_key(url: &Url) -> String {
        format!("{}:{}", url.host_str().unwrap_or(""), url.port_or_known_default().unwrap_or(0))
    }

    fn robots_for(&self, url: &Url) -> RobotsRules {
        let key = Self::host_key(url);
        if let Some(r) = self.robots.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return r.clone();
        }
        let mut robots_url = url.clone();
        robots_url.set_path("/robots.txt");
        robots_url.set_query(None);
        self.throttle.wait_turn(&key, self.spacing());
        let rules = match self.client.get(robots_url).send() {
            Ok(resp) if resp.status().is_success() => resp.text().map(|body| RobotsRules::parse(&body, USER_AGENT)).unwrap_or_default(),
            _ => RobotsRules::allow_all(),
        };
        self.robots.lock().unwrap_or_else(|e| e.into_inner()).insert(key, rules.clone());
        rules
    }

    /// GET with retries on timeouts, transport errors, 429 and 5xx. Other
    /// statuses (including 4xx) are returned as documents. At most
    /// `1 + max_retries` requests are sent to `url`.
    pub fn fetch(&self, url: &str) -> Result<RawDocument, FetchError> {
        let parsed = Url::parse(url).map_err(|e| FetchError::BadUrl(format!("{url}: {e}")))?;
        if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
            return Err(FetchError::BadUrl(url.to_string()));
        }
        if self.policy.respect_robots && !self.robots_for(&parsed).allows(parsed.path()) {
            return Err(FetchError::RobotsDisallowed(url.to_string()));
        }
        let key = Self::host_key(&parsed);
        let attempts = self.policy.max_retries + 1;
        let mut failures = Vec::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.policy.backoff(attempt - 1));
            }
            self.throttle.wait_turn(&key, self.spacing());
            match self.client.get(parsed.clone()).send() {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    if is_transient(status) {
                        log::debug!("{url}: attempt {} got {status}", attempt + 1);
                        failures.push(Failure::Status(status));
                        continue;
                    }
                    let body = resp.text().map_err(|e| FetchError::Transport(e.to_string()))?;
                    return Ok(RawDocument {
                        url: url.to_string(),
                        body,
                        fetched_at: Utc::now(),
                        status,
                    });
                }
                Err(e) if e.is_timeout() => failures.push(Failure::Timeout),
                Err(e) => failures.push(Failure::Transport(e.to_string())),
            }
        }
        if failures.iter().all(|f| matches!(f, Failure::Timeout)) {
            return Err(FetchError::Timeout {
                url: url.to_string(),
                attempts,
            });
        }
        let last = match failures.last() {
            Some(Failure::Status(s)) => format!("status {s}"),
            Some(Failure::Timeout) => "timeout".to_string(),
            Some(Failure::Transport(m)) => m.clone(),
            None => String::new(),
        };
        Err(FetchError::ExhaustedRetries {
            url: url.to_string(),
            attempts,
            last,
        })
    }
}

/// One-shot fetch with a fresh session.
pub fn fetch_with_retry(url: &str, policy: &FetchPolicy) -> Result<RawDocument, FetchError> {
    Fetcher::new(policy.clone())
        .map_err(|e| FetchError::Transport(e.to_string()))?
        .fetch(url)
}
