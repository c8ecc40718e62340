//! Blocking JSON-over-HTTP with the shared retry policy.

use std::thread;
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    /// Connection, timeout or body-read failure. Retried.
    #[error("transport error: {0}")]
    Transport(String),
    /// The server answered with a non-success status. Not retried.
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
}

impl HttpError {
    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Transport(_))
    }
}

/// Exponential backoff: delays are `base`, `2*base`, `4*base`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// attempts are exhausted. `op` receives the 0-based attempt number.
    pub fn run<T, E>(
        &self,
        retryable: impl Fn(&E) -> bool,
        mut op: impl FnMut(u32) -> Result<T, E>,
    ) -> Result<T, E> {
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if retryable(&e) && attempt + 1 < self.attempts.max(1) => {
                    attempt += 1;
                    let d = self.delay_before(attempt);
                    log::warn!("attempt {attempt} failed, retrying in {d:?}");
                    thread::sleep(d);
                }
                Err(e) => return Err(e),
            }
        }
    }
}

pub struct JsonClient {
    client: reqwest::blocking::Client,
    pub retry: RetryPolicy,
}

impl JsonClient {
    pub fn new(timeout: Duration) -> Result<Self, HttpError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| HttpError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            retry: RetryPolicy::default(),
        })
    }

    pub fn post(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value, HttpError> {
        self.retry.run(HttpError::is_transport, |_| {
            let mut req = self.client.post(url).json(body);
            if let Some(key) = bearer {
                req = req.bearer_auth(key);
            }
            let resp = req
                .send()
                .map_err(|e| HttpError::Transport(e.to_string()))?;
            let status = resp.status();
            let text = resp
                .text()
                .map_err(|e| HttpError::Transport(e.to_string()))?;
            if !status.is_success() {
                return Err(HttpError::Status {
                    status: status.as_u16(),
                    body: text,
                });
            }
            serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
        })
    }
}
