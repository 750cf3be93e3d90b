//! The resilient model-call path: retry with exponential backoff and seeded
//! jitter, guarded by the per-provider circuit breaker.

use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::breaker::BreakerMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Symmetric jitter fraction: delays scale by `1 +/- jitter_frac`.
    pub jitter_frac: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 100,
            max_delay_ms: 5_000,
            jitter_frac: 0.25,
        }
    }
}

impl RetryPolicy {
    /// Deterministic backoff before retry `attempt` (1-based count of
    /// completed attempts), without jitter: `base * 2^(attempt-1)`, capped.
    pub fn backoff_ms(&self, attempt: u32) -> u64 {
        let exp = self
            .base_delay_ms
            .saturating_mul(1u64 << (attempt - 1).min(32));
        exp.min(self.max_delay_ms)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CallError {
    #[error("circuit breaker open for provider {provider}")]
    BreakerOpen { provider: String },
    #[error("retries exhausted for provider {provider} after {attempts} attempts: {last_error}")]
    RetriesExhausted {
        provider: String,
        attempts: u32,
        last_error: String,
    },
}

/// Sleep abstraction so tests can capture delays instead of waiting.
pub trait Sleeper {
    fn sleep(&mut self, duration: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&mut self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Records requested delays; never actually sleeps.
#[derive(Default)]
pub struct RecordingSleeper {
    pub slept: Vec<Duration>,
}

impl Sleeper for RecordingSleeper {
    fn sleep(&mut self, duration: Duration) {
        self.slept.push(duration);
    }
}

/// Monotonic millisecond clock abstraction.
pub trait Clock {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Manually advanced clock for tests.
pub struct ManualClock(pub std::cell::Cell<u64>);

impl ManualClock {
    pub fn new(start: u64) -> ManualClock {
        ManualClock(std::cell::Cell::new(start))
    }
    pub fn advance(&self, ms: u64) {
        self.0.set(self.0.get() + ms);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.get()
    }
}

/// Executes `attempt` with up to `policy.max_attempts` tries. Every executor
/// failure counts against the provider's breaker; an open breaker
/// fast-rejects without invoking the executor.
pub fn call_with_retry<T>(
    provider: &str,
    breakers: &mut BreakerMap,
    policy: &RetryPolicy,
    clock: &dyn Clock,
    sleeper: &mut dyn Sleeper,
    rng: &mut ChaCha8Rng,
    mut attempt: impl FnMut(u32) -> Result<T, String>,
) -> Result<T, CallError> {
    let mut last_error = String::new();
    for try_index in 1..=policy.max_attempts {
        let now = clock.now_ms();
        if !breakers.breaker(provider).try_acquire(now) {
            return Err(CallError::BreakerOpen {
                provider: provider.to_string(),
            });
        }
        match attempt(try_index) {
            Ok(value) => {
                breakers.breaker(provider).on_success();
                return Ok(value);
            }
            Err(err) => {
                breakers.breaker(provider).on_failure(clock.now_ms());
                last_error = err;
            }
        }
        if try_index < policy.max_attempts {
            let base = policy.backoff_ms(try_index) as f64;
            let jitter = 1.0 + policy.jitter_frac * (rng.gen::<f64>() * 2.0 - 1.0);
            let delay = Duration::from_nanos((base * jitter * 1e6).max(0.0) as u64);
            sleeper.sleep(delay);
        }
    }
    Err(CallError::RetriesExhausted {
        provider: provider.to_string(),
        attempts: policy.max_attempts,
        last_error,
    })
}
