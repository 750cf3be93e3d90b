//! Per-provider circuit breakers.
//!
//! A breaker opens after `failure_threshold` consecutive failures and
//! fast-rejects calls until `reset_ms` elapses, at which point a single
//! half-open trial decides whether to close or reopen.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakerConfig {
    pub failure_threshold: u32,
    pub reset_ms: u64,
}

impl Default for BreakerConfig {
    fn default() -> Self {
        BreakerConfig {
            failure_threshold: 5,
            reset_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakerPhase {
    Closed,
    Open,
    HalfOpen,
}

#[derive(Debug, Clone)]
pub struct Breaker {
    config: BreakerConfig,
    phase: BreakerPhase,
    consecutive_failures: u32,
    opened_at_ms: u64,
}

impl Breaker {
    pub fn new(config: BreakerConfig) -> Breaker {
        Breaker {
            config,
            phase: BreakerPhase::Closed,
            consecutive_failures: 0,
            opened_at_ms: 0,
        }
    }

    pub fn phase(&self) -> BreakerPhase {
        self.phase
    }

    pub fn consecutive_failures(&self) -> u32 {
        self.consecutive_failures
    }

    /// True when a call may proceed. An open breaker transitions to
    /// half-open once the reset window has elapsed, admitting one trial.
    pub fn try_acquire(&mut self, now_ms: u64) -> bool {
        match self.phase {
            BreakerPhase::Closed | BreakerPhase::HalfOpen => true,
            BreakerPhase::Open => {
                if now_ms.saturating_sub(self.opened_at_ms) >= self.config.reset_ms {
                    self.phase = BreakerPhase::HalfOpen;
                    true
                } else {
                    false
                }
            }
        }
    }

    pub fn on_success(&mut self) {
        self.phase = BreakerPhase::Closed;
        self.consecutive_failures = 0;
    }

    pub fn on_failure(&mut self, now_ms: u64) {
        self.consecutive_failures += 1;
        let trip = self.phase == BreakerPhase::HalfOpen
            || self.consecutive_failures >= self.config.failure_threshold;
        if trip {
            self.phase = BreakerPhase::Open;
            self.opened_at_ms = now_ms;
        }
    }
}

/// Breakers keyed by provider name.
pub struct BreakerMap {
    config: BreakerConfig,
    breakers: BTreeMap<String, Breaker>,
}

impl BreakerMap {
    pub fn new(config: BreakerConfig) -> BreakerMap {
        BreakerMap {
            config,
            breakers: BTreeMap::new(),
        }
    }

    pub fn breaker(&mut self, provider: &str) -> &mut Breaker {
        let config = self.config;
        self.breakers
            .entry(provider.to_string())
            .or_insert_with(|| Breaker::new(config))
    }

    pub fn phase(&self, provider: &str) -> BreakerPhase {
        self.breakers
            .get(provider)
            .map(|b| b.phase())
            .unwrap_or(BreakerPhase::Closed)
    }
}
