//! Epsilon-greedy contextual bandit over routing strategies.
//!
//! With a discount of zero the Q-update degenerates to a per-state running
//! estimate of strategy reward, which is exactly what strategy selection
//! needs. Updates are clamped by the trilemma guard so no single episode can
//! move a Q value by more than the configured cap.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Strategy;
use crate::guards::trilemma::clamp_q_delta;
use crate::task::TaskType;
use crate::usd::Usd;

/// Discount factor; fixed at zero (contextual bandit).
pub const GAMMA: f64 = 0.0;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_PERSIST_EVERY: u64 = 10;

/// Renders the bandit state key: `<taskType>_<modelCountBucket>_<budgetClass>`.
pub fn encode_state(task_type: TaskType, model_count: usize, budget: Usd) -> String {
    let bucket = if model_count <= 3 {
        "small"
    } else if model_count <= 10 {
        "medium"
    } else {
        "large"
    };
    let class = if budget < Usd::from_dollars(0.01) {
        "micro"
    } else if budget < Usd::from_dollars(0.10) {
        "small"
    } else if budget < Usd::from_dollars(1.0) {
        "standard"
    } else {
        "large"
    };
    format!("{}_{}_{}", task_type.as_str(), bucket, class)
}

/// Result of one Q update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QUpdate {
    pub old: f64,
    pub raw_delta: f64,
    pub applied_delta: f64,
    pub new: f64,
    pub clamped: bool,
    /// True every `persist_every` episodes: time to snapshot the table.
    pub persist_due: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QTable {
    q: BTreeMap<String, BTreeMap<Strategy, f64>>,
    pub episode_count: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub persist_every: u64,
}

impl Default for QTable {
    fn default() -> Self {
        QTable {
            q: BTreeMap::new(),
            episode_count: 0,
            alpha: DEFAULT_ALPHA,
            epsilon: DEFAULT_EPSILON,
            persist_every: DEFAULT_PERSIST_EVERY,
        }
    }
}

impl QTable {
    pub fn new(alpha: f64, epsilon: f64) -> QTable {
        QTable {
            alpha,
            epsilon,
            ..Default::default()
        }
    }

    pub fn q(&self, state: &str, strategy: Strategy) -> f64 {
        self.q
            .get(state)
            .and_then(|row| row.get(&strategy))
            .copied()
            .unwrap_or(0.0)
    }

    /// Epsilon-greedy selection restricted to `allowed`. Greedy ties break
    /// by the fixed strategy order (cascade, cheapest, quality, balanced,
    /// pomdp).
    pub fn select(&self, state: &str, allowed: &[Strategy], rng: &mut impl Rng) -> Strategy {
        assert!(!allowed.is_empty(), "allowed strategies must be non-empty");
        if self.epsilon > 0.0 && rng.gen::<f64>() < self.epsilon {
            return allowed[rng.gen_range(0..allowed.len())];
        }
        self.greedy(state, allowed)
    }

    /// Pure argmax over allowed strategies with deterministic tie-break.
    pub fn greedy(&self, state: &str, allowed: &[Strategy]) -> Strategy {
        let mut best: Option<(Strategy, f64)> = None;
        for strategy in Strategy::ALL {
            if !allowed.contains(&strategy) {
                continue;
            }
            let value = self.q(state, strategy);
            match best {
                Some((_, best_value)) if value <= best_value => {}
                _ => best = Some((strategy, value)),
            }
        }
        best.expect("allowed non-empty").0
    }

    /// Applies the clamped bandit update `Q += clamp(alpha * (reward - Q))`.
    pub fn update(&mut self, state: &str, strategy: Strategy, reward: f64) -> QUpdate {
        let old = self.q(state, strategy);
        let raw_delta = self.alpha * (reward - old);
        let applied_delta = clamp_q_delta(raw_delta);
        let new = old + applied_delta;
        self.q
            .entry(state.to_string())
            .or_default()
            .insert(strategy, new);
        self.episode_count += 1;
        QUpdate {
            old,
            raw_delta,
            applied_delta,
            new,
            clamped: applied_delta != raw_delta,
            persist_due: self.persist_every > 0
                && self.episode_count.is_multiple_of(self.persist_every),
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let text = serde_json::to_string_pretty(self).expect("qtable serializes");
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> Result<QTable, String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }
}
