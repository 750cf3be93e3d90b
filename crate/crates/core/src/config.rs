//! Kernel configuration: operating mode, budgets, routing, judge panel,
//! guard thresholds, and security policy. Loaded from a TOML file; every
//! field has a sensible default so an empty config works.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::forge::ForgeConfig;
use crate::guards::goodhart::GoodhartConfig;
use crate::judge::{ConsensusAlgorithm, ModelTier, TierWeights};
use crate::orchestrator::sim::SimAssumptions;
use crate::router::breaker::BreakerConfig;
use crate::router::call::RetryPolicy;
use crate::router::Strategy;
use crate::task::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub default_budget_usd: f64,
    /// Strategy used when reinforcement learning is gated off.
    pub default_strategy: Strategy,
    /// Quality floor for the cheapest routing strategy.
    pub cheapest_quality_min: f64,
    pub steering_poll_ms: u64,
    pub pause_timeout_ms: u64,
    pub sim: SimAssumptions,
    pub forge: ForgeConfig,
    pub router: RouterConfig,
    pub judges: JudgeConfig,
    pub guards: GuardConfig,
    pub security: SecurityConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::Power,
            out_dir: PathBuf::from("runs"),
            seed: 42,
            default_budget_usd: 1.0,
            default_strategy: Strategy::Cascade,
            cheapest_quality_min: 0.5,
            steering_poll_ms: 100,
            pause_timeout_ms: 3_600_000,
            sim: SimAssumptions::default(),
            forge: ForgeConfig::default(),
            router: RouterConfig::default(),
            judges: JudgeConfig::default(),
            guards: GuardConfig::default(),
            security: SecurityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    pub ttl_seconds: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub persist_every: u64,
    /// Directory of provider fixture files; None uses the built-in catalog.
    pub fixtures_dir: Option<PathBuf>,
    /// Static model entries merged with discovery (static wins).
    pub static_models: Option<PathBuf>,
    /// Q-table snapshot location.
    pub qtable_path: Option<PathBuf>,
    pub retry: RetryPolicy,
    pub breaker: BreakerConfig,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            ttl_seconds: 3600,
            epsilon: 0.1,
            alpha: 0.1,
            persist_every: 10,
            fixtures_dir: None,
            static_models: None,
            qtable_path: None,
            retry: RetryPolicy::default(),
            breaker: BreakerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSeat {
    pub id: String,
    pub tier: ModelTier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub algorithm: ConsensusAlgorithm,
    pub quality_threshold: f64,
    pub tier_weights: TierWeights,
    pub panel: Vec<JudgeSeat>,
    pub reserves: Vec<JudgeSeat>,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            algorithm: ConsensusAlgorithm::WeightedMajority,
            quality_threshold: 0.6,
            tier_weights: TierWeights::default(),
            panel: vec![
                JudgeSeat {
                    id: "judge-frontier".into(),
                    tier: ModelTier::Frontier,
                },
                JudgeSeat {
                    id: "judge-standard".into(),
                    tier: ModelTier::Standard,
                },
                JudgeSeat {
                    id: "judge-light".into(),
                    tier: ModelTier::Lightweight,
                },
            ],
            reserves: vec![
                JudgeSeat {
                    id: "judge-reserve-1".into(),
                    tier: ModelTier::Standard,
                },
                JudgeSeat {
                    id: "judge-reserve-2".into(),
                    tier: ModelTier::Standard,
                },
                JudgeSeat {
                    id: "judge-reserve-3".into(),
                    tier: ModelTier::Standard,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardConfig {
    pub drift_theta: f64,
    pub drift_window: usize,
    /// Golden evaluation scores seeding and resetting drift references.
    pub golden_scores: Vec<f64>,
    /// Optional fixture file (JSON array of scores) overriding
    /// `golden_scores` when present.
    pub golden_file: Option<PathBuf>,
    pub goodhart: GoodhartConfig,
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig {
            drift_theta: crate::guards::drift::DRIFT_THETA,
            drift_window: crate::guards::drift::DRIFT_WINDOW,
            golden_scores: (0..50).map(|i| 0.5 + 0.4 * (i as f64 / 49.0)).collect(),
            golden_file: None,
            goodhart: GoodhartConfig::default(),
        }
    }
}

impl GuardConfig {
    /// The effective golden set: the fixture file when configured and
    /// readable, the inline scores otherwise.
    pub fn resolve_golden(&self) -> Vec<f64> {
        if let Some(path) = &self.golden_file {
            if let Ok(text) = std::fs::read_to_string(path) {
                if let Ok(scores) = serde_json::from_str::<Vec<f64>>(&text) {
                    if !scores.is_empty() {
                        return scores;
                    }
                }
            }
        }
        self.golden_scores.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SecurityConfig {
    pub blocked_patterns: Vec<String>,
}

/// Parses a TOML config file.
pub fn load_config(path: &Path) -> Result<Config, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("parse {}: {e}", path.display()))
}
