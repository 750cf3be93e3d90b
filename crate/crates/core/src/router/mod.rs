//! Three-layer model routing: an epsilon-greedy bandit picks the routing
//! strategy, the strategy picks the model, and a POMDP belief layer handles
//! selection under uncertainty. Also hosts model discovery and the resilient
//! model-call path (circuit breaker + retry).

pub mod bandit;
pub mod breaker;
pub mod call;
pub mod catalog;
pub mod pomdp;
pub mod strategies;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The five routing strategies. Order is the deterministic tie-break order
/// used by the bandit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Cascade,
    Cheapest,
    Quality,
    Balanced,
    Pomdp,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Cascade,
        Strategy::Cheapest,
        Strategy::Quality,
        Strategy::Balanced,
        Strategy::Pomdp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Cascade => "cascade",
            Strategy::Cheapest => "cheapest",
            Strategy::Quality => "quality",
            Strategy::Balanced => "balanced",
            Strategy::Pomdp => "pomdp",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown strategy: {s}"))
    }
}
