//! Feature gating by operating mode.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::router::Strategy;
use crate::task::Mode;
use crate::topology::TopologyKind;

/// The capabilities available in a given mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub allowed_topologies: BTreeSet<TopologyKind>,
    pub max_judges: usize,
    pub allowed_strategies: Vec<Strategy>,
    pub rl_enabled: bool,
    pub simulation_enabled: bool,
}

impl FeatureSet {
    pub fn allows_topology(&self, kind: TopologyKind) -> bool {
        self.allowed_topologies.contains(&kind)
    }

    pub fn allows_strategy(&self, strategy: Strategy) -> bool {
        self.allowed_strategies.contains(&strategy)
    }
}

/// Companion topologies: the six most widely supported patterns.
pub const COMPANION_TOPOLOGIES: [TopologyKind; 6] = [
    TopologyKind::Sequential,
    TopologyKind::Parallel,
    TopologyKind::Hierarchical,
    TopologyKind::Dag,
    TopologyKind::Mixture,
    TopologyKind::Debate,
];

/// Pure function of mode: companion gets 6 topologies, 2 judges, 3
/// strategies, and no RL or simulation; power unlocks everything.
pub fn gate_features(mode: Mode) -> FeatureSet {
    match mode {
        Mode::Companion => FeatureSet {
            allowed_topologies: COMPANION_TOPOLOGIES.into_iter().collect(),
            max_judges: 2,
            allowed_strategies: vec![Strategy::Cascade, Strategy::Cheapest, Strategy::Quality],
            rl_enabled: false,
            simulation_enabled: false,
        },
        Mode::Power => FeatureSet {
            allowed_topologies: TopologyKind::ALL.into_iter().collect(),
            max_judges: 5,
            allowed_strategies: Strategy::ALL.to_vec(),
            rl_enabled: true,
            simulation_enabled: true,
        },
    }
}
