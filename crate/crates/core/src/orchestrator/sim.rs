//! Pre-execution cost simulation (power mode only): a dry-run estimate from
//! assumed tokens per turn, expected rounds per topology, and catalog rates.

use serde::{Deserialize, Serialize};

use crate::mode::FeatureSet;
use crate::router::catalog::Catalog;
use crate::task::TeamDesign;
use crate::topology::{effective_max_rounds, TopologyKind};
use crate::usd::Usd;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimAssumptions {
    pub tokens_in_per_turn: u64,
    pub tokens_out_per_turn: u64,
}

impl Default for SimAssumptions {
    fn default() -> Self {
        SimAssumptions {
            tokens_in_per_turn: 500,
            tokens_out_per_turn: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub per_agent: Vec<(String, Usd)>,
    pub total: Usd,
    pub expected_rounds_per_agent: u32,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("simulation is gated off in the active mode")]
    FeatureGated,
    #[error("unknown model: {0}")]
    UnknownModel(String),
}

/// Rounds each agent is expected to participate in: one for the single-pass
/// topologies, the round cap for the iterative ones (conservative).
pub fn expected_rounds_per_agent(design: &TeamDesign) -> u32 {
    match design.topology {
        TopologyKind::Sequential
        | TopologyKind::Parallel
        | TopologyKind::Dag
        | TopologyKind::Mixture
        | TopologyKind::Forest => 1,
        _ => effective_max_rounds(design),
    }
}

/// Dry-run cost estimate; no executor calls.
pub fn simulate(
    design: &TeamDesign,
    catalog: &Catalog,
    features: &FeatureSet,
    assumptions: &SimAssumptions,
) -> Result<CostEstimate, SimError> {
    if !features.simulation_enabled {
        return Err(SimError::FeatureGated);
    }
    let rounds = expected_rounds_per_agent(design);
    let mut per_agent = Vec::new();
    let mut total = Usd::ZERO;
    for agent in &design.agents {
        let model = catalog
            .get(&agent.model_id)
            .ok_or_else(|| SimError::UnknownModel(agent.model_id.clone()))?;
        let per_round = Usd::token_cost(assumptions.tokens_in_per_turn, model.input_rate)
            + Usd::token_cost(assumptions.tokens_out_per_turn, model.output_rate);
        let cost = per_round * rounds;
        total += cost;
        per_agent.push((agent.name.clone(), cost));
    }
    Ok(CostEstimate {
        per_agent,
        total,
        expected_rounds_per_agent: rounds,
    })
}
