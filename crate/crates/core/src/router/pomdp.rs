//! Bayesian belief-state model selection over three hidden context-quality
//! states. The belief is guarded by a floor and ceiling so it can never
//! collapse onto a single state or vanish entirely.

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, ModelInfo};
use super::strategies::cost_norm;

pub const STATE_COUNT: usize = 3;
pub const BELIEF_FLOOR: f64 = 0.01;
pub const BELIEF_CEILING: f64 = 0.98;
/// Weight of the cost penalty in the selection objective.
pub const COST_PENALTY_WEIGHT: f64 = 0.3;

/// Hidden context-quality states, indexed low = 0, medium = 1, high = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HiddenState {
    Low,
    Medium,
    High,
}

impl HiddenState {
    pub const ALL: [HiddenState; 3] = [HiddenState::Low, HiddenState::Medium, HiddenState::High];
}

/// Observable outcomes of a routed call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    SuccessHighScore,
    SuccessLowScore,
    Failure,
}

impl Observation {
    fn index(self) -> usize {
        match self {
            Observation::SuccessHighScore => 0,
            Observation::SuccessLowScore => 1,
            Observation::Failure => 2,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PomdpError {
    #[error("belief must have {STATE_COUNT} nonnegative components summing to 1")]
    InvalidBelief,
    #[error("observation model rows must be distributions over observations per state")]
    InvalidObservationModel,
    #[error("observation likelihood is zero in every state")]
    DegenerateObservation,
    #[error("catalog is empty")]
    EmptyCatalog,
}

/// P(observation | state): `p[obs][state]`. Each state's distribution over
/// observations sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    p: [[f64; STATE_COUNT]; 3],
}

impl ObservationModel {
    pub fn new(p: [[f64; STATE_COUNT]; 3]) -> Result<ObservationModel, PomdpError> {
        // Columns are indexed by state: each state's distribution over
        // observations must be valid.
        #[allow(clippy::needless_range_loop)]
        for state in 0..STATE_COUNT {
            let sum: f64 = (0..3).map(|obs| p[obs][state]).sum();
            if (sum - 1.0).abs() > 1e-9 || (0..3).any(|obs| p[obs][state] < 0.0) {
                return Err(PomdpError::InvalidObservationModel);
            }
        }
        Ok(ObservationModel { p })
    }

    pub fn likelihood(&self, obs: Observation, state: usize) -> f64 {
        self.p[obs.index()][state]
    }
}

impl Default for ObservationModel {
    /// Monotone-in-quality default: better hidden states make high-score
    /// successes more likely and failures less likely.
    fn default() -> Self {
        ObservationModel {
            p: [
                [0.1, 0.4, 0.8],  // success-high-score
                [0.4, 0.4, 0.15], // success-low-score
                [0.5, 0.2, 0.05], // failure
            ],
        }
    }
}

/// Probability distribution over the three hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    p: [f64; STATE_COUNT],
}

impl Belief {
    pub fn uniform() -> Belief {
        Belief {
            p: [1.0 / 3.0; STATE_COUNT],
        }
    }

    pub fn new(p: [f64; STATE_COUNT]) -> Result<Belief, PomdpError> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(PomdpError::InvalidBelief);
        }
        Ok(Belief { p })
    }

    pub fn probs(&self) -> [f64; STATE_COUNT] {
        self.p
    }

    /// Bayes update `b'(s) = P(obs|s) b(s) / Z` followed by the floor/ceiling
    /// guard. The guard redistributes mass among unclamped components until
    /// every component lies in [floor, ceiling] and the belief sums to 1.
    pub fn update(&self, obs: Observation, model: &ObservationModel) -> Result<Belief, PomdpError> {
        let mut post = [0.0; STATE_COUNT];
        let mut sum = 0.0;
        for (state, slot) in post.iter_mut().enumerate() {
            *slot = model.likelihood(obs, state) * self.p[state];
            sum += *slot;
        }
        if sum <= 0.0 {
            return Err(PomdpError::DegenerateObservation);
        }
        for value in &mut post {
            *value /= sum;
        }
        Ok(Belief {
            p: guard(post, BELIEF_FLOOR, BELIEF_CEILING),
        })
    }
}

/// Clamps components to [floor, ceiling] and renormalizes the remaining free
/// mass, iterating until stable so the bounds hold in the final belief.
fn guard(mut p: [f64; STATE_COUNT], floor: f64, ceiling: f64) -> [f64; STATE_COUNT] {
    for _ in 0..8 {
        let mut fixed_mass = 0.0;
        let mut free_mass = 0.0;
        let mut clamped = [false; STATE_COUNT];
        for (i, value) in p.iter_mut().enumerate() {
            if *value < floor {
                *value = floor;
                clamped[i] = true;
            } else if *value > ceiling {
                *value = ceiling;
                clamped[i] = true;
            }
            if clamped[i] {
                fixed_mass += *value;
            } else {
                free_mass += *value;
            }
        }
        let target = 1.0 - fixed_mass;
        if free_mass <= 0.0 {
            // Everything clamped: distribute the residual evenly.
            let residual = (1.0 - fixed_mass) / STATE_COUNT as f64;
            for value in &mut p {
                *value += residual;
            }
        } else {
            let scale = target / free_mass;
            for (i, value) in p.iter_mut().enumerate() {
                if !clamped[i] {
                    *value *= scale;
                }
            }
        }
        let in_bounds = p
            .iter()
            .all(|&x| x >= floor - 1e-12 && x <= ceiling + 1e-12);
        let sum: f64 = p.iter().sum();
        if in_bounds && (sum - 1.0).abs() <= 1e-12 {
            break;
        }
    }
    p
}

/// Expected reward per (model, hidden state), each in [0, 1].
pub trait RewardModel {
    fn reward(&self, model: &ModelInfo, state: usize) -> f64;
}

/// Default reward model: the model's quality score scaled by how favorable
/// the hidden context state is.
#[derive(Debug, Clone)]
pub struct QualityScaledReward {
    pub state_factor: [f64; STATE_COUNT],
}

impl Default for QualityScaledReward {
    fn default() -> Self {
        QualityScaledReward {
            state_factor: [0.5, 0.75, 1.0],
        }
    }
}

impl RewardModel for QualityScaledReward {
    fn reward(&self, model: &ModelInfo, state: usize) -> f64 {
        (model.quality_score * self.state_factor[state]).clamp(0.0, 1.0)
    }
}

/// Reward model backed by an explicit per-model table; useful in tests.
pub struct TableReward(pub std::collections::BTreeMap<String, [f64; STATE_COUNT]>);

impl RewardModel for TableReward {
    fn reward(&self, model: &ModelInfo, state: usize) -> f64 {
        self.0
            .get(&model.model_id)
            .map(|row| row[state])
            .unwrap_or(0.0)
    }
}

/// Selects `argmax_m sum_s b(s) reward(m, s) - 0.3 * cost_norm(m)`,
/// ties broken by model id.
pub fn route_pomdp<'a>(
    belief: &Belief,
    catalog: &'a Catalog,
    rewards: &dyn RewardModel,
) -> Result<&'a ModelInfo, PomdpError> {
    if catalog.is_empty() {
        return Err(PomdpError::EmptyCatalog);
    }
    let norms = cost_norm(catalog);
    catalog
        .models()
        .map(|m| {
            let expected: f64 = (0..STATE_COUNT)
                .map(|s| belief.p[s] * rewards.reward(m, s))
                .sum();
            (m, expected - COST_PENALTY_WEIGHT * norms[&m.model_id])
        })
        .max_by(|(a, sa), (b, sb)| {
            sa.partial_cmp(sb)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.model_id.as_str().cmp(a.model_id.as_str()))
        })
        .map(|(m, _)| m)
        .ok_or(PomdpError::EmptyCatalog)
}
