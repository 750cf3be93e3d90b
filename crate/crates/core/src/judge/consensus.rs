//! The three consensus algorithms and Shannon-entropy disagreement.

use serde::{Deserialize, Serialize};

use super::score::{JudgeScore, ModelTier, Vote};

/// Shannon entropy in bits with the 0 log 0 = 0 convention. Input must be a
/// probability vector.
pub fn entropy_bits(dist: &[f64]) -> f64 {
    debug_assert!(
        (dist.iter().sum::<f64>() - 1.0).abs() < 1e-9 && dist.iter().all(|&p| p >= 0.0),
        "entropy over a non-distribution"
    );
    dist.iter()
        .map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 })
        .sum()
}

/// Vote weights by model capability tier, normalized at use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierWeights {
    pub frontier: f64,
    pub standard: f64,
    pub lightweight: f64,
}

impl Default for TierWeights {
    fn default() -> Self {
        TierWeights {
            frontier: 1.0,
            standard: 0.6,
            lightweight: 0.3,
        }
    }
}

impl TierWeights {
    pub fn weight(&self, tier: ModelTier) -> f64 {
        match tier {
            ModelTier::Frontier => self.frontier,
            ModelTier::Standard => self.standard,
            ModelTier::Lightweight => self.lightweight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusAlgorithm {
    WeightedMajority,
    Bft,
    Raft,
}

impl std::str::FromStr for ConsensusAlgorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted_majority" => Ok(ConsensusAlgorithm::WeightedMajority),
            "bft" => Ok(ConsensusAlgorithm::Bft),
            "raft" => Ok(ConsensusAlgorithm::Raft),
            other => Err(format!("unknown consensus algorithm: {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub decision: Vote,
    pub algorithm: ConsensusAlgorithm,
    /// Disagreement entropy in bits over the vote distribution.
    pub entropy_bits: f64,
    /// Scalar quality consensus: tier-weighted mean of weighted totals for
    /// weighted majority, plain mean for BFT and Raft.
    pub score: f64,
    pub per_judge: Vec<JudgeScore>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConsensusError {
    #[error("consensus requires at least one judge")]
    NoJudges,
    #[error("BFT consensus requires at least 3 judges, got {0}")]
    BftRequiresThree(usize),
}

fn vote_counts(scores: &[JudgeScore]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for score in scores {
        let idx = Vote::ALL.iter().position(|v| *v == score.vote).unwrap();
        counts[idx] += 1;
    }
    counts
}

fn count_entropy(scores: &[JudgeScore]) -> f64 {
    let counts = vote_counts(scores);
    let n = scores.len() as f64;
    let dist: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    entropy_bits(&dist)
}

fn mean_total(scores: &[JudgeScore]) -> f64 {
    scores.iter().map(|s| s.weighted_total).sum::<f64>() / scores.len() as f64
}

/// Votes weighted by tier and normalized; the approve mass decides:
/// approve above 0.5, revise in [0.3, 0.5], reject below 0.3.
pub fn consensus_weighted_majority(
    scores: &[JudgeScore],
    weights: &TierWeights,
) -> Result<ConsensusResult, ConsensusError> {
    if scores.is_empty() {
        return Err(ConsensusError::NoJudges);
    }
    let total_weight: f64 = scores.iter().map(|s| weights.weight(s.tier)).sum();
    let mut mass = [0.0f64; 3];
    let mut weighted_score = 0.0;
    for score in scores {
        let w = weights.weight(score.tier) / total_weight;
        let idx = Vote::ALL.iter().position(|v| *v == score.vote).unwrap();
        mass[idx] += w;
        weighted_score += w * score.weighted_total;
    }
    let approve_mass = mass[0];
    let decision = if approve_mass > 0.5 {
        Vote::Approve
    } else if approve_mass >= 0.3 {
        Vote::Revise
    } else {
        Vote::Reject
    };
    Ok(ConsensusResult {
        decision,
        algorithm: ConsensusAlgorithm::WeightedMajority,
        entropy_bits: entropy_bits(&mass),
        score: weighted_score,
        per_judge: scores.to_vec(),
    })
}

/// Requires floor(2n/3) + 1 agreement among n >= 3 judges; without a
/// supermajority the decision falls back to revise.
pub fn consensus_bft(scores: &[JudgeScore]) -> Result<ConsensusResult, ConsensusError> {
    let n = scores.len();
    if n < 3 {
        return Err(ConsensusError::BftRequiresThree(n));
    }
    let needed = (2 * n) / 3 + 1;
    let counts = vote_counts(scores);
    let decision = Vote::ALL
        .iter()
        .zip(counts)
        .find(|(_, count)| *count >= needed)
        .map(|(vote, _)| *vote)
        .unwrap_or(Vote::Revise);
    Ok(ConsensusResult {
        decision,
        algorithm: ConsensusAlgorithm::Bft,
        entropy_bits: count_entropy(scores),
        score: mean_total(scores),
        per_judge: scores.to_vec(),
    })
}

/// The first judge leads; a unique plurality of votes wins, and any tie
/// resolves to the leader's verdict.
pub fn consensus_raft(scores: &[JudgeScore]) -> Result<ConsensusResult, ConsensusError> {
    if scores.is_empty() {
        return Err(ConsensusError::NoJudges);
    }
    let counts = vote_counts(scores);
    let max = *counts.iter().max().unwrap();
    let leaders: Vec<Vote> = Vote::ALL
        .iter()
        .zip(counts)
        .filter(|(_, count)| *count == max)
        .map(|(vote, _)| *vote)
        .collect();
    let decision = if leaders.len() == 1 {
        leaders[0]
    } else {
        scores[0].vote
    };
    Ok(ConsensusResult {
        decision,
        algorithm: ConsensusAlgorithm::Raft,
        entropy_bits: count_entropy(scores),
        score: mean_total(scores),
        per_judge: scores.to_vec(),
    })
}

pub fn run_consensus(
    algorithm: ConsensusAlgorithm,
    scores: &[JudgeScore],
    weights: &TierWeights,
) -> Result<ConsensusResult, ConsensusError> {
    match algorithm {
        ConsensusAlgorithm::WeightedMajority => consensus_weighted_majority(scores, weights),
        ConsensusAlgorithm::Bft => consensus_bft(scores),
        ConsensusAlgorithm::Raft => consensus_raft(scores),
    }
}
