//! Per-judge scoring against a weighted criteria profile.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::profile::JudgeProfile;

/// Model capability tier; drives the weighted-majority vote weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTier {
    Frontier,
    Standard,
    Lightweight,
}

impl FromStr for ModelTier {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frontier" => Ok(ModelTier::Frontier),
            "standard" => Ok(ModelTier::Standard),
            "lightweight" => Ok(ModelTier::Lightweight),
            other => Err(format!("unknown tier: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    Approve,
    Revise,
    Reject,
}

impl Vote {
    pub const ALL: [Vote; 3] = [Vote::Approve, Vote::Revise, Vote::Reject];

    pub fn as_str(self) -> &'static str {
        match self {
            Vote::Approve => "approve",
            Vote::Revise => "revise",
            Vote::Reject => "reject",
        }
    }
}

/// Vote bands over the weighted total: approve at >= 0.7, revise in
/// [0.4, 0.7), reject below 0.4.
pub fn vote_for_total(total: f64) -> Vote {
    if total >= 0.7 {
        Vote::Approve
    } else if total >= 0.4 {
        Vote::Revise
    } else {
        Vote::Reject
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub judge_id: String,
    pub tier: ModelTier,
    pub per_criterion: BTreeMap<String, f64>,
    pub weighted_total: f64,
    pub vote: Vote,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("judge {judge}: missing score for criterion {criterion}")]
    MissingCriterion { judge: String, criterion: String },
    #[error("judge {judge} failed: {reason}")]
    JudgeFailed { judge: String, reason: String },
}

/// Builds an internally consistent score: the weighted total is the
/// profile-weighted sum of criterion scores and the vote follows the bands.
pub fn score_output(
    judge_id: &str,
    tier: ModelTier,
    per_criterion: &BTreeMap<String, f64>,
    confidence: f64,
    profile: &JudgeProfile,
) -> Result<JudgeScore, JudgeError> {
    let mut total = 0.0;
    for (criterion, weight) in &profile.criteria {
        let score = per_criterion
            .get(criterion)
            .ok_or_else(|| JudgeError::MissingCriterion {
                judge: judge_id.to_string(),
                criterion: criterion.clone(),
            })?;
        total += weight * score;
    }
    Ok(JudgeScore {
        judge_id: judge_id.to_string(),
        tier,
        per_criterion: per_criterion.clone(),
        weighted_total: total,
        vote: vote_for_total(total),
        confidence,
    })
}

/// Recomputes the weighted total from the criterion scores and checks both
/// it and the vote band. Scores that fail are fabrications.
pub fn is_internally_consistent(score: &JudgeScore, profile: &JudgeProfile) -> bool {
    let mut total = 0.0;
    for (criterion, weight) in &profile.criteria {
        match score.per_criterion.get(criterion) {
            Some(value) => total += weight * value,
            None => return false,
        }
    }
    (total - score.weighted_total).abs() <= 1e-6
        && vote_for_total(score.weighted_total) == score.vote
}

/// A judge in the panel. Scripted mocks implement this at desk scale.
pub trait JudgePort: Send + Sync {
    fn id(&self) -> &str;
    fn tier(&self) -> ModelTier;
    /// Produces a complete claimed score. The pipeline independently checks
    /// internal consistency, so a dishonest port can be caught.
    fn assess(
        &self,
        output: &str,
        profile: &JudgeProfile,
        round: u32,
    ) -> Result<JudgeScore, JudgeError>;
}
