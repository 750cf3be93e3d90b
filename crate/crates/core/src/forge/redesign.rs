//! The redesign escalation policy: refinement below three attempts, radical
//! topology changes through four, and human escalation at five redesigns or
//! triple the budget.

use serde::{Deserialize, Serialize};

use crate::task::TeamDesign;
use crate::topology::TopologyKind;
use crate::usd::Usd;

use super::designer::{DesignRequest, DesignerPort};
use super::ForgeError;

pub const ESCALATION_STATUS: &str = "pending_human_review";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeConfig {
    /// Library lookup threshold on success score.
    pub library_threshold: f64,
    /// Redesign count at which the task escalates to human review.
    pub max_redesigns: u32,
    /// Redesign count at which refinement gives way to radical redesign.
    pub radical_threshold: u32,
    /// Escalate when spend exceeds budget times this.
    pub budget_cap_multiplier: u32,
    /// Design store rolling-window size.
    pub store_window: usize,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig {
            library_threshold: 0.7,
            max_redesigns: 5,
            radical_threshold: 3,
            budget_cap_multiplier: 3,
            store_window: super::store::DEFAULT_WINDOW_SIZE,
        }
    }
}

/// Escalation is a value, not an error: the task hands off to a human.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escalation {
    pub status: String,
    pub reason: String,
}

impl Escalation {
    pub fn new(reason: impl Into<String>) -> Escalation {
        Escalation {
            status: ESCALATION_STATUS.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedesignKind {
    Refine,
    Radical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RedesignDecision {
    Redesign(RedesignKind),
    Escalate(Escalation),
}

/// Pure escalation policy over (count, spent, budget): escalate exactly at
/// count = max_redesigns or spent > multiplier * budget, refine below the
/// radical threshold, go radical otherwise.
pub fn redesign_decision(
    count: u32,
    spent: Usd,
    budget: Usd,
    config: &ForgeConfig,
) -> RedesignDecision {
    let cap = budget * config.budget_cap_multiplier;
    if count >= config.max_redesigns {
        return RedesignDecision::Escalate(Escalation::new(format!(
            "redesign count reached {}",
            config.max_redesigns
        )));
    }
    if spent > cap {
        return RedesignDecision::Escalate(Escalation::new(format!(
            "spend {spent} exceeds {}x budget cap {cap}",
            config.budget_cap_multiplier
        )));
    }
    if count < config.radical_threshold {
        RedesignDecision::Redesign(RedesignKind::Refine)
    } else {
        RedesignDecision::Redesign(RedesignKind::Radical)
    }
}

/// Refinement: same topology and roles, every agent prompt augmented with
/// the judges' feedback.
pub fn refine_design(previous: &TeamDesign, feedback: &str) -> TeamDesign {
    let mut design = previous.clone();
    for agent in &mut design.agents {
        agent.system_prompt = format!("{}\n\nJudge feedback:\n{feedback}", agent.system_prompt);
    }
    design
}

/// Radical redesign: a fresh template on a topology different from the
/// previous design and from every failed topology for this task.
pub fn radical_design(
    previous: &TeamDesign,
    feedback: &str,
    failed: &[TopologyKind],
    request: &DesignRequest<'_>,
    designer: &dyn DesignerPort,
) -> Result<TeamDesign, ForgeError> {
    let next_topology = TopologyKind::ALL
        .into_iter()
        .filter(|k| request.allowed.contains(k))
        .find(|k| *k != previous.topology && !failed.contains(k))
        .ok_or(ForgeError::TopologiesExhausted)?;
    let radical_request = DesignRequest {
        task: request.task,
        task_type: request.task_type,
        recommendation: Some(next_topology),
        allowed: request.allowed,
        tools: request.tools,
        model_id: request.model_id.clone(),
    };
    let design = designer.generate(&radical_request)?;
    Ok(refine_design(&design, feedback))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RedesignOutcome {
    Refined(TeamDesign),
    Radical(TeamDesign),
    Escalate(Escalation),
}

/// Full redesign operation: policy decision plus design construction.
#[allow(clippy::too_many_arguments)]
pub fn redesign(
    previous: &TeamDesign,
    feedback: &str,
    count: u32,
    spent: Usd,
    budget: Usd,
    config: &ForgeConfig,
    failed: &[TopologyKind],
    request: &DesignRequest<'_>,
    designer: &dyn DesignerPort,
) -> Result<RedesignOutcome, ForgeError> {
    match redesign_decision(count, spent, budget, config) {
        RedesignDecision::Escalate(escalation) => Ok(RedesignOutcome::Escalate(escalation)),
        RedesignDecision::Redesign(RedesignKind::Refine) => {
            Ok(RedesignOutcome::Refined(refine_design(previous, feedback)))
        }
        RedesignDecision::Redesign(RedesignKind::Radical) => Ok(RedesignOutcome::Radical(
            radical_design(previous, feedback, failed, request, designer)?,
        )),
    }
}
