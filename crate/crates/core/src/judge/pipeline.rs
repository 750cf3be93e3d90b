//! The judging pipeline: pre-round drift exclusion, scoring,
//! anti-fabrication checks, consensus, and mandatory verdict persistence.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::consensus::{run_consensus, ConsensusAlgorithm, ConsensusResult, TierWeights};
use super::profile::JudgeProfile;
use super::score::{is_internally_consistent, JudgeError, JudgePort, JudgeScore, Vote};
use crate::event::{types as ev, EventBus};
use crate::guards::drift::{DriftMonitor, DriftOutcome};

/// One configured judge: identity plus its scoring port.
#[derive(Clone)]
pub struct JudgeEntry {
    pub port: Arc<dyn JudgePort>,
}

impl JudgeEntry {
    pub fn new(port: Arc<dyn JudgePort>) -> JudgeEntry {
        JudgeEntry { port }
    }

    pub fn id(&self) -> &str {
        self.port.id()
    }
}

/// Active panel plus the reserve judges Goodhart actions can rotate in.
#[derive(Clone, Default)]
pub struct JudgePanel {
    pub active: Vec<JudgeEntry>,
    pub reserves: Vec<JudgeEntry>,
}

impl JudgePanel {
    pub fn new(active: Vec<JudgeEntry>, reserves: Vec<JudgeEntry>) -> JudgePanel {
        JudgePanel { active, reserves }
    }

    pub fn active_ids(&self) -> Vec<String> {
        self.active.iter().map(|j| j.id().to_string()).collect()
    }

    /// Swaps the first active judge for the next reserve. Returns
    /// (outgoing, incoming) ids.
    pub fn rotate_one(&mut self) -> Option<(String, String)> {
        if self.active.is_empty() || self.reserves.is_empty() {
            return None;
        }
        let incoming = self.reserves.remove(0);
        let outgoing = self.active.remove(0);
        let result = (outgoing.id().to_string(), incoming.id().to_string());
        self.active.push(incoming);
        self.reserves.push(outgoing);
        Some(result)
    }

    /// Replaces the whole active panel from reserves, if enough remain.
    /// Returns (outgoing, incoming) id lists.
    pub fn replace_all(&mut self) -> Option<(Vec<String>, Vec<String>)> {
        let needed = self.active.len();
        if self.reserves.len() < needed {
            return None;
        }
        let incoming: Vec<JudgeEntry> = self.reserves.drain(..needed).collect();
        let outgoing = std::mem::replace(&mut self.active, incoming);
        let out_ids = outgoing.iter().map(|j| j.id().to_string()).collect();
        let in_ids = self.active.iter().map(|j| j.id().to_string()).collect();
        self.reserves.extend(outgoing);
        Some((out_ids, in_ids))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub algorithm: ConsensusAlgorithm,
    pub tier_weights: TierWeights,
    /// Mode gate: at most this many judges score each round.
    pub max_judges: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            algorithm: ConsensusAlgorithm::WeightedMajority,
            tier_weights: TierWeights::default(),
            max_judges: 5,
        }
    }
}

/// The pipeline's output: consensus decision plus everything the
/// orchestrator needs for redesign feedback and learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Vote,
    pub consensus: ConsensusResult,
    pub round: u32,
    /// Judges excluded before the round because they were drift-suspended.
    pub excluded_for_drift: Vec<String>,
    /// Judges discarded by the anti-fabrication check.
    pub fabrications: Vec<String>,
    /// True when no judge survived: mandatory-escalation reject.
    pub panel_collapsed: bool,
}

impl Verdict {
    pub fn score(&self) -> f64 {
        self.consensus.score
    }

    /// Human-readable feedback for the redesign loop.
    pub fn feedback(&self) -> String {
        let mut lines = vec![format!(
            "consensus {} (score {:.3}, entropy {:.3} bits)",
            self.decision.as_str(),
            self.consensus.score,
            self.consensus.entropy_bits
        )];
        for judge in &self.consensus.per_judge {
            lines.push(format!(
                "judge {}: {} (total {:.3})",
                judge.judge_id,
                judge.vote.as_str(),
                judge.weighted_total
            ));
        }
        lines.join("\n")
    }
}

/// Runs one judging round over `output`.
///
/// Order of operations: (1) drift-suspended judges are excluded; (2) the
/// survivors score; (3) new scores feed the drift monitor (suspensions take
/// effect next round); (4) internally inconsistent scores are discarded as
/// fabrications; (5) consensus runs over the remainder; (6) the verdict is
/// persisted to the event log before returning.
#[allow(clippy::too_many_arguments)]
pub fn run_judge_pipeline(
    output: &str,
    panel: &JudgePanel,
    profile: &JudgeProfile,
    config: &PipelineConfig,
    drift: &mut DriftMonitor,
    bus: Option<&EventBus>,
    task_id: &str,
    round: u32,
) -> Result<Verdict, JudgeError> {
    let emit = |event_type: &str, payload: serde_json::Value| {
        if let Some(bus) = bus {
            bus.emit(event_type, task_id, payload).expect("registered");
        }
    };
    let seated: Vec<&JudgeEntry> = panel.active.iter().take(config.max_judges).collect();
    let mut excluded = Vec::new();
    let mut scores: Vec<JudgeScore> = Vec::new();
    let mut fabrications = Vec::new();

    for entry in &seated {
        if drift.is_suspended(entry.id()) {
            excluded.push(entry.id().to_string());
            continue;
        }
        let score = entry.port.assess(output, profile, round)?;
        emit(
            ev::JUDGE_SCORED,
            json!({
                "judge": score.judge_id,
                "total": score.weighted_total,
                "vote": score.vote.as_str(),
            }),
        );
        scores.push(score);
    }

    // Feed the drift monitor; a suspension here affects future rounds.
    for score in &scores {
        match drift.record_score(&score.judge_id, score.weighted_total) {
            DriftOutcome::Ok { .. } => {}
            DriftOutcome::Suspended {
                jsd,
                reference,
                window,
            } => {
                emit(
                    ev::DRIFT_SUSPENDED,
                    json!({
                        "judge": score.judge_id,
                        "jsd": jsd,
                        "reference": reference,
                        "window": window,
                    }),
                );
            }
            DriftOutcome::Recalibrated {
                jsd,
                suspended_fraction,
            } => {
                emit(
                    ev::DRIFT_RECALIBRATED,
                    json!({
                        "judge": score.judge_id,
                        "jsd": jsd,
                        "suspended_fraction": suspended_fraction,
                    }),
                );
            }
        }
    }

    // Anti-fabrication: discard internally inconsistent scores.
    let survivors: Vec<JudgeScore> = scores
        .into_iter()
        .filter(|score| {
            if is_internally_consistent(score, profile) {
                true
            } else {
                fabrications.push(score.judge_id.clone());
                emit(
                    ev::JUDGE_FABRICATION,
                    json!({
                        "judge": score.judge_id,
                        "claimed_total": score.weighted_total,
                        "claimed_vote": score.vote.as_str(),
                    }),
                );
                false
            }
        })
        .collect();

    let verdict = if survivors.is_empty() {
        emit(
            ev::JUDGE_PANEL_COLLAPSED,
            json!({
                "round": round,
                "excluded_for_drift": excluded,
                "fabrications": fabrications,
                "note": "no surviving judges; rejecting with mandatory escalation",
            }),
        );
        Verdict {
            decision: Vote::Reject,
            consensus: ConsensusResult {
                decision: Vote::Reject,
                algorithm: config.algorithm,
                entropy_bits: 0.0,
                score: 0.0,
                per_judge: Vec::new(),
            },
            round,
            excluded_for_drift: excluded,
            fabrications,
            panel_collapsed: true,
        }
    } else {
        let consensus = run_consensus(config.algorithm, &survivors, &config.tier_weights)
            .expect("survivors non-empty");
        Verdict {
            decision: consensus.decision,
            consensus,
            round,
            excluded_for_drift: excluded,
            fabrications,
            panel_collapsed: false,
        }
    };

    // Mandatory persistence before returning.
    emit(
        ev::JUDGE_VERDICT,
        json!({
            "round": round,
            "decision": verdict.decision.as_str(),
            "score": verdict.consensus.score,
            "entropy_bits": verdict.consensus.entropy_bits,
            "judges": verdict.consensus.per_judge.iter().map(|j| j.judge_id.clone()).collect::<Vec<_>>(),
            "panel_collapsed": verdict.panel_collapsed,
        }),
    );
    Ok(verdict)
}
