//! Scenario scripts: declarative agent and judge behavior for one run.
//! A script plus a seed fully determines every mock response.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One scripted executor turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TurnResponse {
    pub text: String,
    pub tools: Vec<ToolCall>,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub args: Value,
}

/// Matches executor invocations by agent (name or role), round, and an
/// optional input substring. The first matching rule fires; its responses
/// play out per turn, repeating the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRule {
    pub agent: String,
    #[serde(default)]
    pub round: Option<u32>,
    #[serde(default)]
    pub input_contains: Option<String>,
    #[serde(default)]
    pub responses: Vec<TurnResponse>,
    /// Simulated agent failure with this reason.
    #[serde(default)]
    pub fail: Option<String>,
}

/// Matches judge assessments by judge id and round. Missing criteria fall
/// back to `score`; a fabricated claim overrides the honest total/vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRule {
    pub judge: String,
    #[serde(default)]
    pub round: Option<u32>,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub score: Option<f64>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub claim_total: Option<f64>,
    #[serde(default)]
    pub claim_vote: Option<String>,
}

fn default_confidence() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefaultJudge {
    pub score: f64,
    pub confidence: f64,
}

impl Default for DefaultJudge {
    fn default() -> Self {
        DefaultJudge {
            score: 0.75,
            confidence: 0.9,
        }
    }
}

/// Loop-benchmark inputs: one score trajectory per task (iteration-indexed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct BenchScript {
    pub trajectories: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ScenarioScript {
    pub seed: u64,
    pub agents: Vec<AgentRule>,
    pub judges: Vec<JudgeRule>,
    pub default_judge: DefaultJudge,
    pub bench: Option<BenchScript>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario at {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ScenarioScript {
    /// Parses and validates a scenario JSON document.
    pub fn load(path: &Path) -> Result<ScenarioScript, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let script: ScenarioScript = serde_json::from_str(&text)?;
        script
            .validate()
            .map_err(|(at, message)| ScenarioError::Invalid {
                path: format!("{} ({at})", path.display()),
                message,
            })?;
        Ok(script)
    }

    pub fn from_json(text: &str) -> Result<ScenarioScript, ScenarioError> {
        let script: ScenarioScript = serde_json::from_str(text)?;
        script
            .validate()
            .map_err(|(at, message)| ScenarioError::Invalid { path: at, message })?;
        Ok(script)
    }

    /// Structural validation beyond what serde enforces.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for (idx, rule) in self.agents.iter().enumerate() {
            if rule.agent.trim().is_empty() {
                return Err((format!("agents[{idx}]"), "agent must be named".into()));
            }
            if rule.fail.is_none() && rule.responses.is_empty() {
                return Err((
                    format!("agents[{idx}]"),
                    "rule needs responses or fail".into(),
                ));
            }
        }
        for (idx, rule) in self.judges.iter().enumerate() {
            for (criterion, value) in &rule.scores {
                if !unit(*value) {
                    return Err((
                        format!("judges[{idx}].scores.{criterion}"),
                        format!("score {value} outside [0,1]"),
                    ));
                }
            }
            if let Some(score) = rule.score {
                if !unit(score) {
                    return Err((format!("judges[{idx}].score"), "outside [0,1]".into()));
                }
            }
            if let Some(vote) = &rule.claim_vote {
                if !["approve", "revise", "reject"].contains(&vote.as_str()) {
                    return Err((
                        format!("judges[{idx}].claim_vote"),
                        format!("unknown vote {vote}"),
                    ));
                }
            }
        }
        if let Some(bench) = &self.bench {
            for (idx, trajectory) in bench.trajectories.iter().enumerate() {
                if trajectory.is_empty() {
                    return Err((
                        format!("bench.trajectories[{idx}]"),
                        "empty trajectory".into(),
                    ));
                }
                if trajectory.iter().any(|s| !unit(*s)) {
                    return Err((
                        format!("bench.trajectories[{idx}]"),
                        "scores outside [0,1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// First agent rule matching (agent name/role, round, input).
    pub fn match_agent(
        &self,
        name: &str,
        role: &str,
        round: u32,
        input: &str,
    ) -> Option<&AgentRule> {
        self.agents.iter().find(|rule| {
            (rule.agent == name || rule.agent == role)
                && rule.round.map(|r| r == round).unwrap_or(true)
                && rule
                    .input_contains
                    .as_ref()
                    .map(|needle| input.contains(needle))
                    .unwrap_or(true)
        })
    }

    pub fn match_judge(&self, judge_id: &str, round: u32) -> Option<&JudgeRule> {
        self.judges
            .iter()
            .find(|rule| rule.judge == judge_id && rule.round.map(|r| r == round).unwrap_or(true))
    }
}
