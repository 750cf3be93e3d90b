//! Scripted mocks implementing the executor and judge ports.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::judge::{
    score_output, JudgeError, JudgePort, JudgeProfile, JudgeScore, ModelTier, Vote,
};
use crate::task::AgentSpec;
use crate::topology::{AgentCall, AgentExecutor, AgentFailure, AgentResponse, ToolRequest};

use super::scenario::ScenarioScript;

/// Executor driven by scenario rules; unmatched calls echo the prompt with
/// zero cost.
pub struct ScriptedExecutor {
    script: Arc<ScenarioScript>,
}

impl ScriptedExecutor {
    pub fn new(script: Arc<ScenarioScript>) -> ScriptedExecutor {
        ScriptedExecutor { script }
    }
}

impl AgentExecutor for ScriptedExecutor {
    fn execute(
        &self,
        agent: &AgentSpec,
        prompt: &str,
        call: &AgentCall,
    ) -> Result<AgentResponse, AgentFailure> {
        match self
            .script
            .match_agent(&agent.name, &agent.role, call.round, prompt)
        {
            Some(rule) => {
                if let Some(reason) = &rule.fail {
                    return Err(AgentFailure {
                        agent: agent.name.clone(),
                        turn: call.turn,
                        reason: reason.clone(),
                    });
                }
                let idx = (call.turn as usize - 1).min(rule.responses.len() - 1);
                let turn = &rule.responses[idx];
                Ok(AgentResponse {
                    text: turn.text.clone(),
                    tool_requests: turn
                        .tools
                        .iter()
                        .map(|t| ToolRequest {
                            tool: t.tool.clone(),
                            args: t.args.clone(),
                        })
                        .collect(),
                    tokens_in: turn.tokens_in,
                    tokens_out: turn.tokens_out,
                })
            }
            None => Ok(AgentResponse::text(format!(
                "echo({}#r{}): {prompt}",
                agent.name, call.round
            ))),
        }
    }
}

/// Judge driven by scenario rules; unmatched rounds score every criterion
/// with the scenario's default. Claim overrides let scenarios fabricate.
pub struct ScriptedJudge {
    id: String,
    tier: ModelTier,
    script: Arc<ScenarioScript>,
}

impl ScriptedJudge {
    pub fn new(id: &str, tier: ModelTier, script: Arc<ScenarioScript>) -> ScriptedJudge {
        ScriptedJudge {
            id: id.to_string(),
            tier,
            script,
        }
    }
}

impl JudgePort for ScriptedJudge {
    fn id(&self) -> &str {
        &self.id
    }

    fn tier(&self) -> ModelTier {
        self.tier
    }

    fn assess(
        &self,
        _output: &str,
        profile: &JudgeProfile,
        round: u32,
    ) -> Result<JudgeScore, JudgeError> {
        let rule = self.script.match_judge(&self.id, round);
        let flat = rule
            .and_then(|r| r.score)
            .unwrap_or(self.script.default_judge.score);
        let confidence = rule
            .map(|r| r.confidence)
            .unwrap_or(self.script.default_judge.confidence);
        let per_criterion: BTreeMap<String, f64> = profile
            .criteria
            .iter()
            .map(|(criterion, _)| {
                let value = rule
                    .and_then(|r| r.scores.get(criterion).copied())
                    .unwrap_or(flat);
                (criterion.clone(), value)
            })
            .collect();
        let mut score = score_output(&self.id, self.tier, &per_criterion, confidence, profile)?;
        if let Some(rule) = rule {
            if let Some(total) = rule.claim_total {
                score.weighted_total = total;
            }
            if let Some(vote) = &rule.claim_vote {
                score.vote = match vote.as_str() {
                    "approve" => Vote::Approve,
                    "revise" => Vote::Revise,
                    _ => Vote::Reject,
                };
            }
        }
        Ok(score)
    }
}
