//! Runners for the twelve topologies plus the dispatching `execute_topology`.
//!
//! Shared contract: within-round agent executions may run concurrently, but
//! aggregation is a pure function of per-agent outputs collected in agent
//! declaration order, so results are independent of completion order.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::context::{execute_agent, AgentRunOutput, ExecError, TopologyContext};
use super::hub::{Message, MsgHub, Recipients};
use super::{
    dag_levels, effective_max_rounds, forest_levels, forest_roots, validate_structure, TopologyKind,
};
use crate::event::types as ev;
use crate::mode::FeatureSet;
use crate::task::TeamDesign;
use crate::usd::Usd;

/// In-band convergence markers. The review loops and debate match on
/// containment; mesh agents must emit NO_UPDATE as their entire message.
pub const MARKER_CONSENSUS: &str = "CONSENSUS";
pub const MARKER_NO_UPDATE: &str = "NO_UPDATE";
pub const MARKER_APPROVED: &str = "APPROVED";
pub const MARKER_DONE: &str = "DONE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Natural,
    MaxRounds,
    AgentFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub agent: String,
    pub rounds: u32,
    pub outputs: Vec<String>,
    pub cost: Usd,
    pub tool_calls: u32,
    pub failed: bool,
}

impl AgentOutcome {
    fn new(agent: &str) -> AgentOutcome {
        AgentOutcome {
            agent: agent.to_string(),
            rounds: 0,
            outputs: Vec::new(),
            cost: Usd::ZERO,
            tool_calls: 0,
            failed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_output: String,
    pub outcomes: Vec<AgentOutcome>,
    pub rounds_executed: u32,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("design validation failed: {0:?}")]
    Invalid(Vec<String>),
    #[error("cycle detected: {0}")]
    Cycle(String),
    #[error("all agents failed")]
    AllAgentsFailed,
    #[error("topology {0:?} is gated off in the active mode")]
    FeatureGated(TopologyKind),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl TopologyError {
    /// Name of the failing agent when the run aborted on an agent error.
    pub fn failed_agent(&self) -> Option<&str> {
        match self {
            TopologyError::Exec(ExecError::Agent(failure)) => Some(failure.agent.as_str()),
            _ => None,
        }
    }
}

/// Mutable state shared by a single topology run.
pub struct TopologyRun<'a> {
    design: &'a TeamDesign,
    ctx: &'a TopologyContext<'a>,
    hub: Mutex<MsgHub>,
    outcomes: Mutex<Vec<AgentOutcome>>,
}

impl<'a> TopologyRun<'a> {
    fn new(design: &'a TeamDesign, ctx: &'a TopologyContext<'a>) -> TopologyRun<'a> {
        TopologyRun {
            design,
            ctx,
            hub: Mutex::new(MsgHub::new()),
            outcomes: Mutex::new(
                design
                    .agents
                    .iter()
                    .map(|a| AgentOutcome::new(&a.name))
                    .collect(),
            ),
        }
    }

    fn name(&self, idx: usize) -> &str {
        &self.design.agents[idx].name
    }

    /// Executes one agent, records its outcome and hub message.
    fn call(
        &self,
        idx: usize,
        prompt: &str,
        round: u32,
        recipients: Recipients,
    ) -> Result<String, ExecError> {
        let agent = &self.design.agents[idx];
        let result = execute_agent(self.ctx, agent, prompt, round);
        let mut outcomes = self.outcomes.lock().expect("outcomes poisoned");
        let outcome = &mut outcomes[idx];
        outcome.rounds += 1;
        match result {
            Ok(AgentRunOutput {
                text,
                tool_calls,
                cost,
                ..
            }) => {
                outcome.outputs.push(text.clone());
                outcome.cost += cost;
                outcome.tool_calls += tool_calls;
                drop(outcomes);
                self.hub
                    .lock()
                    .expect("hub poisoned")
                    .append(Message {
                        sender: agent.name.clone(),
                        recipients,
                        round,
                        content: text.clone(),
                    })
                    .expect("rounds are nondecreasing by construction");
                Ok(text)
            }
            Err(err) => {
                outcome.failed = true;
                Err(err)
            }
        }
    }

    /// Runs a batch of (agent index, prompt) pairs concurrently; results come
    /// back in input order regardless of completion order.
    fn call_batch(
        &self,
        items: &[(usize, String)],
        round: u32,
        recipients: Recipients,
    ) -> Vec<Result<String, ExecError>> {
        if items.len() == 1 {
            let (idx, prompt) = &items[0];
            return vec![self.call(*idx, prompt, round, recipients)];
        }
        let mut slots: Vec<Option<Result<String, ExecError>>> =
            (0..items.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (slot, (idx, prompt)) in items.iter().enumerate() {
                let recipients = recipients.clone();
                handles.push((
                    slot,
                    scope.spawn(move || self.call(*idx, prompt, round, recipients)),
                ));
            }
            for (slot, handle) in handles {
                slots[slot] = Some(handle.join().expect("agent thread panicked"));
            }
        });
        slots.into_iter().map(|s| s.expect("slot filled")).collect()
    }

    fn emit(&self, event_type: &str, payload: serde_json::Value) {
        if let Some(bus) = self.ctx.bus {
            bus.emit(event_type, self.ctx.task_id, payload)
                .expect("swarm event registered");
        }
    }

    fn emit_agent_results(
        &self,
        items: &[(usize, String)],
        results: &[Result<String, ExecError>],
        round: u32,
    ) {
        for ((idx, _), result) in items.iter().zip(results) {
            match result {
                Ok(_) => self.emit(
                    ev::SWARM_AGENT_COMPLETED,
                    json!({"agent": self.name(*idx), "round": round}),
                ),
                Err(err) => self.emit(
                    ev::SWARM_AGENT_FAILED,
                    json!({"agent": self.name(*idx), "round": round, "reason": err.to_string()}),
                ),
            }
        }
    }

    fn finish(
        self,
        final_output: String,
        rounds: u32,
        termination: Termination,
    ) -> (RunResult, MsgHub) {
        let outcomes = self.outcomes.into_inner().expect("outcomes poisoned");
        let hub = self.hub.into_inner().expect("hub poisoned");
        (
            RunResult {
                final_output,
                outcomes,
                rounds_executed: rounds,
                termination,
            },
            hub,
        )
    }
}

fn labeled(name: &str, content: &str) -> String {
    format!("{name}: {content}")
}

fn join_labeled(parts: &[String]) -> String {
    parts.join("\n")
}

fn validated(design: &TeamDesign) -> Result<(), TopologyError> {
    let violations = validate_structure(design);
    if violations.is_empty() {
        Ok(())
    } else if violations.iter().any(|v| v.contains("cycle")) {
        Err(TopologyError::Cycle(violations.join("; ")))
    } else {
        Err(TopologyError::Invalid(violations))
    }
}

/// Chain: each agent receives the previous agent's output; the final output
/// is the last agent's output.
pub fn run_sequential(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let mut current = prompt.to_string();
    let n = design.agents.len();
    for idx in 0..n {
        let round = idx as u32 + 1;
        let recipients = if idx + 1 < n {
            Recipients::To(vec![run.name(idx + 1).to_string()])
        } else {
            Recipients::Broadcast
        };
        current = run.call(idx, &current, round, recipients)?;
        run.emit(ev::SWARM_ROUND, json!({"round": round}));
    }
    Ok(run.finish(current, n as u32, Termination::Natural))
}

/// Fan-out: all agents get the same input; all settle; outputs are
/// concatenated in declaration order with agent-name labels.
pub fn run_parallel(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let items: Vec<(usize, String)> = (0..design.agents.len())
        .map(|i| (i, prompt.to_string()))
        .collect();
    let results = run.call_batch(&items, 1, Recipients::Broadcast);
    run.emit_agent_results(&items, &results, 1);
    let mut parts = Vec::new();
    for ((idx, _), result) in items.iter().zip(&results) {
        if let Ok(output) = result {
            parts.push(labeled(run.name(*idx), output));
        }
    }
    if parts.is_empty() {
        return Err(TopologyError::AllAgentsFailed);
    }
    Ok(run.finish(join_labeled(&parts), 1, Termination::Natural))
}

/// Manager/worker review loop shared by hierarchical (APPROVED) and star
/// (DONE). The coordinator decomposes once, then each review round re-runs
/// the workers and checks the coordinator's synthesis for the marker.
fn run_review_loop(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
    marker: &str,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let n = design.agents.len();
    let worker_names: Vec<String> = (1..n).map(|i| run.name(i).to_string()).collect();
    let decompose_prompt = format!(
        "{prompt}\n\nProduce one subtask line per team member: {}",
        worker_names.join(", ")
    );
    let decomposition = run.call(0, &decompose_prompt, 0, Recipients::To(worker_names))?;
    let lines: Vec<&str> = decomposition
        .lines()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let max_rounds = effective_max_rounds(design);
    let mut feedback: Option<String> = None;
    let mut last_review = String::new();
    for round in 1..=max_rounds {
        let items: Vec<(usize, String)> = (1..n)
            .map(|i| {
                let subtask = if lines.is_empty() {
                    decomposition.as_str()
                } else {
                    lines[(i - 1) % lines.len()]
                };
                let mut input = format!("{prompt}\n\nSubtask: {subtask}");
                if let Some(fb) = &feedback {
                    input.push_str("\n\nCoordinator feedback:\n");
                    input.push_str(fb);
                }
                (i, input)
            })
            .collect();
        let results = run.call_batch(&items, round, Recipients::To(vec![run.name(0).to_string()]));
        run.emit_agent_results(&items, &results, round);
        let mut merged = Vec::new();
        for ((idx, _), result) in items.iter().zip(&results) {
            match result {
                Ok(output) => merged.push(labeled(run.name(*idx), output)),
                Err(err) => merged.push(labeled(run.name(*idx), &format!("[failed: {err}]"))),
            }
        }
        let review_prompt = format!(
            "Review the team outputs for the task.\n\n{}\n\nReply {marker} when satisfied.",
            join_labeled(&merged)
        );
        last_review = run.call(0, &review_prompt, round, Recipients::Broadcast)?;
        run.emit(ev::SWARM_ROUND, json!({"round": round}));
        if last_review.contains(marker) {
            return Ok(run.finish(last_review, round, Termination::Natural));
        }
        feedback = Some(last_review.clone());
    }
    Ok(run.finish(last_review, max_rounds, Termination::MaxRounds))
}

/// Manager decomposes, workers execute, manager merges until it approves.
pub fn run_hierarchical(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    run_review_loop(design, prompt, ctx, MARKER_APPROVED)
}

/// Hub decomposes, spokes execute, hub synthesizes until it declares done.
pub fn run_star(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    run_review_loop(design, prompt, ctx, MARKER_DONE)
}

/// Topological-sort execution by longest-path level; a node's input carries
/// its predecessors' outputs in edge declaration order; the final output is
/// the labeled concatenation of sink outputs.
pub fn run_dag(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let levels = dag_levels(design).map_err(TopologyError::Cycle)?;
    let run = TopologyRun::new(design, ctx);
    let names: Vec<&str> = design.agents.iter().map(|a| a.name.as_str()).collect();
    let mut outputs: Vec<Option<String>> = vec![None; design.agents.len()];
    let has_out: std::collections::BTreeSet<&str> = design
        .params
        .dag_edges
        .iter()
        .map(|(from, _)| from.as_str())
        .collect();
    for (level_idx, level) in levels.iter().enumerate() {
        let round = level_idx as u32 + 1;
        let items: Vec<(usize, String)> = level
            .iter()
            .map(|&node| {
                let mut input = prompt.to_string();
                let preds: Vec<String> = design
                    .params
                    .dag_edges
                    .iter()
                    .filter(|(_, to)| to == names[node])
                    .map(|(from, _)| {
                        let idx = names.iter().position(|n| n == from).expect("validated");
                        labeled(from, outputs[idx].as_deref().unwrap_or(""))
                    })
                    .collect();
                if !preds.is_empty() {
                    input = format!("{input}\n\nInputs:\n{}", join_labeled(&preds));
                }
                (node, input)
            })
            .collect();
        let results = run.call_batch(&items, round, Recipients::Broadcast);
        run.emit_agent_results(&items, &results, round);
        for ((node, _), result) in items.iter().zip(results) {
            outputs[*node] = Some(result?);
        }
        run.emit(ev::SWARM_ROUND, json!({"round": round, "level": level_idx}));
    }
    let sinks: Vec<String> = (0..design.agents.len())
        .filter(|&i| !has_out.contains(names[i]))
        .map(|i| labeled(names[i], outputs[i].as_deref().unwrap_or("")))
        .collect();
    Ok(run.finish(
        join_labeled(&sinks),
        levels.len() as u32,
        Termination::Natural,
    ))
}

/// N-1 generators fan out, one aggregator synthesizes their labeled outputs.
pub fn run_mixture(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let n = design.agents.len();
    let items: Vec<(usize, String)> = (0..n - 1).map(|i| (i, prompt.to_string())).collect();
    let results = run.call_batch(&items, 1, Recipients::To(vec![run.name(n - 1).to_string()]));
    run.emit_agent_results(&items, &results, 1);
    let mut parts = Vec::new();
    for ((idx, _), result) in items.iter().zip(&results) {
        match result {
            Ok(output) => parts.push(labeled(run.name(*idx), output)),
            Err(err) => parts.push(labeled(run.name(*idx), &format!("[failed: {err}]"))),
        }
    }
    let agg_prompt = format!(
        "{prompt}\n\nCombine the generator outputs:\n{}",
        join_labeled(&parts)
    );
    let final_output = run.call(n - 1, &agg_prompt, 1, Recipients::Broadcast)?;
    run.emit(ev::SWARM_ROUND, json!({"round": 1}));
    Ok(run.finish(final_output, 1, Termination::Natural))
}

/// Alternating proposer/critic rounds until the critic's message contains
/// CONSENSUS; the final output is the last proposal.
pub fn run_debate(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let max_rounds = effective_max_rounds(design);
    let mut critique: Option<String> = None;
    let mut proposal = String::new();
    for round in 1..=max_rounds {
        let proposer_input = match &critique {
            None => prompt.to_string(),
            Some(c) => format!("{prompt}\n\nCritic feedback:\n{c}"),
        };
        proposal = run.call(
            0,
            &proposer_input,
            round,
            Recipients::To(vec![run.name(1).to_string()]),
        )?;
        let critic_input = format!("Critique this proposal:\n{proposal}");
        let response = run.call(
            1,
            &critic_input,
            round,
            Recipients::To(vec![run.name(0).to_string()]),
        )?;
        run.emit(ev::SWARM_ROUND, json!({"round": round}));
        if response.contains(MARKER_CONSENSUS) {
            return Ok(run.finish(proposal, round, Termination::Natural));
        }
        critique = Some(response);
    }
    Ok(run.finish(proposal, max_rounds, Termination::MaxRounds))
}

/// All-to-all broadcast; converged when every active agent answers
/// NO_UPDATE in a round. Failed agents fall permanently silent.
pub fn run_mesh(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let n = design.agents.len();
    let max_rounds = effective_max_rounds(design);
    let mut active: Vec<bool> = vec![true; n];
    let mut last_substantive: Vec<Option<String>> = vec![None; n];
    let mut prev_round_msgs: Vec<(usize, String)> = Vec::new();

    // Round 0: everyone answers the prompt.
    let items: Vec<(usize, String)> = (0..n).map(|i| (i, prompt.to_string())).collect();
    let results = run.call_batch(&items, 0, Recipients::Broadcast);
    run.emit_agent_results(&items, &results, 0);
    for ((idx, _), result) in items.iter().zip(results) {
        match result {
            Ok(output) => {
                last_substantive[*idx] = Some(output.clone());
                prev_round_msgs.push((*idx, output));
            }
            Err(_) => active[*idx] = false,
        }
    }
    run.emit(ev::SWARM_ROUND, json!({"round": 0}));
    if prev_round_msgs.is_empty() {
        return Err(TopologyError::AllAgentsFailed);
    }
    let mut executed = 1u32;

    while executed < max_rounds {
        let round = executed;
        let digest = join_labeled(
            &prev_round_msgs
                .iter()
                .map(|(idx, text)| labeled(run.name(*idx), text))
                .collect::<Vec<_>>(),
        );
        let items: Vec<(usize, String)> = (0..n)
            .filter(|i| active[*i])
            .map(|i| {
                (
                    i,
                    format!(
                        "{prompt}\n\nRound {} messages:\n{digest}\n\nBroadcast a revision or reply {MARKER_NO_UPDATE}.",
                        round - 1
                    ),
                )
            })
            .collect();
        let results = run.call_batch(&items, round, Recipients::Broadcast);
        run.emit_agent_results(&items, &results, round);
        let mut all_quiet = true;
        prev_round_msgs = Vec::new();
        for ((idx, _), result) in items.iter().zip(results) {
            match result {
                Ok(output) => {
                    if output.trim() == MARKER_NO_UPDATE {
                        continue;
                    }
                    all_quiet = false;
                    last_substantive[*idx] = Some(output.clone());
                    prev_round_msgs.push((*idx, output));
                }
                Err(_) => active[*idx] = false,
            }
        }
        run.emit(ev::SWARM_ROUND, json!({"round": round}));
        executed += 1;
        if all_quiet || prev_round_msgs.is_empty() {
            let final_output = mesh_final(&run, &last_substantive);
            return Ok(run.finish(final_output, executed, Termination::Natural));
        }
    }
    let final_output = mesh_final(&run, &last_substantive);
    Ok(run.finish(final_output, max_rounds, Termination::MaxRounds))
}

fn mesh_final(run: &TopologyRun<'_>, last_substantive: &[Option<String>]) -> String {
    let parts: Vec<String> = last_substantive
        .iter()
        .enumerate()
        .filter_map(|(idx, out)| out.as_ref().map(|o| labeled(run.name(idx), o)))
        .collect();
    join_labeled(&parts)
}

/// Ring passing with stability detection: a cycle whose output equals the
/// previous cycle's output (whitespace-normalized) ends the run.
pub fn run_circular(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let n = design.agents.len();
    let max_cycles = effective_max_rounds(design);
    let mut current = prompt.to_string();
    let mut previous_cycle_output: Option<String> = None;
    for cycle in 1..=max_cycles {
        for idx in 0..n {
            let next = (idx + 1) % n;
            current = run.call(
                idx,
                &current,
                cycle,
                Recipients::To(vec![run.name(next).to_string()]),
            )?;
        }
        run.emit(ev::SWARM_ROUND, json!({"cycle": cycle}));
        if let Some(previous) = &previous_cycle_output {
            if normalize_ws(previous) == normalize_ws(&current) {
                return Ok(run.finish(current, cycle, Termination::Natural));
            }
        }
        previous_cycle_output = Some(current.clone());
    }
    Ok(run.finish(current, max_cycles, Termination::MaxRounds))
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 2D cellular refinement over 4-neighbor context (no wraparound); converges
/// when no cell changes its output between consecutive rounds.
pub fn run_grid(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let rows = design.params.grid_rows.expect("validated");
    let cols = design.params.grid_cols.expect("validated");
    let n = design.agents.len();
    let max_rounds = effective_max_rounds(design);

    let items: Vec<(usize, String)> = (0..n).map(|i| (i, prompt.to_string())).collect();
    let results = run.call_batch(&items, 0, Recipients::Broadcast);
    run.emit_agent_results(&items, &results, 0);
    let mut prev: Vec<String> = Vec::with_capacity(n);
    let mut alive: Vec<bool> = Vec::with_capacity(n);
    for result in results {
        match result {
            Ok(output) => {
                prev.push(output);
                alive.push(true);
            }
            Err(_) => {
                prev.push(String::new());
                alive.push(false);
            }
        }
    }
    run.emit(ev::SWARM_ROUND, json!({"round": 0}));
    let mut executed = 1u32;

    while executed < max_rounds {
        let round = executed;
        let items: Vec<(usize, String)> = (0..n)
            .filter(|i| alive[*i])
            .map(|i| {
                let row = i / cols;
                let col = i % cols;
                let mut context_lines = vec![format!("own: {}", prev[i])];
                let mut push_neighbor = |label: &str, r: isize, c: isize| {
                    if r >= 0 && (r as usize) < rows && c >= 0 && (c as usize) < cols {
                        let j = r as usize * cols + c as usize;
                        context_lines.push(format!("{label} {}: {}", run.name(j), prev[j]));
                    }
                };
                push_neighbor("up", row as isize - 1, col as isize);
                push_neighbor("down", row as isize + 1, col as isize);
                push_neighbor("left", row as isize, col as isize - 1);
                push_neighbor("right", row as isize, col as isize + 1);
                (
                    i,
                    format!(
                        "{prompt}\n\nPrevious outputs:\n{}",
                        context_lines.join("\n")
                    ),
                )
            })
            .collect();
        let results = run.call_batch(&items, round, Recipients::Broadcast);
        run.emit_agent_results(&items, &results, round);
        let mut next = prev.clone();
        for ((idx, _), result) in items.iter().zip(results) {
            match result {
                Ok(output) => next[*idx] = output,
                Err(_) => alive[*idx] = false, // failed cell keeps its previous output
            }
        }
        run.emit(ev::SWARM_ROUND, json!({"round": round}));
        executed += 1;
        let stable = next == prev;
        prev = next;
        if stable {
            let final_output = grid_final(&run, &prev);
            return Ok(run.finish(final_output, executed, Termination::Natural));
        }
    }
    let final_output = grid_final(&run, &prev);
    Ok(run.finish(final_output, max_rounds, Termination::MaxRounds))
}

fn grid_final(run: &TopologyRun<'_>, cells: &[String]) -> String {
    let parts: Vec<String> = cells
        .iter()
        .enumerate()
        .map(|(idx, output)| labeled(run.name(idx), output))
        .collect();
    join_labeled(&parts)
}

/// Multi-tree recursive synthesis: leaves run first, parents combine their
/// children's outputs; the final output concatenates the root outputs.
pub fn run_forest(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let levels = forest_levels(design).map_err(TopologyError::Cycle)?;
    let run = TopologyRun::new(design, ctx);
    let n = design.agents.len();
    let names: Vec<&str> = design.agents.iter().map(|a| a.name.as_str()).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (child, parent) in &design.params.tree_parents {
        let c = names.iter().position(|x| x == child).expect("validated");
        let p = names.iter().position(|x| x == parent).expect("validated");
        children[p].push(c);
    }
    for list in &mut children {
        list.sort_unstable();
    }
    let mut outputs: Vec<Option<String>> = vec![None; n];
    for (level_idx, level) in levels.iter().enumerate() {
        let round = level_idx as u32 + 1;
        let items: Vec<(usize, String)> = level
            .iter()
            .map(|&node| {
                let input = if children[node].is_empty() {
                    prompt.to_string()
                } else {
                    let kid_outputs: Vec<String> = children[node]
                        .iter()
                        .map(|&c| labeled(names[c], outputs[c].as_deref().unwrap_or("")))
                        .collect();
                    format!(
                        "{prompt}\n\nSynthesize your team's outputs:\n{}",
                        join_labeled(&kid_outputs)
                    )
                };
                (node, input)
            })
            .collect();
        let results = run.call_batch(&items, round, Recipients::Broadcast);
        run.emit_agent_results(&items, &results, round);
        for ((node, _), result) in items.iter().zip(results) {
            outputs[*node] = Some(result?);
        }
        run.emit(ev::SWARM_ROUND, json!({"round": round}));
    }
    let roots = forest_roots(design);
    let parts: Vec<String> = roots
        .iter()
        .map(|&r| labeled(names[r], outputs[r].as_deref().unwrap_or("")))
        .collect();
    Ok(run.finish(
        join_labeled(&parts),
        levels.len() as u32,
        Termination::Natural,
    ))
}

/// A voter's structured verdict on a proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterVerdict {
    pub approved: bool,
    #[serde(default)]
    pub feedback: String,
}

/// Parses a voter response; anything unparseable counts as a rejection.
pub fn parse_voter_verdict(text: &str) -> VoterVerdict {
    serde_json::from_str::<VoterVerdict>(text.trim()).unwrap_or(VoterVerdict {
        approved: false,
        feedback: "unparseable".to_string(),
    })
}

/// Proposer/voter rounds: the proposal passes once the approval fraction
/// reaches the vote threshold, otherwise the proposer retries with the
/// voters' concatenated feedback.
pub fn run_maker(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    validated(design)?;
    let run = TopologyRun::new(design, ctx);
    let n = design.agents.len();
    let voters = n - 1;
    let threshold = design.params.vote_threshold();
    let max_rounds = effective_max_rounds(design);
    let mut feedback: Option<String> = None;
    let mut proposal = String::new();
    for round in 1..=max_rounds {
        let proposer_input = match &feedback {
            None => prompt.to_string(),
            Some(fb) => format!("{prompt}\n\nVoter feedback:\n{fb}"),
        };
        proposal = run.call(0, &proposer_input, round, Recipients::Broadcast)?;
        let items: Vec<(usize, String)> = (1..n)
            .map(|i| {
                (
                    i,
                    format!(
                        "Vote on this proposal as JSON {{\"approved\": bool, \"feedback\": string}}:\n{proposal}"
                    ),
                )
            })
            .collect();
        let results = run.call_batch(&items, round, Recipients::To(vec![run.name(0).to_string()]));
        run.emit_agent_results(&items, &results, round);
        let mut approvals = 0usize;
        let mut rejections = Vec::new();
        for ((idx, _), result) in items.iter().zip(&results) {
            let verdict = match result {
                Ok(text) => parse_voter_verdict(text),
                Err(err) => VoterVerdict {
                    approved: false,
                    feedback: format!("voter failed: {err}"),
                },
            };
            if verdict.approved {
                approvals += 1;
            } else {
                rejections.push(labeled(run.name(*idx), &verdict.feedback));
            }
        }
        run.emit(
            ev::SWARM_ROUND,
            json!({"round": round, "approvals": approvals, "voters": voters}),
        );
        if approvals as f64 / voters as f64 >= threshold {
            return Ok(run.finish(proposal, round, Termination::Natural));
        }
        feedback = Some(rejections.join("\n"));
    }
    Ok(run.finish(proposal, max_rounds, Termination::MaxRounds))
}

/// Dispatches a validated design to its runner, enforcing mode gates and
/// emitting swarm lifecycle events.
pub fn execute_topology(
    design: &TeamDesign,
    prompt: &str,
    ctx: &TopologyContext<'_>,
    features: Option<&FeatureSet>,
) -> Result<(RunResult, MsgHub), TopologyError> {
    if let Some(features) = features {
        if !features.allows_topology(design.topology) {
            return Err(TopologyError::FeatureGated(design.topology));
        }
    }
    if let Some(bus) = ctx.bus {
        bus.emit(
            ev::SWARM_STARTED,
            ctx.task_id,
            json!({"topology": design.topology.as_str(), "agents": design.agents.len()}),
        )
        .expect("registered");
    }
    let result = match design.topology {
        TopologyKind::Sequential => run_sequential(design, prompt, ctx),
        TopologyKind::Parallel => run_parallel(design, prompt, ctx),
        TopologyKind::Hierarchical => run_hierarchical(design, prompt, ctx),
        TopologyKind::Dag => run_dag(design, prompt, ctx),
        TopologyKind::Mixture => run_mixture(design, prompt, ctx),
        TopologyKind::Debate => run_debate(design, prompt, ctx),
        TopologyKind::Mesh => run_mesh(design, prompt, ctx),
        TopologyKind::Star => run_star(design, prompt, ctx),
        TopologyKind::Circular => run_circular(design, prompt, ctx),
        TopologyKind::Grid => run_grid(design, prompt, ctx),
        TopologyKind::Forest => run_forest(design, prompt, ctx),
        TopologyKind::Maker => run_maker(design, prompt, ctx),
    };
    if let Some(bus) = ctx.bus {
        match &result {
            Ok((run, _)) => bus
                .emit(
                    ev::SWARM_COMPLETED,
                    ctx.task_id,
                    json!({
                        "topology": design.topology.as_str(),
                        "rounds": run.rounds_executed,
                        "termination": run.termination,
                    }),
                )
                .expect("registered"),
            Err(err) => bus
                .emit(
                    ev::SWARM_FAILED,
                    ctx.task_id,
                    json!({"topology": design.topology.as_str(), "error": err.to_string()}),
                )
                .expect("registered"),
        };
    }
    result
}

/// Recomputes the final output from the hub log alone, using each
/// topology's aggregation rule. Used to audit runs after the fact.
pub fn replay_final_output(design: &TeamDesign, hub: &MsgHub) -> Result<String, String> {
    let last_of = |name: &str| -> Option<&str> {
        hub.messages()
            .iter()
            .rev()
            .find(|m| m.sender == name)
            .map(|m| m.content.as_str())
    };
    let names: Vec<&str> = design.agents.iter().map(|a| a.name.as_str()).collect();
    match design.topology {
        TopologyKind::Sequential | TopologyKind::Circular => hub
            .messages()
            .last()
            .map(|m| m.content.clone())
            .ok_or_else(|| "empty hub".to_string()),
        TopologyKind::Parallel => {
            let parts: Vec<String> = names
                .iter()
                .filter_map(|n| last_of(n).map(|c| labeled(n, c)))
                .collect();
            Ok(join_labeled(&parts))
        }
        TopologyKind::Hierarchical
        | TopologyKind::Star
        | TopologyKind::Debate
        | TopologyKind::Maker => last_of(names[0])
            .map(str::to_string)
            .ok_or_else(|| "coordinator never spoke".to_string()),
        TopologyKind::Mixture => last_of(names[names.len() - 1])
            .map(str::to_string)
            .ok_or_else(|| "aggregator never spoke".to_string()),
        TopologyKind::Dag => {
            let has_out: std::collections::BTreeSet<&str> = design
                .params
                .dag_edges
                .iter()
                .map(|(from, _)| from.as_str())
                .collect();
            let parts: Vec<String> = names
                .iter()
                .filter(|n| !has_out.contains(*n))
                .map(|n| labeled(n, last_of(n).unwrap_or("")))
                .collect();
            Ok(join_labeled(&parts))
        }
        TopologyKind::Mesh => {
            let parts: Vec<String> = names
                .iter()
                .filter_map(|n| {
                    hub.messages()
                        .iter()
                        .rev()
                        .find(|m| m.sender == *n && m.content.trim() != MARKER_NO_UPDATE)
                        .map(|m| labeled(n, &m.content))
                })
                .collect();
            Ok(join_labeled(&parts))
        }
        TopologyKind::Grid => {
            let parts: Vec<String> = names
                .iter()
                .map(|n| labeled(n, last_of(n).unwrap_or("")))
                .collect();
            Ok(join_labeled(&parts))
        }
        TopologyKind::Forest => {
            let roots = forest_roots(design);
            let parts: Vec<String> = roots
                .iter()
                .map(|&r| labeled(names[r], last_of(names[r]).unwrap_or("")))
                .collect();
            Ok(join_labeled(&parts))
        }
    }
}
