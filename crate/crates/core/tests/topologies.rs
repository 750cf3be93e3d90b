//! Integration tests for the twelve topology runners: termination, spec'd
//! aggregation rules, failure semantics, determinism under shuffled
//! completion order, and hub-log replay.

use std::sync::Arc;

use orchid::cost::CostTracker;
use orchid::harness::{ScenarioScript, ScriptedExecutor};
use orchid::mode::gate_features;
use orchid::router::catalog::{model, Catalog};
use orchid::task::{AgentSpec, Mode, TeamDesign};
use orchid::topology::{
    execute_topology, replay_final_output, run_circular, run_dag, run_debate, run_forest, run_grid,
    run_hierarchical, run_maker, run_mesh, run_mixture, run_parallel, run_sequential, run_star,
    AgentCall, AgentExecutor, AgentFailure, AgentResponse, Termination, ToolRegistry,
    TopologyContext, TopologyError, TopologyKind, TopologyParams,
};
use orchid::usd::Usd;

type ExecFn =
    dyn Fn(&AgentSpec, &str, &AgentCall) -> Result<AgentResponse, AgentFailure> + Send + Sync;

/// Closure-backed executor for composition-style scripts.
struct FnExecutor(Box<ExecFn>);

impl FnExecutor {
    fn new(
        f: impl Fn(&AgentSpec, &str, &AgentCall) -> Result<AgentResponse, AgentFailure>
            + Send
            + Sync
            + 'static,
    ) -> FnExecutor {
        FnExecutor(Box::new(f))
    }
}

impl AgentExecutor for FnExecutor {
    fn execute(
        &self,
        agent: &AgentSpec,
        prompt: &str,
        call: &AgentCall,
    ) -> Result<AgentResponse, AgentFailure> {
        (self.0)(agent, prompt, call)
    }
}

fn catalog() -> Catalog {
    Catalog::from_models(vec![model("m", 0.5, 1.0, 1.0)], 0, 3600)
}

fn design(kind: TopologyKind, names: &[&str], params: TopologyParams) -> TeamDesign {
    let agents = names
        .iter()
        .map(|n| AgentSpec::new(n, role_of(n), "", "m"))
        .collect();
    TeamDesign::new(agents, kind, params)
}

// "worker-1" has role "worker"; bare names keep themselves as role.
fn role_of(name: &str) -> &str {
    name.split('-').next().unwrap_or(name)
}

fn scripted(json: &str) -> ScriptedExecutor {
    ScriptedExecutor::new(Arc::new(ScenarioScript::from_json(json).unwrap()))
}

macro_rules! ctx {
    ($executor:expr, $tools:expr, $cost:expr, $catalog:expr) => {
        TopologyContext::new(
            "t",
            $executor,
            $tools,
            $cost,
            $catalog,
            Usd::from_dollars(1.0),
        )
    };
}

struct Rig {
    tools: ToolRegistry,
    cost: CostTracker,
    catalog: Catalog,
}

impl Rig {
    fn new() -> Rig {
        Rig {
            tools: ToolRegistry::with_builtins(),
            cost: CostTracker::new(),
            catalog: catalog(),
        }
    }

    fn ctx<'a>(&'a self, executor: &'a dyn AgentExecutor) -> TopologyContext<'a> {
        ctx!(executor, &self.tools, &self.cost, &self.catalog)
    }
}

#[test]
fn sequential_is_left_fold_of_agent_functions() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, prompt, _| {
        Ok(AgentResponse::text(format!("{prompt}+{}", agent.name)))
    });
    let d = design(
        TopologyKind::Sequential,
        &["a", "b"],
        TopologyParams::default(),
    );
    let (result, hub) = run_sequential(&d, "x", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.final_output, "x+a+b");
    assert_eq!(result.rounds_executed, 2);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(replay_final_output(&d, &hub).unwrap(), "x+a+b");

    // Chain of one.
    let single = design(TopologyKind::Sequential, &["a"], TopologyParams::default());
    let (result, _) = run_sequential(&single, "x", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.final_output, "x+a");
}

#[test]
fn sequential_abort_keeps_earlier_costs() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, prompt, _| {
        if agent.name == "b" {
            Err(AgentFailure {
                agent: "b".into(),
                turn: 1,
                reason: "scripted".into(),
            })
        } else {
            Ok(AgentResponse {
                text: format!("{prompt}+a"),
                tool_requests: vec![],
                tokens_in: 1000,
                tokens_out: 1000,
            })
        }
    });
    let d = design(
        TopologyKind::Sequential,
        &["a", "b"],
        TopologyParams::default(),
    );
    let err = run_sequential(&d, "x", &rig.ctx(&exec)).unwrap_err();
    assert_eq!(err.failed_agent(), Some("b"));
    assert!(rig.cost.total("t") > Usd::ZERO); // a's spend is already recorded
}

#[test]
fn parallel_aggregates_in_declaration_order_under_shuffled_completion() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, _, _| {
        // Random sleep shuffles completion order between runs.
        std::thread::sleep(std::time::Duration::from_millis(
            (rand::random::<u64>() % 8) + 1,
        ));
        Ok(AgentResponse::text(format!("out-{}", agent.name)))
    });
    let d = design(
        TopologyKind::Parallel,
        &["a", "b", "c"],
        TopologyParams::default(),
    );
    let (first, hub) = run_parallel(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(first.final_output, "a: out-a\nb: out-b\nc: out-c");
    assert_eq!(replay_final_output(&d, &hub).unwrap(), first.final_output);
    let (second, _) = run_parallel(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(first, second);
}

#[test]
fn parallel_settles_partial_failures() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, _, _| {
        if agent.name == "b" {
            Err(AgentFailure {
                agent: "b".into(),
                turn: 1,
                reason: "down".into(),
            })
        } else {
            Ok(AgentResponse::text(format!("out-{}", agent.name)))
        }
    });
    let d = design(
        TopologyKind::Parallel,
        &["a", "b", "c"],
        TopologyParams::default(),
    );
    let (result, _) = run_parallel(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.final_output, "a: out-a\nc: out-c");
    assert_eq!(result.termination, Termination::Natural);
    assert!(result.outcomes[1].failed);
    assert_eq!(result.outcomes.iter().filter(|o| !o.failed).count(), 2);

    // Everyone failing is an error.
    let all_fail = FnExecutor::new(|agent, _, _| {
        Err(AgentFailure {
            agent: agent.name.clone(),
            turn: 1,
            reason: "down".into(),
        })
    });
    let err = run_parallel(&d, "p", &rig.ctx(&all_fail)).unwrap_err();
    assert!(matches!(err, TopologyError::AllAgentsFailed));
}

#[test]
fn hierarchical_review_loop() {
    let rig = Rig::new();
    // Manager approves the first merge.
    let exec = scripted(
        r#"{"agents": [
            {"agent": "manager", "round": 0, "responses": [{"text": "subtask one\nsubtask two"}]},
            {"agent": "manager", "responses": [{"text": "merged fine APPROVED"}]},
            {"agent": "worker", "responses": [{"text": "did my part"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Hierarchical,
        &["manager", "worker-1", "worker-2"],
        TopologyParams::default(),
    );
    let (result, hub) = run_hierarchical(&d, "task", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 1);
    assert_eq!(result.termination, Termination::Natural);
    assert!(result.final_output.contains("APPROVED"));
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // Manager never approves: capped at 3 review rounds.
    let exec = scripted(
        r#"{"agents": [
            {"agent": "manager", "round": 0, "responses": [{"text": "subtasks"}]},
            {"agent": "manager", "responses": [{"text": "not satisfied"}]},
            {"agent": "worker", "responses": [{"text": "attempt"}]}
        ]}"#,
    );
    let (result, _) = run_hierarchical(&d, "task", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 3);
    assert_eq!(result.termination, Termination::MaxRounds);

    // Zero workers is an arity violation.
    let solo = design(
        TopologyKind::Hierarchical,
        &["manager"],
        TopologyParams::default(),
    );
    assert!(matches!(
        run_hierarchical(&solo, "task", &rig.ctx(&exec)).unwrap_err(),
        TopologyError::Invalid(_)
    ));
}

#[test]
fn hierarchical_worker_failures_become_notes() {
    let rig = Rig::new();
    let exec = scripted(
        r#"{"agents": [
            {"agent": "manager", "round": 0, "responses": [{"text": "split"}]},
            {"agent": "manager", "responses": [{"text": "noted the failure APPROVED"}]},
            {"agent": "worker-1", "fail": "worker crash"},
            {"agent": "worker-2", "responses": [{"text": "ok"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Hierarchical,
        &["manager", "worker-1", "worker-2"],
        TopologyParams::default(),
    );
    let (result, _) = run_hierarchical(&d, "task", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.termination, Termination::Natural);
    assert!(result.outcomes[1].failed);
}

#[test]
fn dag_diamond_feeds_sink_from_both_branches() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, prompt, _| {
        Ok(AgentResponse::text(match agent.name.as_str() {
            "a" => "root-out".to_string(),
            "d" => format!("sink saw: {prompt}"),
            other => format!("{other}-out"),
        }))
    });
    let d = design(
        TopologyKind::Dag,
        &["a", "b", "c", "d"],
        TopologyParams::dag(&[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]),
    );
    let (result, hub) = run_dag(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 3); // three levels
    assert!(result.final_output.contains("b-out"));
    assert!(result.final_output.contains("c-out"));
    assert!(result.final_output.starts_with("d: "));
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // Edgeless graph: one level, equivalent to parallel.
    let flat = design(
        TopologyKind::Dag,
        &["a", "b", "c"],
        TopologyParams::default(),
    );
    let echo =
        FnExecutor::new(|agent, _, _| Ok(AgentResponse::text(format!("out-{}", agent.name))));
    let (result, _) = run_dag(&flat, "p", &rig.ctx(&echo)).unwrap();
    assert_eq!(result.rounds_executed, 1);
    assert_eq!(result.final_output, "a: out-a\nb: out-b\nc: out-c");

    // Cycles are rejected before any execution.
    let cyclic = design(
        TopologyKind::Dag,
        &["a", "b"],
        TopologyParams::dag(&[("a", "b"), ("b", "a")]),
    );
    assert!(matches!(
        run_dag(&cyclic, "p", &rig.ctx(&echo)).unwrap_err(),
        TopologyError::Cycle(_)
    ));
}

#[test]
fn dag_levels_match_brute_force_longest_path_on_random_graphs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let n = rng.gen_range(2..=8usize);
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.35) {
                    edges.push((names[i].clone(), names[j].clone()));
                }
            }
        }
        let d = TeamDesign::new(
            names
                .iter()
                .map(|x| AgentSpec::new(x, x, "", "m"))
                .collect(),
            TopologyKind::Dag,
            TopologyParams {
                dag_edges: edges.clone(),
                ..Default::default()
            },
        );
        // Brute force: longest path ending at each node by recursion.
        fn depth_of(node: usize, preds: &Vec<Vec<usize>>) -> usize {
            preds[node]
                .iter()
                .map(|&p| depth_of(p, preds) + 1)
                .max()
                .unwrap_or(0)
        }
        let index = |name: &str| names.iter().position(|x| x == name).unwrap();
        let mut preds = vec![Vec::new(); n];
        for (from, to) in &edges {
            preds[index(to)].push(index(from));
        }
        let levels = orchid::topology::dag_levels(&d).unwrap();
        for (level_idx, level) in levels.iter().enumerate() {
            for &node in level {
                assert_eq!(depth_of(node, &preds), level_idx, "node {node}");
            }
        }
    }
}

#[test]
fn mixture_aggregator_sees_generator_outputs() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, prompt, _| {
        Ok(AgentResponse::text(if agent.role == "aggregator" {
            format!("combined << {prompt} >>")
        } else {
            format!("idea-{}", agent.name)
        }))
    });
    let d = design(
        TopologyKind::Mixture,
        &["gen-1", "gen-2", "aggregator"],
        TopologyParams::default(),
    );
    let (result, hub) = run_mixture(&d, "p", &rig.ctx(&exec)).unwrap();
    assert!(result.final_output.contains("idea-gen-1"));
    assert!(result.final_output.contains("idea-gen-2"));
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // Minimal arity: one generator.
    let minimal = design(
        TopologyKind::Mixture,
        &["gen-1", "aggregator"],
        TopologyParams::default(),
    );
    let (result, _) = run_mixture(&minimal, "p", &rig.ctx(&exec)).unwrap();
    assert!(result.final_output.contains("idea-gen-1"));

    // Single agent violates arity.
    let solo = design(
        TopologyKind::Mixture,
        &["aggregator"],
        TopologyParams::default(),
    );
    assert!(matches!(
        run_mixture(&solo, "p", &rig.ctx(&exec)).unwrap_err(),
        TopologyError::Invalid(_)
    ));
}

#[test]
fn debate_terminates_on_consensus_token() {
    let rig = Rig::new();
    let exec = scripted(
        r#"{"agents": [
            {"agent": "proposer", "responses": [{"text": "proposal v1"}]},
            {"agent": "critic", "round": 1, "responses": [{"text": "weak intro"}]},
            {"agent": "critic", "round": 2, "responses": [{"text": "fine. CONSENSUS"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Debate,
        &["proposer", "critic"],
        TopologyParams::default(),
    );
    let (result, hub) = run_debate(&d, "topic", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 2);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(result.final_output, "proposal v1");
    assert_eq!(replay_final_output(&d, &hub).unwrap(), "proposal v1");

    // A critic that never consents caps at five rounds.
    let exec = scripted(
        r#"{"agents": [
            {"agent": "proposer", "responses": [{"text": "proposal"}]},
            {"agent": "critic", "responses": [{"text": "still weak"}]}
        ]}"#,
    );
    let (result, _) = run_debate(&d, "topic", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 5);
    assert_eq!(result.termination, Termination::MaxRounds);

    // Exactly two agents required.
    let trio = design(
        TopologyKind::Debate,
        &["proposer", "critic", "judge"],
        TopologyParams::default(),
    );
    assert!(matches!(
        run_debate(&trio, "topic", &rig.ctx(&exec)).unwrap_err(),
        TopologyError::Invalid(_)
    ));
}

#[test]
fn mesh_converges_when_everyone_stops_updating() {
    let rig = Rig::new();
    let exec = scripted(
        r#"{"agents": [
            {"agent": "peer", "round": 0, "responses": [{"text": "thought"}]},
            {"agent": "peer", "responses": [{"text": "NO_UPDATE"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Mesh,
        &["peer-1", "peer-2", "peer-3"],
        TopologyParams::default(),
    );
    let (result, hub) = run_mesh(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 2);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(
        result.final_output,
        "peer-1: thought\npeer-2: thought\npeer-3: thought"
    );
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // Constant revision hits the four-round cap (echo always differs).
    let echo = ScriptedExecutor::new(Arc::new(ScenarioScript::default()));
    let (result, _) = run_mesh(&d, "p", &rig.ctx(&echo)).unwrap();
    assert_eq!(result.rounds_executed, 4);
    assert_eq!(result.termination, Termination::MaxRounds);
}

#[test]
fn mesh_failure_is_permanent_silence() {
    let rig = Rig::new();
    let exec = scripted(
        r#"{"agents": [
            {"agent": "peer-1", "fail": "down"},
            {"agent": "peer-2", "round": 0, "responses": [{"text": "solo thought"}]},
            {"agent": "peer-2", "responses": [{"text": "NO_UPDATE"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Mesh,
        &["peer-1", "peer-2"],
        TopologyParams::default(),
    );
    let (result, _) = run_mesh(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(result.final_output, "peer-2: solo thought");
    assert!(result.outcomes[0].failed);
}

#[test]
fn star_hub_declares_done() {
    let rig = Rig::new();
    let exec = scripted(
        r#"{"agents": [
            {"agent": "hub", "round": 0, "responses": [{"text": "fetch\nsummarize"}]},
            {"agent": "hub", "responses": [{"text": "synthesis complete DONE"}]},
            {"agent": "spoke", "responses": [{"text": "spoke result"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Star,
        &["hub", "spoke-1", "spoke-2"],
        TopologyParams::default(),
    );
    let (result, hub) = run_star(&d, "task", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 1);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // Hub never declares done: three dispatch rounds.
    let exec = scripted(
        r#"{"agents": [
            {"agent": "hub", "round": 0, "responses": [{"text": "split"}]},
            {"agent": "hub", "responses": [{"text": "keep going"}]},
            {"agent": "spoke", "responses": [{"text": "partial"}]}
        ]}"#,
    );
    let (result, _) = run_star(&d, "task", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 3);
    assert_eq!(result.termination, Termination::MaxRounds);

    let solo = design(TopologyKind::Star, &["hub"], TopologyParams::default());
    assert!(matches!(
        run_star(&solo, "task", &rig.ctx(&exec)).unwrap_err(),
        TopologyError::Invalid(_)
    ));
}

#[test]
fn circular_detects_stability_across_cycles() {
    let rig = Rig::new();
    // Fixed point from cycle 2 onward: cycles 1 and 2 both end with "v".
    let exec = scripted(r#"{"agents": [{"agent": "editor", "responses": [{"text": "v"}]}]}"#);
    let d = design(
        TopologyKind::Circular,
        &["editor-1", "editor-2", "editor-3"],
        TopologyParams::default(),
    );
    let (result, hub) = run_circular(&d, "draft", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 2);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(result.final_output, "v");
    assert_eq!(replay_final_output(&d, &hub).unwrap(), "v");

    // Identity scripts: cycle 1 output equals cycle 2 output.
    let identity = FnExecutor::new(|_, prompt, _| Ok(AgentResponse::text(prompt.to_string())));
    let (result, _) = run_circular(&d, "draft", &rig.ctx(&identity)).unwrap();
    assert_eq!(result.rounds_executed, 2);
    assert_eq!(result.final_output, "draft");

    // Never stabilizes (echo keeps changing): three cycles.
    let echo = ScriptedExecutor::new(Arc::new(ScenarioScript::default()));
    let (result, _) = run_circular(&d, "draft", &rig.ctx(&echo)).unwrap();
    assert_eq!(result.rounds_executed, 3);
    assert_eq!(result.termination, Termination::MaxRounds);

    // Stability comparison is whitespace-normalized.
    let spaced = FnExecutor::new(|_, _, call| {
        Ok(AgentResponse::text(if call.round % 2 == 0 {
            "stable  text".to_string()
        } else {
            "stable text".to_string()
        }))
    });
    let (result, _) = run_circular(&d, "draft", &rig.ctx(&spaced)).unwrap();
    assert_eq!(result.termination, Termination::Natural);
}

#[test]
fn grid_stabilizes_with_a_detection_round() {
    let rig = Rig::new();
    // Round 0 seeds differ from the settled value; detection needs one
    // confirming round: natural termination at round 3.
    let exec = scripted(
        r#"{"agents": [
            {"agent": "cell", "round": 0, "responses": [{"text": "seed"}]},
            {"agent": "cell", "responses": [{"text": "settled"}]}
        ]}"#,
    );
    let d = design(
        TopologyKind::Grid,
        &["cell-00", "cell-01", "cell-10", "cell-11"],
        TopologyParams::grid(2, 2),
    );
    let (result, hub) = run_grid(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 3);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(
        result.final_output,
        "cell-00: settled\ncell-01: settled\ncell-10: settled\ncell-11: settled"
    );
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // Degenerate 1x1 grid: one agent, zero neighbors, stable at round 2.
    let single = design(TopologyKind::Grid, &["cell-00"], TopologyParams::grid(1, 1));
    let constant =
        scripted(r#"{"agents": [{"agent": "cell-00", "responses": [{"text": "alone"}]}]}"#);
    let (result, _) = run_grid(&single, "p", &rig.ctx(&constant)).unwrap();
    assert_eq!(result.rounds_executed, 2);
    assert_eq!(result.termination, Termination::Natural);

    // Oscillating cells (echo mutates every round) hit the cap of 5.
    let echo = ScriptedExecutor::new(Arc::new(ScenarioScript::default()));
    let (result, _) = run_grid(&d, "p", &rig.ctx(&echo)).unwrap();
    assert_eq!(result.rounds_executed, 5);
    assert_eq!(result.termination, Termination::MaxRounds);

    // Dimension mismatch is a design error.
    let bad = design(
        TopologyKind::Grid,
        &["c00", "c01", "c10"],
        TopologyParams::grid(2, 2),
    );
    assert!(matches!(
        run_grid(&bad, "p", &rig.ctx(&echo)).unwrap_err(),
        TopologyError::Invalid(_)
    ));
}

#[test]
fn grid_neighbors_are_four_connected_without_wraparound() {
    let rig = Rig::new();
    // Record the neighbor context each cell receives in round 1.
    let exec = FnExecutor::new(|agent, prompt, call| {
        Ok(AgentResponse::text(if call.round == 0 {
            format!("v-{}", agent.name)
        } else {
            format!("ctx[{prompt}]")
        }))
    });
    let d = design(
        TopologyKind::Grid,
        &["c00", "c01", "c10", "c11"],
        TopologyParams::grid(2, 2),
    );
    let (result, _) = run_grid(&d, "p", &rig.ctx(&exec)).unwrap();
    // Corner cell c00 sees down (c10) and right (c01) but not c11.
    let c00_output = &result.outcomes[0].outputs[1];
    assert!(c00_output.contains("own: v-c00"));
    assert!(c00_output.contains("down c10: v-c10"));
    assert!(c00_output.contains("right c01: v-c01"));
    assert!(!c00_output.contains("v-c11"));
}

#[test]
fn forest_roots_synthesize_their_leaves() {
    let rig = Rig::new();
    let exec = FnExecutor::new(|agent, prompt, _| {
        Ok(AgentResponse::text(if agent.role == "root" {
            format!("synthesis[{}]", prompt.replace('\n', " "))
        } else {
            format!("leaf-{}", agent.name)
        }))
    });
    let d = design(
        TopologyKind::Forest,
        &[
            "root-a", "leaf-a1", "leaf-a2", "root-b", "leaf-b1", "leaf-b2",
        ],
        TopologyParams::forest(&[
            ("leaf-a1", "root-a"),
            ("leaf-a2", "root-a"),
            ("leaf-b1", "root-b"),
            ("leaf-b2", "root-b"),
        ]),
    );
    let (result, hub) = run_forest(&d, "p", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 2);
    let lines: Vec<&str> = result.final_output.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("root-a: synthesis["));
    assert!(lines[0].contains("leaf-leaf-a1"));
    assert!(lines[0].contains("leaf-leaf-a2"));
    assert!(lines[1].starts_with("root-b: synthesis["));
    assert_eq!(replay_final_output(&d, &hub).unwrap(), result.final_output);

    // A forest of isolated roots behaves like parallel.
    let flat = design(
        TopologyKind::Forest,
        &["r1", "r2", "r3"],
        TopologyParams::default(),
    );
    let echo =
        FnExecutor::new(|agent, _, _| Ok(AgentResponse::text(format!("out-{}", agent.name))));
    let (result, _) = run_forest(&flat, "p", &rig.ctx(&echo)).unwrap();
    assert_eq!(result.rounds_executed, 1);
    assert_eq!(result.final_output, "r1: out-r1\nr2: out-r2\nr3: out-r3");

    // Self-parenting is a cycle.
    let cyclic = design(
        TopologyKind::Forest,
        &["a"],
        TopologyParams::forest(&[("a", "a")]),
    );
    assert!(matches!(
        run_forest(&cyclic, "p", &rig.ctx(&echo)).unwrap_err(),
        TopologyError::Cycle(_)
    ));
}

#[test]
fn maker_threshold_arithmetic() {
    let rig = Rig::new();
    let vote = |approved: bool| format!(r#"{{"approved": {approved}, "feedback": "because"}}"#);
    // 3 voters, votes (A, A, R): 2/3 >= 0.66 passes in round 1.
    let exec = scripted(&format!(
        r#"{{"agents": [
            {{"agent": "proposer", "responses": [{{"text": "the proposal"}}]}},
            {{"agent": "voter-1", "responses": [{{"text": "{}"}}]}},
            {{"agent": "voter-2", "responses": [{{"text": "{}"}}]}},
            {{"agent": "voter-3", "responses": [{{"text": "{}"}}]}}
        ]}}"#,
        vote(true).replace('"', "\\\""),
        vote(true).replace('"', "\\\""),
        vote(false).replace('"', "\\\"")
    ));
    let d = design(
        TopologyKind::Maker,
        &["proposer", "voter-1", "voter-2", "voter-3"],
        TopologyParams::default(),
    );
    let (result, hub) = run_maker(&d, "make it", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.rounds_executed, 1);
    assert_eq!(result.termination, Termination::Natural);
    assert_eq!(result.final_output, "the proposal");
    assert_eq!(replay_final_output(&d, &hub).unwrap(), "the proposal");

    // 4 voters, votes (A, A, R, R): 0.5 < 0.66 keeps retrying to the cap.
    let exec = scripted(&format!(
        r#"{{"agents": [
            {{"agent": "proposer", "responses": [{{"text": "the proposal"}}]}},
            {{"agent": "voter-1", "responses": [{{"text": "{a}"}}]}},
            {{"agent": "voter-2", "responses": [{{"text": "{a}"}}]}},
            {{"agent": "voter-3", "responses": [{{"text": "{r}"}}]}},
            {{"agent": "voter-4", "responses": [{{"text": "{r}"}}]}}
        ]}}"#,
        a = vote(true).replace('"', "\\\""),
        r = vote(false).replace('"', "\\\"")
    ));
    let d4 = design(
        TopologyKind::Maker,
        &["proposer", "voter-1", "voter-2", "voter-3", "voter-4"],
        TopologyParams::default(),
    );
    let (result, _) = run_maker(&d4, "make it", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.termination, Termination::MaxRounds);
    assert_eq!(result.rounds_executed, 5);

    // Unparseable voter output counts as a rejection.
    let exec = scripted(
        r#"{"agents": [
            {"agent": "proposer", "responses": [{"text": "the proposal"}]},
            {"agent": "voter", "responses": [{"text": "LGTM!!"}]}
        ]}"#,
    );
    let d2 = design(
        TopologyKind::Maker,
        &["proposer", "voter-1", "voter-2"],
        TopologyParams {
            max_rounds: Some(1),
            ..Default::default()
        },
    );
    let (result, _) = run_maker(&d2, "make it", &rig.ctx(&exec)).unwrap();
    assert_eq!(result.termination, Termination::MaxRounds);
}

#[test]
fn maker_never_accepts_below_threshold_exhaustive() {
    let rig = Rig::new();
    // All vote combinations for 2..=5 voters against the plain fraction
    // check (the brute-force oracle).
    for voters in 2..=5usize {
        for mask in 0..(1u32 << voters) {
            let approvals = mask.count_ones() as usize;
            let names: Vec<String> = std::iter::once("proposer".to_string())
                .chain((0..voters).map(|i| format!("voter-{i}")))
                .collect();
            let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let exec = FnExecutor::new(move |agent, _, _| {
                Ok(AgentResponse::text(if agent.role == "proposer" {
                    "proposal".to_string()
                } else {
                    let idx: u32 = agent.name.split('-').nth(1).unwrap().parse().unwrap();
                    let approved = mask & (1 << idx) != 0;
                    format!(r#"{{"approved": {approved}, "feedback": "f"}}"#)
                }))
            });
            let d = design(
                TopologyKind::Maker,
                &name_refs,
                TopologyParams {
                    max_rounds: Some(1),
                    ..Default::default()
                },
            );
            let (result, _) = run_maker(&d, "p", &rig.ctx(&exec)).unwrap();
            let oracle_passes = approvals as f64 / voters as f64 >= 0.66;
            let passed = result.termination == Termination::Natural;
            assert_eq!(
                passed, oracle_passes,
                "{approvals}/{voters} approvals: runner {passed}, oracle {oracle_passes}"
            );
        }
    }
}

#[test]
fn dispatcher_gates_topologies_by_mode() {
    let rig = Rig::new();
    let echo = ScriptedExecutor::new(Arc::new(ScenarioScript::default()));
    let companion = gate_features(Mode::Companion);
    let power = gate_features(Mode::Power);

    let grid = design(
        TopologyKind::Grid,
        &["c00", "c01", "c10", "c11"],
        TopologyParams::grid(2, 2),
    );
    // Power mode dispatches to the grid runner.
    let (result, _) = execute_topology(&grid, "p", &rig.ctx(&echo), Some(&power)).unwrap();
    assert!(result.rounds_executed >= 1);
    // Companion mode gates it off.
    let err = execute_topology(&grid, "p", &rig.ctx(&echo), Some(&companion)).unwrap_err();
    assert!(matches!(
        err,
        TopologyError::FeatureGated(TopologyKind::Grid)
    ));

    // Sequential runs in companion mode.
    let seq = design(TopologyKind::Sequential, &["a"], TopologyParams::default());
    assert!(execute_topology(&seq, "p", &rig.ctx(&echo), Some(&companion)).is_ok());
}

#[test]
fn all_twelve_topologies_terminate_within_their_round_caps() {
    let rig = Rig::new();
    let echo = ScriptedExecutor::new(Arc::new(ScenarioScript::default()));
    for kind in TopologyKind::ALL {
        let d = template(kind);
        let (result, _) = execute_topology(&d, "task", &rig.ctx(&echo), None)
            .unwrap_or_else(|e| panic!("{kind:?}: {e}"));
        let cap = orchid::topology::effective_max_rounds(&d);
        assert!(
            result.rounds_executed <= cap,
            "{kind:?} ran {} rounds over cap {cap}",
            result.rounds_executed
        );
    }
}

/// A small valid design for each topology.
fn template(kind: TopologyKind) -> TeamDesign {
    match kind {
        TopologyKind::Grid => design(
            TopologyKind::Grid,
            &["c00", "c01", "c10", "c11"],
            TopologyParams::grid(2, 2),
        ),
        TopologyKind::Dag => design(
            TopologyKind::Dag,
            &["a", "b", "c", "d"],
            TopologyParams::dag(&[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]),
        ),
        TopologyKind::Forest => design(
            TopologyKind::Forest,
            &["root-a", "leaf-a1", "root-b", "leaf-b1"],
            TopologyParams::forest(&[("leaf-a1", "root-a"), ("leaf-b1", "root-b")]),
        ),
        TopologyKind::Debate => design(
            TopologyKind::Debate,
            &["proposer", "critic"],
            TopologyParams::default(),
        ),
        TopologyKind::Maker => design(
            TopologyKind::Maker,
            &["proposer", "voter-1", "voter-2"],
            TopologyParams::default(),
        ),
        TopologyKind::Hierarchical => design(
            TopologyKind::Hierarchical,
            &["manager", "worker-1", "worker-2"],
            TopologyParams::default(),
        ),
        TopologyKind::Star => design(
            TopologyKind::Star,
            &["hub", "spoke-1", "spoke-2"],
            TopologyParams::default(),
        ),
        TopologyKind::Mixture => design(
            TopologyKind::Mixture,
            &["gen-1", "gen-2", "aggregator"],
            TopologyParams::default(),
        ),
        other => design(other, &["a", "b", "c"], TopologyParams::default()),
    }
}

#[test]
fn grid_and_mesh_results_are_completion_order_independent() {
    let rig = Rig::new();
    let sleepy = FnExecutor::new(|agent, _, call| {
        std::thread::sleep(std::time::Duration::from_millis(
            (rand::random::<u64>() % 6) + 1,
        ));
        Ok(AgentResponse::text(format!(
            "{}r{}",
            agent.name, call.round
        )))
    });
    let grid = design(
        TopologyKind::Grid,
        &["c00", "c01", "c10", "c11"],
        TopologyParams::grid(2, 2),
    );
    let (a, _) = run_grid(&grid, "p", &rig.ctx(&sleepy)).unwrap();
    let (b, _) = run_grid(&grid, "p", &rig.ctx(&sleepy)).unwrap();
    assert_eq!(a, b);

    let mesh = design(
        TopologyKind::Mesh,
        &["peer-1", "peer-2", "peer-3"],
        TopologyParams::default(),
    );
    let (a, _) = run_mesh(&mesh, "p", &rig.ctx(&sleepy)).unwrap();
    let (b, _) = run_mesh(&mesh, "p", &rig.ctx(&sleepy)).unwrap();
    assert_eq!(a, b);
}
