//! End-to-end pipeline tests: the 12-step grammar, the redesign loop and
//! escalation, security blocking, contract fail-fast, steering, and
//! checkpoint recovery.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use orchid::config::Config;
use orchid::event::types as ev;
use orchid::harness::{engine_from_config, panel_from_config, ScenarioScript, ScriptedExecutor};
use orchid::orchestrator::SteeringCommand;
use orchid::orchestrator::{Engine, EngineBuilder, EngineError, RunOptions, TaskStatus};
use orchid::task::{Mode, TaskSpec, TaskType};
use orchid::topology::{AgentCall, AgentExecutor, AgentFailure, AgentResponse, TopologyKind};
use orchid::usd::Usd;

fn test_config(dir: &std::path::Path) -> Config {
    Config {
        out_dir: dir.to_path_buf(),
        steering_poll_ms: 5,
        pause_timeout_ms: 60_000,
        ..Default::default()
    }
}

fn spec(id: &str, prompt: &str) -> TaskSpec {
    TaskSpec {
        id: id.to_string(),
        prompt: prompt.to_string(),
        task_type: TaskType::Custom,
        budget: Usd::from_dollars(1.0),
        mode: Mode::Power,
    }
}

/// Steps extracted from task:step events.
fn step_sequence(engine: &Engine, task_id: &str) -> Vec<u64> {
    engine
        .bus()
        .task_log(task_id)
        .into_iter()
        .filter(|e| e.event_type == ev::TASK_STEP)
        .map(|e| e.payload["step"].as_u64().unwrap())
        .collect()
}

/// The pipeline grammar: 1 2 (3 4 5 6 7)+ 8 9 10 11 12.
fn assert_step_grammar(steps: &[u64], passes: usize) {
    let mut expected = vec![1, 2];
    for _ in 0..passes {
        expected.extend([3, 4, 5, 6, 7]);
    }
    expected.extend([8, 9, 10, 11, 12]);
    assert_eq!(steps, expected.as_slice(), "step grammar mismatch");
}

#[test]
fn approved_first_round_walks_all_twelve_steps() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    let result = engine
        .run_task(spec("t1", "summarize the incident"))
        .unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    assert_eq!(result.redesign_count, 0);
    assert!(result.final_output.is_some());
    assert_step_grammar(&step_sequence(&engine, "t1"), 1);

    // Result artifacts exist and the checkpoint is cleaned up.
    let run_dir = engine.run_dir("t1");
    assert!(run_dir.join("final.txt").exists());
    assert!(run_dir.join("result.json").exists());
    assert!(run_dir.join("events.jsonl").exists());
    assert!(!run_dir.join("checkpoint.json").exists());
    let state = engine.status("t1").unwrap();
    assert_eq!(state.status, TaskStatus::Completed);
}

#[test]
fn rejecting_judges_drive_redesigns_then_escalation() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ScenarioScript::from_json(r#"{"default_judge": {"score": 0.2}}"#).unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine.run_task(spec("t1", "do something hard")).unwrap();
    assert_eq!(result.status, TaskStatus::PendingHumanReview);
    assert_eq!(result.redesign_count, 5);
    assert_step_grammar(&step_sequence(&engine, "t1"), 5);
    let types = engine.bus().task_event_types("t1");
    assert!(types.contains(&ev::TASK_ESCALATED.to_string()));
    // Radical redesigns changed topology away from the initial one.
    let redesigns: Vec<String> = engine
        .bus()
        .task_log("t1")
        .into_iter()
        .filter(|e| e.event_type == ev::FORGE_REDESIGNED)
        .map(|e| e.payload["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(redesigns, vec!["refine", "refine", "radical", "radical"]);
}

#[test]
fn approval_on_second_round_repeats_steps_three_to_seven() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ScenarioScript::from_json(
        r#"{
            "default_judge": {"score": 0.75},
            "judges": [
                {"judge": "judge-frontier", "round": 1, "score": 0.2},
                {"judge": "judge-standard", "round": 1, "score": 0.2},
                {"judge": "judge-light", "round": 1, "score": 0.2}
            ]
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine.run_task(spec("t1", "two round task")).unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    assert_eq!(result.redesign_count, 1);
    assert_step_grammar(&step_sequence(&engine, "t1"), 2);
}

#[test]
fn security_block_fails_fast_with_zero_executions() {
    struct Counting {
        inner: ScriptedExecutor,
        calls: Arc<AtomicU32>,
    }
    impl AgentExecutor for Counting {
        fn execute(
            &self,
            agent: &orchid::task::AgentSpec,
            prompt: &str,
            call: &AgentCall,
        ) -> Result<AgentResponse, AgentFailure> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.execute(agent, prompt, call)
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    config.security.blocked_patterns = vec!["rm -rf".to_string()];
    let calls = Arc::new(AtomicU32::new(0));
    let script = Arc::new(ScenarioScript::default());
    let panel = panel_from_config(&config, &script);
    let engine = EngineBuilder::new()
        .config(config)
        .executor(Arc::new(Counting {
            inner: ScriptedExecutor::new(script),
            calls: calls.clone(),
        }))
        .panel(panel)
        .build();
    let result = engine
        .run_task(spec("t1", "please run rm -rf / now"))
        .unwrap();
    assert_eq!(result.status, TaskStatus::Failed);
    assert_eq!(calls.load(Ordering::SeqCst), 0);
    let steps = step_sequence(&engine, "t1");
    assert_eq!(steps, vec![1, 2, 3, 4, 5]); // stopped at security validation
    let types = engine.bus().task_event_types("t1");
    assert!(types.contains(&ev::SECURITY_BLOCKED.to_string()));
}

#[test]
fn budget_pre_contract_fails_fast_with_zero_executions() {
    struct Counting(Arc<AtomicU32>);
    impl AgentExecutor for Counting {
        fn execute(
            &self,
            _: &orchid::task::AgentSpec,
            _: &str,
            _: &AgentCall,
        ) -> Result<AgentResponse, AgentFailure> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(AgentResponse::text("x"))
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let config = test_config(dir.path());
    let calls = Arc::new(AtomicU32::new(0));
    let script = Arc::new(ScenarioScript::default());
    let panel = panel_from_config(&config, &script);
    let engine = EngineBuilder::new()
        .config(config)
        .executor(Arc::new(Counting(calls.clone())))
        .panel(panel)
        .build();
    let mut task = spec("t1", "a valid prompt");
    task.budget = Usd::ZERO;
    let result = engine.run_task(task).unwrap();
    assert_eq!(result.status, TaskStatus::Failed);
    assert_eq!(calls.load(Ordering::SeqCst), 0);
    assert_eq!(step_sequence(&engine, "t1"), vec![1]);
    let types = engine.bus().task_event_types("t1");
    assert!(types.contains(&ev::CONTRACT_VIOLATION.to_string()));
    assert!(types.contains(&ev::TASK_FAILED.to_string()));
}

#[test]
fn companion_mode_skips_simulation_and_gates_rl() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    config.mode = Mode::Companion;
    let engine = engine_from_config(config, None);
    let result = engine.run_task(TaskSpec {
        mode: Mode::Companion,
        ..spec("t1", "companion task")
    });
    let result = result.unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    let log = engine.bus().task_log("t1");
    let sim_step = log
        .iter()
        .find(|e| e.event_type == ev::TASK_STEP && e.payload["step"] == 4)
        .unwrap();
    assert_eq!(sim_step.payload["skipped"], true);
    let types = engine.bus().task_event_types("t1");
    assert!(!types.contains(&ev::SIMULATION_ESTIMATED.to_string()));
    assert!(!types.contains(&ev::RL_Q_UPDATED.to_string()));
}

#[test]
fn forced_topology_is_honored_and_gated() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    let result = engine
        .run_task_with(
            spec("t1", "debate this"),
            RunOptions {
                forced_topology: Some(TopologyKind::Debate),
                ..Default::default()
            },
        )
        .unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    let designed = engine
        .bus()
        .task_log("t1")
        .into_iter()
        .find(|e| e.event_type == ev::FORGE_DESIGNED)
        .unwrap();
    assert_eq!(designed.payload["topology"], "debate");

    // Companion mode gates grid off entirely.
    let dir2 = tempfile::tempdir().unwrap();
    let mut config = test_config(dir2.path());
    config.mode = Mode::Companion;
    let engine = engine_from_config(config, None);
    let err = engine
        .run_task_with(
            TaskSpec {
                mode: Mode::Companion,
                ..spec("t2", "grid task")
            },
            RunOptions {
                forced_topology: Some(TopologyKind::Grid),
                ..Default::default()
            },
        )
        .unwrap_err();
    assert!(matches!(
        err,
        EngineError::TopologyGated(TopologyKind::Grid)
    ));
}

#[test]
fn pause_then_resume_completes_with_visible_pause() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    // Pre-seed a pause command in the steering file; the pipeline reads it
    // at the first step boundary.
    let steering_path = engine.run_dir("t1").join("steering.jsonl");
    orchid::orchestrator::SteeringController::append_to_file(
        &steering_path,
        &SteeringCommand::Pause,
    )
    .unwrap();
    let result = std::thread::scope(|scope| {
        let resumer = scope.spawn(|| {
            // Wait until the task reports paused, then resume it.
            for _ in 0..1000 {
                if let Some(state) = engine.status("t1") {
                    if state.status == TaskStatus::Paused {
                        engine.steer("t1", SteeringCommand::Resume).unwrap();
                        return true;
                    }
                }
                std::thread::sleep(std::time::Duration::from_millis(2));
            }
            false
        });
        let result = engine.run_task(spec("t1", "pausable task")).unwrap();
        assert!(resumer.join().unwrap(), "task never reported paused");
        result
    });
    assert_eq!(result.status, TaskStatus::Completed);
    let log = engine.bus().task_log("t1");
    let resumed = log
        .iter()
        .find(|e| e.event_type == ev::TASK_RESUMED)
        .expect("resume event");
    assert!(resumed.payload["paused_ms"].as_u64().unwrap() > 0);
}

#[test]
fn pause_timeout_cancels_the_task() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    config.pause_timeout_ms = 100; // scaled down from the 1-hour default
    let engine = engine_from_config(config, None);
    let steering_path = engine.run_dir("t1").join("steering.jsonl");
    orchid::orchestrator::SteeringController::append_to_file(
        &steering_path,
        &SteeringCommand::Pause,
    )
    .unwrap();
    let result = engine.run_task(spec("t1", "never resumed")).unwrap();
    assert_eq!(result.status, TaskStatus::Cancelled);
    let types = engine.bus().task_event_types("t1");
    assert!(types.contains(&ev::TASK_PAUSED.to_string()));
    assert!(types.contains(&ev::TASK_CANCELLED.to_string()));
}

#[test]
fn cancel_stops_before_the_next_step() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    let steering_path = engine.run_dir("t1").join("steering.jsonl");
    orchid::orchestrator::SteeringController::append_to_file(
        &steering_path,
        &SteeringCommand::Cancel,
    )
    .unwrap();
    let result = engine
        .run_task(spec("t1", "cancelled before start"))
        .unwrap();
    assert_eq!(result.status, TaskStatus::Cancelled);
    // Cancelled at the first boundary: no step events at all.
    assert!(step_sequence(&engine, "t1").is_empty());
}

#[test]
fn redirect_restarts_with_new_prompt_and_same_id() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    let steering_path = engine.run_dir("t1").join("steering.jsonl");
    orchid::orchestrator::SteeringController::append_to_file(
        &steering_path,
        &SteeringCommand::Redirect {
            prompt: "write a haiku".to_string(),
        },
    )
    .unwrap();
    let result = engine
        .run_task(spec("t1", "original boring prompt"))
        .unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    assert_eq!(result.task_id, "t1");
    assert_eq!(result.redesign_count, 0);
    let log = engine.bus().task_log("t1");
    assert!(log.iter().any(|e| e.event_type == ev::TASK_REDIRECTED));
    // The redirected prompt reclassified to creative -> debate template.
    let classified = log
        .iter()
        .find(|e| e.event_type == ev::FORGE_CLASSIFIED)
        .unwrap();
    assert_eq!(classified.payload["task_type"], "creative");
    // Step events restart from 1 after the redirect.
    let steps = step_sequence(&engine, "t1");
    assert_step_grammar(&steps, 1);
}

#[test]
fn kill_after_step_six_resumes_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = test_config(dir.path());

    // Uninterrupted reference run.
    let reference = engine_from_config(config.clone(), None);
    let reference_result = reference.run_task(spec("ref", "recoverable task")).unwrap();

    // Interrupted run: kill after step 6, then resume on a fresh engine
    // (simulating a process restart over the same run directory).
    let first = engine_from_config(config.clone(), None);
    let err = first
        .run_task_with(
            spec("t1", "recoverable task"),
            RunOptions {
                abort_after_step: Some(6),
                ..Default::default()
            },
        )
        .unwrap_err();
    assert!(matches!(
        err,
        EngineError::Interrupted { after_step: 6, .. }
    ));
    assert!(first.run_dir("t1").join("checkpoint.json").exists());

    let second = engine_from_config(config, None);
    let resumed = second.resume_task("t1").unwrap();
    assert_eq!(resumed.status, TaskStatus::Completed);
    assert_eq!(resumed.final_output, reference_result.final_output);
    // The resumed pipeline re-entered at step 7.
    let resumed_steps = step_sequence(&second, "t1");
    assert_eq!(resumed_steps, vec![7, 8, 9, 10, 11, 12]);
    assert!(!second.run_dir("t1").join("checkpoint.json").exists());

    // Restoring an unknown task is an error (fresh start is the caller's
    // choice).
    assert!(matches!(
        second.resume_task("missing").unwrap_err(),
        EngineError::NoCheckpoint(_)
    ));
}

#[test]
fn duplicate_task_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    engine.run_task(spec("t1", "first")).unwrap();
    let err = engine.run_task(spec("t1", "second")).unwrap_err();
    assert!(matches!(err, EngineError::DuplicateTask(_)));
}

#[test]
fn agent_failure_triggers_redesign_not_crash() {
    let dir = tempfile::tempdir().unwrap();
    // Sequential code pipeline whose implementer dies; the redesigned team
    // (same roles, refined prompts) fails again until radical redesign
    // switches topology, where echo agents succeed.
    let scenario =
        ScenarioScript::from_json(r#"{"agents": [{"agent": "implementer", "fail": "segfault"}]}"#)
            .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine
        .run_task(TaskSpec {
            task_type: TaskType::Code,
            ..spec("t1", "implement the api endpoint")
        })
        .unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    assert!(result.redesign_count >= 3, "needed a radical redesign");
    let types = engine.bus().task_event_types("t1");
    assert!(types.contains(&ev::SWARM_FAILED.to_string()));
    assert!(types.contains(&ev::CONTRACT_VIOLATION.to_string()));
}

#[test]
fn spent_totals_are_monotone_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ScenarioScript::from_json(
        r#"{"agents": [{"agent": "worker", "responses": [{"text": "ok", "tokens_in": 1000, "tokens_out": 1000}]}]}"#,
    )
    .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine.run_task(spec("t1", "xyzzy")).unwrap();
    assert!(result.spent > Usd::ZERO);
    assert_eq!(engine.spent("t1"), result.spent);
}

#[test]
fn behavior_capture_records_rounds_tools_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    // The implementer makes one tool call before answering.
    let scenario = ScenarioScript::from_json(
        r#"{"agents": [
            {"agent": "implementer", "responses": [
                {"text": "calculating", "tools": [{"tool": "add", "args": {"a": 2, "b": 3}}]},
                {"text": "the answer is 5"}
            ]}
        ]}"#,
    )
    .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine
        .run_task(TaskSpec {
            task_type: TaskType::Code,
            ..spec("t1", "implement the adder function")
        })
        .unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    let text = std::fs::read_to_string(engine.run_dir("t1").join("behavior.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 3); // architect, implementer, reviewer
    let implementer = records
        .iter()
        .find(|r| r["agent"] == "implementer")
        .unwrap();
    assert_eq!(implementer["tool_calls"], 1);
    assert_eq!(implementer["rounds"], 1);
    assert_eq!(implementer["failed"], false);
    for record in &records {
        assert_eq!(record["rounds"], 1); // sequential: one round each
    }
}

#[test]
fn spend_crossing_triple_budget_halts_execution_and_escalates() {
    let dir = tempfile::tempdir().unwrap();
    // Every agent turn costs ~$2 against a $1 budget (builtin relay-mid is
    // $1/$2 per Mtok); the hard cap trips during the first team execution.
    let scenario = ScenarioScript::from_json(
        r#"{
            "agents": [{"agent": "worker", "responses": [{"text": "pricey work", "tokens_in": 2000000, "tokens_out": 2000000}]}],
            "default_judge": {"score": 0.9}
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine.run_task(spec("t1", "xyzzy expensive")).unwrap();
    assert_eq!(result.status, TaskStatus::PendingHumanReview);
    // The cascade strategy routes to atlas-large ($8/$12 per Mtok): each
    // worker turn costs $40. The parallel template's two workers start
    // concurrently, so depending on interleaving either one or both record
    // before the cap check stops them; nothing may execute afterwards.
    assert!(result.spent > Usd::from_dollars(3.0));
    assert!(
        result.spent == Usd::from_dollars(40.0) || result.spent == Usd::from_dollars(80.0),
        "spend must stop at the first concurrent level: {}",
        result.spent
    );
    assert_eq!(result.redesign_count, 1, "escalated on the first decision");
    let types = engine.bus().task_event_types("t1");
    assert!(types.contains(&ev::BUDGET_EXCEEDED.to_string()));
    assert!(types.contains(&ev::TASK_ESCALATED.to_string()));
}

#[test]
fn approved_designs_are_reused_from_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    // First task stores its approved design (default judge score 0.75 >= 0.7).
    engine.run_task(spec("t1", "xyzzy alpha")).unwrap();
    // Second task of the same type adapts the proven design.
    engine.run_task(spec("t2", "xyzzy beta")).unwrap();
    let types = engine.bus().task_event_types("t2");
    assert!(
        types.contains(&ev::FORGE_ADAPTED.to_string()),
        "second run should adapt the stored design: {types:?}"
    );
    let t1_types = engine.bus().task_event_types("t1");
    assert!(t1_types.contains(&ev::FORGE_DESIGN_STORED.to_string()));
}

#[test]
fn fabricating_judges_are_discarded_by_the_engine() {
    let dir = tempfile::tempdir().unwrap();
    // judge-light claims approve while scoring 0.2 across criteria.
    let scenario = ScenarioScript::from_json(
        r#"{
            "default_judge": {"score": 0.85},
            "judges": [
                {"judge": "judge-light", "score": 0.2, "claim_vote": "approve"}
            ]
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine.run_task(spec("t1", "honest work")).unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    let log = engine.bus().task_log("t1");
    let fabrication = log
        .iter()
        .find(|e| e.event_type == ev::JUDGE_FABRICATION)
        .expect("fabrication event");
    assert_eq!(fabrication.payload["judge"], "judge-light");
    // Consensus ran over the two honest judges only.
    let verdict = log
        .iter()
        .find(|e| e.event_type == ev::JUDGE_VERDICT)
        .unwrap();
    assert_eq!(verdict.payload["judges"].as_array().unwrap().len(), 2);
}

#[test]
fn resume_or_run_starts_fresh_without_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    // Unknown task: no checkpoint anywhere, so this is a fresh start.
    let result = engine
        .resume_or_run(spec("t1", "never ran before"))
        .unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    assert_step_grammar(&step_sequence(&engine, "t1"), 1);
}

#[test]
fn steering_a_terminal_task_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_from_config(test_config(dir.path()), None);
    engine.run_task(spec("t1", "quick task")).unwrap();
    let err = engine.steer("t1", SteeringCommand::Pause).unwrap_err();
    assert!(matches!(
        err,
        EngineError::InvalidSteeringState {
            status: TaskStatus::Completed,
            ..
        }
    ));
    let err = engine.steer("ghost", SteeringCommand::Pause).unwrap_err();
    assert!(matches!(err, EngineError::UnknownTask(_)));
}

#[test]
fn no_agent_executes_after_the_hard_cap_trips_in_later_rounds() {
    use orchid::cost::CostTracker;
    use orchid::router::catalog::{model, Catalog};
    use orchid::task::TeamDesign;
    use orchid::topology::{run_debate, ToolRegistry, TopologyContext, TopologyParams};

    struct Pricey(Arc<AtomicU32>);
    impl AgentExecutor for Pricey {
        fn execute(
            &self,
            _: &orchid::task::AgentSpec,
            _: &str,
            _: &AgentCall,
        ) -> Result<AgentResponse, AgentFailure> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(AgentResponse {
                text: "never consensus".into(),
                tool_requests: vec![],
                tokens_in: 2_000_000,
                tokens_out: 2_000_000,
            })
        }
    }
    // $4 per turn against a $1 budget: the cap ($3) trips on the first
    // turn's record; the second executor invocation must never happen.
    let catalog = Catalog::from_models(vec![model("m", 0.5, 1.0, 1.0)], 0, 3600);
    let tools = ToolRegistry::new();
    let cost = CostTracker::new();
    let calls = Arc::new(AtomicU32::new(0));
    let executor = Pricey(calls.clone());
    let ctx = TopologyContext::new(
        "t",
        &executor,
        &tools,
        &cost,
        &catalog,
        Usd::from_dollars(1.0),
    );
    let design = TeamDesign::new(
        vec![
            orchid::task::AgentSpec::new("proposer", "proposer", "", "m"),
            orchid::task::AgentSpec::new("critic", "critic", "", "m"),
        ],
        TopologyKind::Debate,
        TopologyParams::default(),
    );
    let err = run_debate(&design, "debate forever", &ctx).unwrap_err();
    assert!(err.to_string().contains("budget hard cap"), "{err}");
    assert_eq!(
        calls.load(Ordering::SeqCst),
        1,
        "exactly one agent executed"
    );
    assert_eq!(cost.total("t"), Usd::from_dollars(4.0));
}

#[test]
fn drifting_judge_is_suspended_across_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    // Short drift window so the suspension lands within a dozen tasks.
    config.guards.drift_window = 10;
    // Golden reference mass sits in the 0.5-0.9 bins.
    config.guards.golden_scores = (0..50).map(|i| 0.5 + 0.4 * (i as f64 / 49.0)).collect();
    // judge-light always scores 0.05 (disjoint from the reference); the
    // other two approve so every task completes in one round.
    let scenario = ScenarioScript::from_json(
        r#"{
            "default_judge": {"score": 0.85},
            "judges": [{"judge": "judge-light", "score": 0.05}]
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(config, Some(scenario));
    for i in 0..10 {
        let result = engine
            .run_task(spec(&format!("t{i}"), "xyzzy steady work"))
            .unwrap();
        assert_eq!(result.status, TaskStatus::Completed);
    }
    // The tenth score filled the window and suspended judge-light.
    let types = engine.bus().task_event_types("t9");
    assert!(
        types.contains(&ev::DRIFT_SUSPENDED.to_string()),
        "expected suspension on the tenth task: {types:?}"
    );
    // The next task's verdict excludes the suspended judge.
    engine.run_task(spec("t10", "xyzzy steady work")).unwrap();
    let verdict = engine
        .bus()
        .task_log("t10")
        .into_iter()
        .find(|e| e.event_type == ev::JUDGE_VERDICT)
        .unwrap();
    let judges: Vec<String> = verdict.payload["judges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(!judges.contains(&"judge-light".to_string()), "{judges:?}");
    assert_eq!(judges.len(), 2);
}

#[test]
fn goodhart_medium_risk_rotates_a_judge_mid_task() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    // Small calibration window so two signals can fire within one task's
    // redesign loop: divergent judge scores (low entropy) plus a
    // confidence/accuracy gap (calibration drift).
    config.guards.goodhart.calibration_window = 3;
    let scenario = ScenarioScript::from_json(
        r#"{
            "default_judge": {"score": 0.75, "confidence": 0.9},
            "judges": [
                {"judge": "judge-frontier", "score": 0.98, "confidence": 0.9},
                {"judge": "judge-standard", "score": 0.02, "confidence": 0.9},
                {"judge": "judge-light", "score": 0.02, "confidence": 0.9}
            ]
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(config, Some(scenario));
    let result = engine.run_task(spec("t1", "gamed output")).unwrap();
    let types = engine.bus().task_event_types("t1");
    assert!(
        types.contains(&ev::GOODHART_REPORT.to_string()),
        "expected a goodhart report: {types:?}"
    );
    assert!(
        types.contains(&ev::GOODHART_ROTATION.to_string()),
        "expected a judge rotation at medium risk: {types:?}"
    );
    // The run still terminates (escalation or completion, never a hang).
    assert!(result.status.is_terminal());
}

#[test]
fn qtable_snapshot_persists_every_tenth_episode() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    let qtable_path = dir.path().join("qtable.json");
    config.router.qtable_path = Some(qtable_path.clone());
    let engine = engine_from_config(config, None);
    for i in 0..10 {
        engine
            .run_task(spec(&format!("t{i}"), "xyzzy rewarding work"))
            .unwrap();
    }
    assert!(qtable_path.exists(), "snapshot must land on episode 10");
    let types = engine.bus().task_event_types("t9");
    assert!(types.contains(&ev::RL_PERSISTED.to_string()));
    // Earlier episodes did not persist.
    let types = engine.bus().task_event_types("t3");
    assert!(!types.contains(&ev::RL_PERSISTED.to_string()));
    let table = orchid::router::bandit::QTable::load(&qtable_path).unwrap();
    assert_eq!(table.episode_count, 10);
}

#[test]
fn memory_port_injects_context_at_step_two() {
    struct CannedMemory;
    impl orchid::orchestrator::MemoryPort for CannedMemory {
        fn inject(&self, spec: &TaskSpec) -> Option<String> {
            Some(format!("remembered context for {}", spec.id))
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let config = test_config(dir.path());
    let script = Arc::new(ScenarioScript::default());
    let panel = panel_from_config(&config, &script);
    let engine = orchid::orchestrator::EngineBuilder::new()
        .config(config)
        .executor(Arc::new(ScriptedExecutor::new(script)))
        .memory(Arc::new(CannedMemory))
        .panel(panel)
        .build();
    engine.run_task(spec("t1", "remember me")).unwrap();
    let step2 = engine
        .bus()
        .task_log("t1")
        .into_iter()
        .find(|e| e.event_type == ev::TASK_STEP && e.payload["step"] == 2)
        .unwrap();
    assert_eq!(step2.payload["injected"], true);
}

#[test]
fn behavior_records_flag_failed_agents() {
    let dir = tempfile::tempdir().unwrap();
    // Custom tasks use the parallel template; one worker fails, the other
    // carries the run, judges approve.
    let scenario = ScenarioScript::from_json(
        r#"{
            "agents": [{"agent": "worker-1", "fail": "flaky"}],
            "default_judge": {"score": 0.85}
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(test_config(dir.path()), Some(scenario));
    let result = engine.run_task(spec("t1", "xyzzy resilient")).unwrap();
    assert_eq!(result.status, TaskStatus::Completed);
    let text = std::fs::read_to_string(engine.run_dir("t1").join("behavior.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let failed = records.iter().find(|r| r["agent"] == "worker-1").unwrap();
    assert_eq!(failed["failed"], true);
    let ok = records.iter().find(|r| r["agent"] == "worker-2").unwrap();
    assert_eq!(ok["failed"], false);
}

#[test]
fn companion_mode_clamps_the_default_strategy_to_its_allowed_set() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    config.mode = Mode::Companion;
    // Balanced is power-only; companion must fall back to an allowed one.
    config.default_strategy = orchid::router::Strategy::Balanced;
    let engine = engine_from_config(config, None);
    engine
        .run_task(TaskSpec {
            mode: Mode::Companion,
            ..spec("t1", "companion routing")
        })
        .unwrap();
    let selected = engine
        .bus()
        .task_log("t1")
        .into_iter()
        .find(|e| e.event_type == ev::ROUTER_STRATEGY_SELECTED)
        .unwrap();
    assert_eq!(selected.payload["strategy"], "cascade");
}

#[test]
fn cancel_acknowledged_at_a_boundary_stops_all_further_execution() {
    struct Counting(Arc<AtomicU32>);
    impl AgentExecutor for Counting {
        fn execute(
            &self,
            agent: &orchid::task::AgentSpec,
            _: &str,
            _: &AgentCall,
        ) -> Result<AgentResponse, AgentFailure> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(AgentResponse::text(format!("{} done", agent.name)))
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let config = test_config(dir.path());
    let calls = Arc::new(AtomicU32::new(0));
    let script = Arc::new(ScenarioScript::default());
    let panel = panel_from_config(&config, &script);
    let engine = orchid::orchestrator::EngineBuilder::new()
        .config(config.clone())
        .executor(Arc::new(Counting(calls.clone())))
        .panel(panel)
        .build();
    // Kill right after the security step, queue a cancel, then resume: the
    // cancel is acknowledged at the first boundary, before swarm execution.
    let err = engine
        .run_task_with(
            spec("t1", "cancel before the swarm"),
            RunOptions {
                abort_after_step: Some(5),
                ..Default::default()
            },
        )
        .unwrap_err();
    assert!(matches!(
        err,
        EngineError::Interrupted { after_step: 5, .. }
    ));
    assert_eq!(calls.load(Ordering::SeqCst), 0);
    orchid::orchestrator::SteeringController::append_to_file(
        &engine.run_dir("t1").join("steering.jsonl"),
        &SteeringCommand::Cancel,
    )
    .unwrap();
    let resumed = engine.resume_task("t1").unwrap();
    assert_eq!(resumed.status, TaskStatus::Cancelled);
    assert_eq!(
        calls.load(Ordering::SeqCst),
        0,
        "no agent may start after a cancel is acknowledged"
    );
}

#[test]
fn drift_suspension_event_carries_distribution_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path());
    config.guards.drift_window = 10;
    let scenario = ScenarioScript::from_json(
        r#"{
            "default_judge": {"score": 0.85},
            "judges": [{"judge": "judge-light", "score": 0.05}]
        }"#,
    )
    .unwrap();
    let engine = engine_from_config(config, Some(scenario));
    for i in 0..10 {
        engine
            .run_task(spec(&format!("t{i}"), "xyzzy steady"))
            .unwrap();
    }
    let suspended = engine
        .bus()
        .task_log("t9")
        .into_iter()
        .find(|e| e.event_type == ev::DRIFT_SUSPENDED)
        .expect("suspension event");
    // Full histograms travel with the event: 10 bins each, both summing
    // to one after smoothing.
    for key in ["reference", "window"] {
        let bins = suspended.payload[key].as_array().unwrap();
        assert_eq!(bins.len(), 10);
        let sum: f64 = bins.iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{key} sums to {sum}");
    }
    assert!(suspended.payload["jsd"].as_f64().unwrap() > 0.877);
}
