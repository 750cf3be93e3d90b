//! The task engine: a deterministic 12-step pipeline per task.
//!
//! Steps: initialize, memory injection, forge design, simulation, security
//! validation, swarm execution, judge assessment, redesign-loop exit, RL
//! learning, behavior capture, output formatting, finalize. A rejected
//! verdict re-enters at step 3 (max five redesigns, 3x budget cap, then
//! human escalation). Steering commands are honored at step boundaries, and
//! a checkpoint is written after every completed step so a killed task
//! resumes where it stopped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Config;
use crate::cost::CostTracker;
use crate::event::{types as ev, EventBus};
use crate::forge::{
    radical_design, redesign_decision, refine_design, validate_design, DesignRequest, DesignStore,
    DesignerPort, ForgeError, RedesignDecision, RedesignKind, TemplateDesigner, TopologyStats,
};
use crate::guards::contracts::{ContractCtx, ContractSet, Stage};
use crate::guards::drift::DriftMonitor;
use crate::guards::goodhart::{self, EvalRecord, GoodhartAction, RiskLevel};
use crate::guards::trilemma::GuardedStore;
use crate::judge::{
    run_judge_pipeline, JudgeError, JudgePanel, JudgeProfile, PipelineConfig, Vote,
};
use crate::mode::{gate_features, FeatureSet};
use crate::orchestrator::policy::{security_check, SecurityDecision, SecurityPolicy};
use crate::orchestrator::sim::{simulate, SimError};
use crate::orchestrator::state::{Checkpoint, TaskState, TaskStatus};
use crate::orchestrator::steering::{SteeringCommand, SteeringController};
use crate::router::bandit::{encode_state, QTable};
use crate::router::catalog::{Catalog, ModelInfo, Origin};
use crate::router::pomdp::{Belief, Observation, ObservationModel, QualityScaledReward};
use crate::router::strategies::{
    cascade_order, route_balanced, route_cheapest, route_quality, BALANCED_QUALITY_WEIGHT,
};
use crate::router::Strategy;
use crate::task::{TaskSpec, TaskType, TeamDesign};
use crate::topology::{
    execute_topology, AgentExecutor, ToolRegistry, TopologyContext, TopologyError, TopologyKind,
};
use crate::usd::Usd;

/// Context provider for pipeline step 2. The default is a no-op; a memory
/// subsystem can plug in here without touching step numbering.
pub trait MemoryPort: Send + Sync {
    fn inject(&self, spec: &TaskSpec) -> Option<String>;
}

pub struct NoopMemory;

impl MemoryPort for NoopMemory {
    fn inject(&self, _spec: &TaskSpec) -> Option<String> {
        None
    }
}

/// Minimal executor echoing its input; stands in when no scenario is given.
pub struct EchoExecutor;

impl AgentExecutor for EchoExecutor {
    fn execute(
        &self,
        agent: &crate::task::AgentSpec,
        prompt: &str,
        _call: &crate::topology::AgentCall,
    ) -> Result<crate::topology::AgentResponse, crate::topology::AgentFailure> {
        Ok(crate::topology::AgentResponse::text(format!(
            "echo({}): {prompt}",
            agent.name
        )))
    }
}

/// Pluggable ports the engine drives.
pub struct Ports {
    pub designer: Arc<dyn DesignerPort>,
    pub executor: Arc<dyn AgentExecutor>,
    pub memory: Arc<dyn MemoryPort>,
    pub panel: JudgePanel,
}

impl Default for Ports {
    fn default() -> Self {
        Ports {
            designer: Arc::new(TemplateDesigner),
            executor: Arc::new(EchoExecutor),
            memory: Arc::new(NoopMemory),
            panel: JudgePanel::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Simulates a crash: return after checkpointing this step.
    pub abort_after_step: Option<u32>,
    /// Operator-forced topology (CLI `--topology`); bypasses the library.
    pub forced_topology: Option<TopologyKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task_id: String,
    pub status: TaskStatus,
    pub final_output: Option<String>,
    pub score: Option<f64>,
    pub reward: Option<f64>,
    pub spent: Usd,
    pub redesign_count: u32,
    pub run_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid task spec: {0}")]
    Spec(#[from] crate::task::TaskSpecError),
    #[error("task id already in use: {0}")]
    DuplicateTask(String),
    #[error("unknown task: {0}")]
    UnknownTask(String),
    #[error("cannot steer task {task_id} in state {status:?}")]
    InvalidSteeringState { task_id: String, status: TaskStatus },
    #[error("design invalid: {0:?}")]
    InvalidDesign(Vec<String>),
    #[error("forge: {0}")]
    Forge(#[from] ForgeError),
    #[error("judge: {0}")]
    Judge(#[from] JudgeError),
    #[error("routing: {0}")]
    Routing(String),
    #[error("topology {0:?} is gated off in the active mode")]
    TopologyGated(TopologyKind),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("io: {0}")]
    Io(String),
    #[error("no checkpoint for task {0}")]
    NoCheckpoint(String),
    #[error("task {task_id} interrupted after step {after_step}")]
    Interrupted { task_id: String, after_step: u32 },
}

/// Composite reward for RL learning:
/// `clamp(score - 0.2 * min(spent/budget, 1), 0, 1)`.
pub fn composite_reward(score: f64, spent: Usd, budget: Usd) -> f64 {
    let cost_ratio = if budget.is_positive() {
        spent.ratio(budget).min(1.0)
    } else {
        1.0
    };
    (score - 0.2 * cost_ratio).clamp(0.0, 1.0)
}

/// Diversity signature: topology, agent count, sorted role names.
pub fn team_signature(design: &TeamDesign) -> String {
    let mut roles: Vec<&str> = design.agents.iter().map(|a| a.role.as_str()).collect();
    roles.sort_unstable();
    format!(
        "{}|{}|{}",
        design.topology.as_str(),
        design.agents.len(),
        roles.join(",")
    )
}

/// Seeds a ChaCha stream from the engine seed and a purpose path, so every
/// random draw is a pure function of (seed, purpose) and replays exactly.
pub fn derive_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut hash: u64 = 0xcbf29ce484222325 ^ seed;
    for part in parts {
        for byte in part.as_bytes() {
            hash ^= *byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash ^= 0x1f;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(hash)
}

/// Built-in three-model catalog used when no fixtures are configured.
pub fn builtin_catalog() -> Catalog {
    let mk = |id: &str, quality: f64, input: f64, output: f64| ModelInfo {
        model_id: id.to_string(),
        provider: "builtin".to_string(),
        quality_score: quality,
        input_rate: Usd::from_dollars(input),
        output_rate: Usd::from_dollars(output),
        context_window: 32_768,
        origin: Origin::Static,
    };
    Catalog::from_models(
        vec![
            mk("atlas-large", 0.9, 8.0, 12.0),
            mk("relay-mid", 0.7, 1.0, 2.0),
            mk("pico-local", 0.5, 0.05, 0.05),
        ],
        0,
        3600,
    )
}

enum Steer {
    Continue,
    Redirected(String),
    Cancelled(String),
}

#[derive(Debug, Serialize)]
struct ResultDoc<'a> {
    task_id: &'a str,
    status: &'a str,
    task_type: Option<&'a str>,
    topology: Option<&'a str>,
    agents: Vec<&'a str>,
    redesign_count: u32,
    spent_micros: i64,
    reward: Option<f64>,
    verdict: Option<VerdictSummary>,
    escalation_reason: Option<&'a str>,
    final_output: &'a str,
}

#[derive(Debug, Serialize)]
struct VerdictSummary {
    decision: String,
    score: f64,
    entropy_bits: f64,
    judges: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub task_id: String,
    pub agent: String,
    pub rounds: u32,
    pub output_lengths: Vec<usize>,
    pub tool_calls: u32,
    pub failed: bool,
}

pub struct Engine {
    config: Config,
    features: FeatureSet,
    bus: Arc<EventBus>,
    cost: CostTracker,
    catalog: Catalog,
    tools: ToolRegistry,
    contracts: ContractSet,
    guarded: Mutex<GuardedStore>,
    qtable: Mutex<QTable>,
    topo_stats: Mutex<TopologyStats>,
    store: Mutex<DesignStore>,
    drift: Mutex<DriftMonitor>,
    goodhart_history: Mutex<Vec<EvalRecord>>,
    panel: Mutex<JudgePanel>,
    belief: Mutex<Belief>,
    steering: Mutex<BTreeMap<String, Arc<SteeringController>>>,
    states: Mutex<BTreeMap<String, TaskState>>,
    designer: Arc<dyn DesignerPort>,
    executor: Arc<dyn AgentExecutor>,
    memory: Arc<dyn MemoryPort>,
}

pub struct EngineBuilder {
    config: Config,
    catalog: Option<Catalog>,
    tools: Option<ToolRegistry>,
    contracts: Option<ContractSet>,
    ports: Ports,
}

impl EngineBuilder {
    pub fn new() -> EngineBuilder {
        EngineBuilder {
            config: Config::default(),
            catalog: None,
            tools: None,
            contracts: None,
            ports: Ports::default(),
        }
    }

    pub fn config(mut self, config: Config) -> Self {
        self.config = config;
        self
    }

    pub fn out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.config.out_dir = dir.into();
        self
    }

    pub fn mode(mut self, mode: crate::task::Mode) -> Self {
        self.config.mode = mode;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self
    }

    pub fn catalog(mut self, catalog: Catalog) -> Self {
        self.catalog = Some(catalog);
        self
    }

    pub fn tools(mut self, tools: ToolRegistry) -> Self {
        self.tools = Some(tools);
        self
    }

    pub fn contracts(mut self, contracts: ContractSet) -> Self {
        self.contracts = Some(contracts);
        self
    }

    pub fn designer(mut self, designer: Arc<dyn DesignerPort>) -> Self {
        self.ports.designer = designer;
        self
    }

    pub fn executor(mut self, executor: Arc<dyn AgentExecutor>) -> Self {
        self.ports.executor = executor;
        self
    }

    pub fn memory(mut self, memory: Arc<dyn MemoryPort>) -> Self {
        self.ports.memory = memory;
        self
    }

    pub fn panel(mut self, panel: JudgePanel) -> Self {
        self.ports.panel = panel;
        self
    }

    pub fn build(self) -> Engine {
        let config = self.config;
        let features = gate_features(config.mode);
        let bus = Arc::new(EventBus::with_log_dir(&config.out_dir));
        let catalog = self.catalog.unwrap_or_else(builtin_catalog);
        let tools = self.tools.unwrap_or_else(ToolRegistry::with_builtins);
        let contracts = self.contracts.unwrap_or_else(ContractSet::defaults);
        let mut qtable = match config
            .router
            .qtable_path
            .as_ref()
            .and_then(|p| QTable::load(p).ok())
        {
            Some(loaded) => loaded,
            None => QTable::new(config.router.alpha, config.router.epsilon),
        };
        qtable.persist_every = config.router.persist_every;
        let mut drift = DriftMonitor::new(
            config.guards.resolve_golden(),
            config.guards.drift_theta,
            config.guards.drift_window,
        );
        for entry in &self.ports.panel.active {
            drift.register(entry.id());
        }
        let patterns: Vec<&str> = config
            .security
            .blocked_patterns
            .iter()
            .map(|p| p.as_str())
            .collect();
        let guarded = GuardedStore::with_builtin_profiles(SecurityPolicy::from_patterns(&patterns));
        let store = DesignStore::load(
            config.forge.store_window,
            &config.out_dir.join("designs.jsonl"),
        )
        .unwrap_or_else(|_| DesignStore::new(config.forge.store_window));
        Engine {
            features,
            bus,
            cost: CostTracker::new(),
            catalog,
            tools,
            contracts,
            guarded: Mutex::new(guarded),
            qtable: Mutex::new(qtable),
            topo_stats: Mutex::new(TopologyStats::new()),
            store: Mutex::new(store),
            drift: Mutex::new(drift),
            goodhart_history: Mutex::new(Vec::new()),
            panel: Mutex::new(self.ports.panel),
            belief: Mutex::new(Belief::uniform()),
            steering: Mutex::new(BTreeMap::new()),
            states: Mutex::new(BTreeMap::new()),
            designer: self.ports.designer,
            executor: self.ports.executor,
            memory: self.ports.memory,
            config,
        }
    }
}

impl Default for EngineBuilder {
    fn default() -> Self {
        EngineBuilder::new()
    }
}

impl Engine {
    pub fn builder() -> EngineBuilder {
        EngineBuilder::new()
    }

    pub fn bus(&self) -> &EventBus {
        &self.bus
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn spent(&self, task_id: &str) -> Usd {
        self.cost.total(task_id)
    }

    pub fn run_dir(&self, task_id: &str) -> PathBuf {
        self.config.out_dir.join(task_id)
    }

    pub fn status(&self, task_id: &str) -> Option<TaskState> {
        self.states
            .lock()
            .expect("states poisoned")
            .get(task_id)
            .cloned()
    }

    /// Queues a steering command for a running or paused task.
    pub fn steer(&self, task_id: &str, command: SteeringCommand) -> Result<(), EngineError> {
        let status = self
            .status(task_id)
            .ok_or_else(|| EngineError::UnknownTask(task_id.to_string()))?
            .status;
        if status.is_terminal() {
            return Err(EngineError::InvalidSteeringState {
                task_id: task_id.to_string(),
                status,
            });
        }
        let controller = self
            .steering
            .lock()
            .expect("steering poisoned")
            .get(task_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownTask(task_id.to_string()))?;
        controller.push(command);
        Ok(())
    }

    pub fn run_task(&self, spec: TaskSpec) -> Result<TaskResult, EngineError> {
        self.run_task_with(spec, RunOptions::default())
    }

    pub fn run_task_with(
        &self,
        spec: TaskSpec,
        options: RunOptions,
    ) -> Result<TaskResult, EngineError> {
        // Budget and prompt invariants are enforced by the pre-stage
        // contracts at step 1 (fail-fast, zero agent executions); only the
        // task identity is checked up front.
        if spec.id.trim().is_empty() {
            return Err(EngineError::Spec(crate::task::TaskSpecError::EmptyId));
        }
        {
            let mut states = self.states.lock().expect("states poisoned");
            if states.contains_key(&spec.id) {
                return Err(EngineError::DuplicateTask(spec.id.clone()));
            }
            states.insert(spec.id.clone(), TaskState::new(&spec.id));
        }
        let run_dir = self.run_dir(&spec.id);
        self.steering.lock().expect("steering poisoned").insert(
            spec.id.clone(),
            Arc::new(SteeringController::with_file(
                run_dir.join("steering.jsonl"),
            )),
        );
        self.emit(
            ev::TASK_STARTED,
            &spec.id,
            json!({
                "prompt": spec.prompt,
                "task_type": spec.task_type.as_str(),
                "budget_micros": spec.budget.micros(),
                "mode": spec.mode.as_str(),
            }),
        );
        let mut cp = Checkpoint::fresh(spec);
        self.drive(&mut cp, &options)
    }

    /// Resumes a task from its checkpoint; replays to the same final state
    /// as an uninterrupted run for deterministic scenarios.
    pub fn resume_task(&self, task_id: &str) -> Result<TaskResult, EngineError> {
        let run_dir = self.run_dir(task_id);
        let mut cp = Checkpoint::load(&run_dir)
            .map_err(|_| EngineError::NoCheckpoint(task_id.to_string()))?;
        self.cost.restore_total(task_id, cp.spent);
        self.states
            .lock()
            .expect("states poisoned")
            .entry(task_id.to_string())
            .or_insert_with(|| TaskState::new(task_id));
        self.steering
            .lock()
            .expect("steering poisoned")
            .entry(task_id.to_string())
            .or_insert_with(|| {
                Arc::new(SteeringController::with_file(
                    run_dir.join("steering.jsonl"),
                ))
            });
        self.emit(
            ev::CHECKPOINT_RESTORED,
            task_id,
            json!({"completed_step": cp.completed_step}),
        );
        self.drive(&mut cp, &RunOptions::default())
    }

    /// Resumes from the checkpoint when one exists; otherwise the task
    /// starts fresh from the spec.
    pub fn resume_or_run(&self, spec: TaskSpec) -> Result<TaskResult, EngineError> {
        if Checkpoint::exists(&self.run_dir(&spec.id)) {
            self.resume_task(&spec.id)
        } else {
            self.run_task(spec)
        }
    }

    fn emit(&self, event_type: &str, task_id: &str, payload: serde_json::Value) {
        self.bus
            .emit(event_type, task_id, payload)
            .expect("event type registered");
    }

    fn emit_step(&self, task_id: &str, step: u32, name: &str, extra: serde_json::Value) {
        let mut payload = json!({"step": step, "name": name});
        if let Some(object) = extra.as_object() {
            for (key, value) in object {
                payload[key] = value.clone();
            }
        }
        self.emit(ev::TASK_STEP, task_id, payload);
    }

    fn update_state(&self, task_id: &str, update: impl FnOnce(&mut TaskState)) {
        let mut states = self.states.lock().expect("states poisoned");
        let state = states
            .entry(task_id.to_string())
            .or_insert_with(|| TaskState::new(task_id));
        update(state);
        let state = state.clone();
        drop(states);
        let _ = state.save(&self.run_dir(task_id));
    }

    fn drive(&self, cp: &mut Checkpoint, options: &RunOptions) -> Result<TaskResult, EngineError> {
        let task_id = cp.spec.id.clone();
        let run_dir = self.run_dir(&task_id);
        while cp.completed_step < 12 {
            match self.check_steering(&task_id) {
                Steer::Continue => {}
                Steer::Redirected(prompt) => {
                    self.emit(ev::TASK_REDIRECTED, &task_id, json!({"prompt": prompt}));
                    cp.redirect(prompt);
                    cp.save(&run_dir)
                        .map_err(|e| EngineError::Io(e.to_string()))?;
                    continue;
                }
                Steer::Cancelled(reason) => {
                    return Ok(self.finish_cancelled(cp, &run_dir, &reason));
                }
            }
            let step = cp.completed_step + 1;
            self.update_state(&task_id, |s| {
                s.status = TaskStatus::Running;
                s.current_step = step;
                s.redesign_count = cp.redesign_count;
                s.spent = self.cost.total(&task_id);
            });
            match step {
                1 => {
                    if let Some(result) = self.step_initialize(cp, &run_dir)? {
                        return Ok(result);
                    }
                    cp.completed_step = 1;
                }
                2 => {
                    self.step_memory(cp);
                    cp.completed_step = 2;
                }
                3 => {
                    self.step_design(cp, options)?;
                    cp.completed_step = 3;
                }
                4 => {
                    self.step_simulate(cp)?;
                    cp.completed_step = 4;
                }
                5 => {
                    if let Some(result) = self.step_security(cp, &run_dir)? {
                        return Ok(result);
                    }
                    cp.completed_step = 5;
                }
                6 => {
                    self.step_execute(cp)?;
                    cp.completed_step = 6;
                }
                7 => {
                    self.step_judge(cp)?; // sets completed_step to 7 or back to 2
                }
                8 => {
                    self.step_loop_exit(cp);
                    cp.completed_step = 8;
                }
                9 => {
                    self.step_learn(cp);
                    cp.completed_step = 9;
                }
                10 => {
                    self.step_behavior(cp, &run_dir)?;
                    cp.completed_step = 10;
                }
                11 => {
                    self.step_output(cp, &run_dir)?;
                    cp.completed_step = 11;
                }
                _ => {
                    self.step_finalize(cp, &run_dir);
                    cp.completed_step = 12;
                }
            }
            cp.spent = self.cost.total(&task_id);
            if cp.completed_step < 12 {
                cp.save(&run_dir)
                    .map_err(|e| EngineError::Io(e.to_string()))?;
                self.emit(
                    ev::CHECKPOINT_SAVED,
                    &task_id,
                    json!({"completed_step": cp.completed_step}),
                );
            }
            if options.abort_after_step == Some(step) && cp.completed_step < 12 {
                return Err(EngineError::Interrupted {
                    task_id,
                    after_step: step,
                });
            }
        }
        let status = if cp.escalated {
            TaskStatus::PendingHumanReview
        } else {
            TaskStatus::Completed
        };
        Ok(TaskResult {
            task_id: task_id.clone(),
            status,
            final_output: cp.run.as_ref().map(|r| r.final_output.clone()),
            score: cp.verdict.as_ref().map(|v| v.score()),
            reward: cp.reward,
            spent: self.cost.total(&task_id),
            redesign_count: cp.redesign_count,
            run_dir,
        })
    }

    fn check_steering(&self, task_id: &str) -> Steer {
        let controller = self
            .steering
            .lock()
            .expect("steering poisoned")
            .get(task_id)
            .cloned();
        let Some(controller) = controller else {
            return Steer::Continue;
        };
        loop {
            match controller.poll() {
                None => return Steer::Continue,
                Some(SteeringCommand::Resume) => continue,
                Some(SteeringCommand::Redirect { prompt }) => return Steer::Redirected(prompt),
                Some(SteeringCommand::Cancel) => return Steer::Cancelled("cancelled".to_string()),
                Some(SteeringCommand::Pause) => {
                    self.emit(ev::TASK_PAUSED, task_id, json!({}));
                    self.update_state(task_id, |s| s.status = TaskStatus::Paused);
                    let paused_at = Instant::now();
                    loop {
                        std::thread::sleep(Duration::from_millis(self.config.steering_poll_ms));
                        if let Some(command) = controller.poll() {
                            match command {
                                SteeringCommand::Resume => {
                                    self.emit(
                                        ev::TASK_RESUMED,
                                        task_id,
                                        json!({"paused_ms": paused_at.elapsed().as_millis() as u64}),
                                    );
                                    self.update_state(task_id, |s| s.status = TaskStatus::Running);
                                    return Steer::Continue;
                                }
                                SteeringCommand::Redirect { prompt } => {
                                    self.update_state(task_id, |s| s.status = TaskStatus::Running);
                                    return Steer::Redirected(prompt);
                                }
                                SteeringCommand::Cancel => {
                                    return Steer::Cancelled("cancelled while paused".to_string());
                                }
                                SteeringCommand::Pause => {}
                            }
                        }
                        if paused_at.elapsed()
                            >= Duration::from_millis(self.config.pause_timeout_ms)
                        {
                            return Steer::Cancelled("pause timeout".to_string());
                        }
                    }
                }
            }
        }
    }

    fn finish_cancelled(&self, cp: &Checkpoint, run_dir: &Path, reason: &str) -> TaskResult {
        let task_id = &cp.spec.id;
        self.emit(ev::TASK_CANCELLED, task_id, json!({"reason": reason}));
        self.update_state(task_id, |s| {
            s.status = TaskStatus::Cancelled;
            s.detail = Some(reason.to_string());
        });
        Checkpoint::remove(run_dir);
        TaskResult {
            task_id: task_id.clone(),
            status: TaskStatus::Cancelled,
            final_output: None,
            score: None,
            reward: None,
            spent: self.cost.total(task_id),
            redesign_count: cp.redesign_count,
            run_dir: run_dir.to_path_buf(),
        }
    }

    fn fail_task(
        &self,
        cp: &Checkpoint,
        run_dir: &Path,
        reason: &str,
    ) -> Result<TaskResult, EngineError> {
        let task_id = &cp.spec.id;
        self.emit(ev::TASK_FAILED, task_id, json!({"reason": reason}));
        self.update_state(task_id, |s| {
            s.status = TaskStatus::Failed;
            s.detail = Some(reason.to_string());
        });
        self.write_result_doc(cp, run_dir, TaskStatus::Failed)?;
        Checkpoint::remove(run_dir);
        Ok(TaskResult {
            task_id: task_id.clone(),
            status: TaskStatus::Failed,
            final_output: None,
            score: None,
            reward: None,
            spent: self.cost.total(task_id),
            redesign_count: cp.redesign_count,
            run_dir: run_dir.to_path_buf(),
        })
    }

    // Step 1: budget check, task registration, pre-stage contracts.
    fn step_initialize(
        &self,
        cp: &mut Checkpoint,
        run_dir: &Path,
    ) -> Result<Option<TaskResult>, EngineError> {
        let task_id = &cp.spec.id;
        self.emit_step(task_id, 1, "initialize", json!({}));
        let judges_configured = !self.panel.lock().expect("panel poisoned").active.is_empty();
        let policy = self
            .guarded
            .lock()
            .expect("guarded poisoned")
            .safety_policy()
            .clone();
        let ctx = ContractCtx::pre(cp.spec.budget, &cp.spec.prompt, &policy, judges_configured);
        if let Err(violation) = self.contracts.evaluate(Stage::Pre, cp.spec.task_type, &ctx) {
            self.emit(
                ev::CONTRACT_VIOLATION,
                task_id,
                json!({
                    "contract": violation.contract,
                    "stage": "pre",
                    "message": violation.message,
                }),
            );
            return Ok(Some(self.fail_task(cp, run_dir, &violation.to_string())?));
        }
        Ok(None)
    }

    // Step 2: memory injection through the context provider port.
    fn step_memory(&self, cp: &mut Checkpoint) {
        let note = self.memory.inject(&cp.spec);
        self.emit_step(
            &cp.spec.id,
            2,
            "memory_injection",
            json!({"injected": note.is_some()}),
        );
        cp.context_note = note;
    }

    // Step 3: forge design (fresh, adapted from the library, or redesign).
    fn step_design(&self, cp: &mut Checkpoint, options: &RunOptions) -> Result<(), EngineError> {
        let task_id = cp.spec.id.clone();
        let first_pass = cp.redesign_count == 0;
        let task_type = self.designer.classify(&cp.spec.prompt);
        cp.task_type = Some(task_type);
        self.emit_step(
            &task_id,
            3,
            "forge_design",
            json!({"redesign_count": cp.redesign_count}),
        );
        if first_pass {
            self.emit(
                ev::FORGE_CLASSIFIED,
                &task_id,
                json!({"task_type": task_type.as_str()}),
            );
        }

        // Strategy and model selection by the routing stack.
        let state_key = encode_state(task_type, self.catalog.len(), cp.spec.budget);
        let strategy = if self.features.rl_enabled {
            let mut rng = derive_rng(
                self.config.seed,
                &["strategy", &task_id, &cp.redesign_count.to_string()],
            );
            self.qtable.lock().expect("qtable poisoned").select(
                &state_key,
                &self.features.allowed_strategies,
                &mut rng,
            )
        } else {
            let fallback = self.config.default_strategy;
            if self.features.allows_strategy(fallback) {
                fallback
            } else {
                self.features.allowed_strategies[0]
            }
        };
        cp.state_key = Some(state_key.clone());
        cp.strategy = Some(strategy);
        self.emit(
            ev::ROUTER_STRATEGY_SELECTED,
            &task_id,
            json!({"strategy": strategy.as_str(), "state": state_key}),
        );
        let model_id = self.select_model(strategy)?;
        self.emit(
            ev::ROUTER_MODEL_SELECTED,
            &task_id,
            json!({"model": model_id, "strategy": strategy.as_str()}),
        );

        if let Some(forced) = options.forced_topology {
            if !self.features.allows_topology(forced) {
                return Err(EngineError::TopologyGated(forced));
            }
        }
        let recommendation = options.forced_topology.or_else(|| {
            if self.features.rl_enabled {
                self.topo_stats
                    .lock()
                    .expect("stats poisoned")
                    .recommend(task_type)
                    .filter(|k| self.features.allows_topology(*k))
            } else {
                None
            }
        });
        let request = DesignRequest {
            task: &cp.spec,
            task_type,
            recommendation,
            allowed: &self.features.allowed_topologies,
            tools: &self.tools,
            model_id,
        };

        let design = if let Some(kind) = cp.pending_kind.take() {
            let feedback = cp.pending_feedback.take().unwrap_or_default();
            let previous = cp.design.clone().expect("redesign follows a design");
            let design = match kind {
                RedesignKind::Refine => refine_design(&previous, &feedback),
                RedesignKind::Radical => radical_design(
                    &previous,
                    &feedback,
                    &cp.failed_topologies,
                    &request,
                    self.designer.as_ref(),
                )?,
            };
            self.emit(
                ev::FORGE_REDESIGNED,
                &task_id,
                json!({
                    "kind": match kind {
                        RedesignKind::Refine => "refine",
                        RedesignKind::Radical => "radical",
                    },
                    "topology": design.topology.as_str(),
                    "redesign_count": cp.redesign_count,
                }),
            );
            design
        } else {
            let library_record = if options.forced_topology.is_none() {
                self.store
                    .lock()
                    .expect("store poisoned")
                    .get_best(task_type, self.config.forge.library_threshold)
                    .cloned()
            } else {
                None
            };
            match library_record {
                Some(record) => {
                    let design = self.designer.adapt(&record, &request)?;
                    self.emit(
                        ev::FORGE_ADAPTED,
                        &task_id,
                        json!({
                            "topology": design.topology.as_str(),
                            "library_score": record.success_score,
                        }),
                    );
                    design
                }
                None => {
                    let design = self.designer.generate(&request)?;
                    self.emit(
                        ev::FORGE_DESIGNED,
                        &task_id,
                        json!({
                            "topology": design.topology.as_str(),
                            "agents": design.agents.len(),
                        }),
                    );
                    design
                }
            }
        };
        let violations = validate_design(&design, &self.tools, &self.catalog);
        if !violations.is_empty() {
            return Err(EngineError::InvalidDesign(violations));
        }
        cp.design = Some(design);
        Ok(())
    }

    fn select_model(&self, strategy: Strategy) -> Result<String, EngineError> {
        let model = match strategy {
            Strategy::Cheapest => route_cheapest(&self.catalog, self.config.cheapest_quality_min)
                .map_err(|e| EngineError::Routing(e.to_string()))?,
            Strategy::Quality => {
                route_quality(&self.catalog).map_err(|e| EngineError::Routing(e.to_string()))?
            }
            Strategy::Balanced => route_balanced(&self.catalog, BALANCED_QUALITY_WEIGHT)
                .map_err(|e| EngineError::Routing(e.to_string()))?,
            Strategy::Cascade => cascade_order(&self.catalog)
                .into_iter()
                .next()
                .ok_or_else(|| EngineError::Routing("catalog is empty".to_string()))?,
            Strategy::Pomdp => {
                let belief = *self.belief.lock().expect("belief poisoned");
                route_pomdp_ref(&belief, &self.catalog)
                    .map_err(|e| EngineError::Routing(e.to_string()))?
            }
        };
        Ok(model.model_id.clone())
    }

    // Step 4: optional pre-execution simulation (power mode only).
    fn step_simulate(&self, cp: &mut Checkpoint) -> Result<(), EngineError> {
        let task_id = &cp.spec.id;
        if !self.features.simulation_enabled {
            self.emit_step(
                task_id,
                4,
                "simulation",
                json!({"skipped": true, "gated": true}),
            );
            return Ok(());
        }
        let design = cp.design.as_ref().expect("designed at step 3");
        let estimate = simulate(design, &self.catalog, &self.features, &self.config.sim)?;
        self.emit_step(task_id, 4, "simulation", json!({"skipped": false}));
        self.emit(
            ev::SIMULATION_ESTIMATED,
            task_id,
            json!({
                "total_micros": estimate.total.micros(),
                "expected_rounds_per_agent": estimate.expected_rounds_per_agent,
            }),
        );
        cp.estimate = Some(estimate);
        Ok(())
    }

    // Step 5: security validation; blocked tasks cannot proceed.
    fn step_security(
        &self,
        cp: &mut Checkpoint,
        run_dir: &Path,
    ) -> Result<Option<TaskResult>, EngineError> {
        let task_id = &cp.spec.id;
        self.emit_step(task_id, 5, "security_validation", json!({}));
        let policy = self
            .guarded
            .lock()
            .expect("guarded poisoned")
            .safety_policy()
            .clone();
        match security_check(&cp.spec.prompt, &policy) {
            SecurityDecision::Allow => Ok(None),
            SecurityDecision::Block { rule } => {
                self.emit(ev::SECURITY_BLOCKED, task_id, json!({"rule": rule}));
                Ok(Some(self.fail_task(
                    cp,
                    run_dir,
                    &format!("blocked by security rule {rule:?}"),
                )?))
            }
        }
    }

    // Step 6: swarm execution over the designed topology.
    fn step_execute(&self, cp: &mut Checkpoint) -> Result<(), EngineError> {
        let task_id = cp.spec.id.clone();
        self.emit_step(&task_id, 6, "swarm_execution", json!({}));
        let design = cp.design.as_ref().expect("designed at step 3");
        let ctx = TopologyContext {
            task_id: &task_id,
            executor: self.executor.as_ref(),
            tools: &self.tools,
            cost: &self.cost,
            catalog: &self.catalog,
            budget: cp.spec.budget,
            hard_cap_multiplier: self.config.forge.budget_cap_multiplier,
            bus: Some(&self.bus),
        };
        match execute_topology(design, &cp.spec.prompt, &ctx, Some(&self.features)) {
            Ok((run, _hub)) => {
                cp.run = Some(run);
                cp.exec_error = None;
            }
            Err(TopologyError::FeatureGated(kind)) => {
                return Err(EngineError::TopologyGated(kind));
            }
            Err(TopologyError::Invalid(violations)) => {
                return Err(EngineError::InvalidDesign(violations));
            }
            Err(err) => {
                cp.run = None;
                cp.exec_error = Some(err.to_string());
            }
        }
        self.emit(
            ev::COST_RECORDED,
            &task_id,
            json!({"spent_micros": self.cost.total(&task_id).micros()}),
        );
        if let crate::cost::BudgetStatus::Exceeded { spent, cap } = self.cost.check_budget(
            &task_id,
            cp.spec.budget,
            self.config.forge.budget_cap_multiplier,
        ) {
            self.emit(
                ev::BUDGET_EXCEEDED,
                &task_id,
                json!({"spent_micros": spent.micros(), "cap_micros": cap.micros()}),
            );
        }
        Ok(())
    }

    // Step 7: judge assessment, post-stage contracts, Goodhart actions, and
    // the redesign decision (back to step 3 on rejection).
    fn step_judge(&self, cp: &mut Checkpoint) -> Result<(), EngineError> {
        let task_id = cp.spec.id.clone();
        let task_type = cp.task_type.unwrap_or(cp.spec.task_type);
        let spent = self.cost.total(&task_id);
        let round = cp.redesign_count + 1;
        self.emit_step(
            &task_id,
            7,
            "judge_assessment",
            json!({"round": round, "judged": cp.run.is_some()}),
        );

        let post_violation: Option<String>;
        if let Some(run) = &cp.run {
            let profile = self.profile_for(task_type);
            let pipeline_config = PipelineConfig {
                algorithm: self.config.judges.algorithm,
                tier_weights: self.config.judges.tier_weights,
                max_judges: self.features.max_judges,
            };
            let panel_snapshot = self.panel.lock().expect("panel poisoned").clone();
            let mut verdict = {
                let mut drift = self.drift.lock().expect("drift poisoned");
                run_judge_pipeline(
                    &run.final_output,
                    &panel_snapshot,
                    &profile,
                    &pipeline_config,
                    &mut drift,
                    Some(&self.bus),
                    &task_id,
                    round,
                )?
            };

            let policy = self
                .guarded
                .lock()
                .expect("guarded poisoned")
                .safety_policy()
                .clone();
            let mut post_ctx = ContractCtx {
                budget: cp.spec.budget,
                spent,
                prompt: cp.spec.prompt.clone(),
                output: Some(run.final_output.clone()),
                policy,
                judges_configured: true,
                consensus_score: Some(verdict.score()),
                quality_threshold: self.config.judges.quality_threshold,
            };
            let mut post = self.contracts.evaluate(Stage::Post, task_type, &post_ctx);

            // Goodhart: record the evaluation, detect, and act on the panel.
            let accuracy = if verdict.decision == Vote::Approve && post.is_ok() {
                1.0
            } else {
                0.0
            };
            let design = cp.design.as_ref().expect("designed");
            let record = EvalRecord {
                judge_scores: verdict
                    .consensus
                    .per_judge
                    .iter()
                    .map(|j| j.weighted_total)
                    .collect(),
                confidence: if verdict.consensus.per_judge.is_empty() {
                    0.0
                } else {
                    verdict
                        .consensus
                        .per_judge
                        .iter()
                        .map(|j| j.confidence)
                        .sum::<f64>()
                        / verdict.consensus.per_judge.len() as f64
                },
                accuracy,
                reward: composite_reward(verdict.score(), spent, cp.spec.budget),
                team_signature: team_signature(design),
            };
            let report = {
                let mut history = self.goodhart_history.lock().expect("history poisoned");
                history.push(record);
                goodhart::detect(&history, &self.config.guards.goodhart)
            };
            if report.risk > RiskLevel::None {
                self.emit(
                    ev::GOODHART_REPORT,
                    &task_id,
                    json!({
                        "risk": report.risk,
                        "signals": report.signals,
                    }),
                );
            }
            let action = {
                let mut panel = self.panel.lock().expect("panel poisoned");
                goodhart::apply_action(&report, &mut panel)
            };
            match &action {
                GoodhartAction::LogOnly => {}
                GoodhartAction::RotatedOne { out, into } => {
                    self.emit(
                        ev::GOODHART_ROTATION,
                        &task_id,
                        json!({"out": out, "in": into}),
                    );
                }
                GoodhartAction::PanelReplaced { out, into } => {
                    self.emit(
                        ev::GOODHART_PANEL_REPLACED,
                        &task_id,
                        json!({"out": out, "in": into}),
                    );
                    // The round is discarded and re-run with the fresh panel.
                    let fresh_panel = self.panel.lock().expect("panel poisoned").clone();
                    verdict = {
                        let mut drift = self.drift.lock().expect("drift poisoned");
                        run_judge_pipeline(
                            &run.final_output,
                            &fresh_panel,
                            &profile,
                            &pipeline_config,
                            &mut drift,
                            Some(&self.bus),
                            &task_id,
                            round,
                        )?
                    };
                    post_ctx.consensus_score = Some(verdict.score());
                    post = self.contracts.evaluate(Stage::Post, task_type, &post_ctx);
                }
                GoodhartAction::Escalated { reason } => {
                    self.emit(ev::GOODHART_ESCALATION, &task_id, json!({"reason": reason}));
                }
            }
            post_violation = post.err().map(|v| v.to_string());
            cp.verdict = Some(verdict);
        } else {
            post_violation = Some(format!(
                "contract response_validity violated at Post stage: {}",
                cp.exec_error.as_deref().unwrap_or("execution failed")
            ));
            cp.verdict = None;
        }

        if let Some(violation) = &post_violation {
            self.emit(
                ev::CONTRACT_VIOLATION,
                &task_id,
                json!({"stage": "post", "message": violation}),
            );
        }
        cp.post_violation = post_violation.clone();

        let approved = cp
            .verdict
            .as_ref()
            .map(|v| v.decision == Vote::Approve)
            .unwrap_or(false)
            && post_violation.is_none();
        if approved {
            cp.completed_step = 7;
            return Ok(());
        }

        // Rejection path: record the failed topology and decide.
        if let Some(design) = &cp.design {
            if !cp.failed_topologies.contains(&design.topology) {
                cp.failed_topologies.push(design.topology);
            }
        }
        let mut feedback = String::new();
        if let Some(verdict) = &cp.verdict {
            feedback.push_str(&verdict.feedback());
        }
        if let Some(violation) = &post_violation {
            if !feedback.is_empty() {
                feedback.push('\n');
            }
            feedback.push_str(violation);
        }
        let new_count = cp.redesign_count + 1;
        match redesign_decision(new_count, spent, cp.spec.budget, &self.config.forge) {
            RedesignDecision::Escalate(escalation) => {
                cp.redesign_count = new_count;
                cp.escalated = true;
                cp.escalation_reason = Some(escalation.reason);
                cp.completed_step = 7;
            }
            RedesignDecision::Redesign(kind) => {
                cp.redesign_count = new_count;
                cp.pending_kind = Some(kind);
                cp.pending_feedback = Some(feedback);
                cp.completed_step = 2; // back to step 3
            }
        }
        Ok(())
    }

    fn profile_for(&self, task_type: TaskType) -> JudgeProfile {
        let guarded = self.guarded.lock().expect("guarded poisoned");
        let name = match task_type {
            TaskType::Code => "code",
            TaskType::Research => "research",
            TaskType::Creative => "creative",
            TaskType::Analysis | TaskType::Custom => "default",
        };
        guarded
            .profile(name)
            .cloned()
            .unwrap_or_else(JudgeProfile::default_profile)
    }

    // Step 8: redesign-loop exit (approved or escalated).
    fn step_loop_exit(&self, cp: &mut Checkpoint) {
        let task_id = &cp.spec.id;
        self.emit_step(
            task_id,
            8,
            "redesign_loop",
            json!({
                "redesigns": cp.redesign_count,
                "escalated": cp.escalated,
            }),
        );
        if cp.escalated {
            self.emit(
                ev::TASK_ESCALATED,
                task_id,
                json!({
                    "status": crate::forge::ESCALATION_STATUS,
                    "reason": cp.escalation_reason,
                    "redesigns": cp.redesign_count,
                }),
            );
        }
    }

    // Step 9: composite reward and RL learning (power mode only).
    fn step_learn(&self, cp: &mut Checkpoint) {
        let task_id = &cp.spec.id;
        let score = cp.verdict.as_ref().map(|v| v.score()).unwrap_or(0.0);
        let spent = self.cost.total(task_id);
        let reward = composite_reward(score, spent, cp.spec.budget);
        cp.reward = Some(reward);
        self.emit_step(
            task_id,
            9,
            "rl_learning",
            json!({"reward": reward, "rl_enabled": self.features.rl_enabled}),
        );
        if !self.features.rl_enabled {
            return;
        }
        if let (Some(state_key), Some(strategy)) = (&cp.state_key, cp.strategy) {
            let update = self
                .qtable
                .lock()
                .expect("qtable poisoned")
                .update(state_key, strategy, reward);
            self.emit(
                ev::RL_Q_UPDATED,
                task_id,
                json!({
                    "state": state_key,
                    "strategy": strategy.as_str(),
                    "old": update.old,
                    "new": update.new,
                    "clamped": update.clamped,
                }),
            );
            if update.clamped {
                self.emit(
                    ev::TRILEMMA_BOUND,
                    task_id,
                    json!({
                        "raw_delta": update.raw_delta,
                        "applied_delta": update.applied_delta,
                    }),
                );
            }
            if update.persist_due {
                if let Some(path) = &self.config.router.qtable_path {
                    let _ = self.qtable.lock().expect("qtable poisoned").save(path);
                }
                self.emit(
                    ev::RL_PERSISTED,
                    task_id,
                    json!({"episodes": self.qtable.lock().expect("qtable poisoned").episode_count}),
                );
            }
        }
        if let (Some(task_type), Some(design)) = (cp.task_type, &cp.design) {
            self.topo_stats.lock().expect("stats poisoned").update(
                task_type,
                design.topology,
                reward,
            );
        }
        // POMDP belief update from the observed outcome.
        let observation = match (&cp.verdict, cp.escalated) {
            (Some(v), false) if v.decision == Vote::Approve && v.score() >= 0.7 => {
                Observation::SuccessHighScore
            }
            (Some(_), false) => Observation::SuccessLowScore,
            _ => Observation::Failure,
        };
        let mut belief = self.belief.lock().expect("belief poisoned");
        if let Ok(updated) = belief.update(observation, &ObservationModel::default()) {
            *belief = updated;
        }
    }

    // Step 10: per-agent behavioral pattern storage.
    fn step_behavior(&self, cp: &mut Checkpoint, run_dir: &Path) -> Result<(), EngineError> {
        let task_id = &cp.spec.id;
        self.emit_step(task_id, 10, "behavior_capture", json!({}));
        let Some(run) = &cp.run else {
            return Ok(());
        };
        use std::io::Write;
        std::fs::create_dir_all(run_dir).map_err(|e| EngineError::Io(e.to_string()))?;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(run_dir.join("behavior.jsonl"))
            .map_err(|e| EngineError::Io(e.to_string()))?;
        for outcome in &run.outcomes {
            let record = BehaviorRecord {
                task_id: task_id.clone(),
                agent: outcome.agent.clone(),
                rounds: outcome.rounds,
                output_lengths: outcome.outputs.iter().map(|o| o.len()).collect(),
                tool_calls: outcome.tool_calls,
                failed: outcome.failed,
            };
            writeln!(
                file,
                "{}",
                serde_json::to_string(&record).expect("record serializes")
            )
            .map_err(|e| EngineError::Io(e.to_string()))?;
        }
        self.emit(
            ev::BEHAVIOR_CAPTURED,
            task_id,
            json!({"agents": run.outcomes.len()}),
        );
        Ok(())
    }

    // Step 11: result assembly and disk persistence.
    fn step_output(&self, cp: &mut Checkpoint, run_dir: &Path) -> Result<(), EngineError> {
        let task_id = &cp.spec.id;
        self.emit_step(task_id, 11, "output_formatting", json!({}));
        std::fs::create_dir_all(run_dir).map_err(|e| EngineError::Io(e.to_string()))?;
        let final_output = cp
            .run
            .as_ref()
            .map(|r| r.final_output.clone())
            .unwrap_or_default();
        std::fs::write(run_dir.join("final.txt"), &final_output)
            .map_err(|e| EngineError::Io(e.to_string()))?;
        let status = if cp.escalated {
            TaskStatus::PendingHumanReview
        } else {
            TaskStatus::Completed
        };
        self.write_result_doc(cp, run_dir, status)?;
        Ok(())
    }

    fn write_result_doc(
        &self,
        cp: &Checkpoint,
        run_dir: &Path,
        status: TaskStatus,
    ) -> Result<(), EngineError> {
        std::fs::create_dir_all(run_dir).map_err(|e| EngineError::Io(e.to_string()))?;
        let final_output = cp
            .run
            .as_ref()
            .map(|r| r.final_output.as_str())
            .unwrap_or("");
        let doc = ResultDoc {
            task_id: &cp.spec.id,
            status: status.as_str(),
            task_type: cp.task_type.map(|t| t.as_str()),
            topology: cp.design.as_ref().map(|d| d.topology.as_str()),
            agents: cp
                .design
                .as_ref()
                .map(|d| d.agent_names())
                .unwrap_or_default(),
            redesign_count: cp.redesign_count,
            spent_micros: self.cost.total(&cp.spec.id).micros(),
            reward: cp.reward,
            verdict: cp.verdict.as_ref().map(|v| VerdictSummary {
                decision: v.decision.as_str().to_string(),
                score: v.score(),
                entropy_bits: v.consensus.entropy_bits,
                judges: v
                    .consensus
                    .per_judge
                    .iter()
                    .map(|j| j.judge_id.clone())
                    .collect(),
            }),
            escalation_reason: cp.escalation_reason.as_deref(),
            final_output,
        };
        let text = serde_json::to_string_pretty(&doc).expect("result serializes");
        std::fs::write(run_dir.join("result.json"), text)
            .map_err(|e| EngineError::Io(e.to_string()))
    }

    // Step 12: state update, terminal events, checkpoint cleanup.
    fn step_finalize(&self, cp: &mut Checkpoint, run_dir: &Path) {
        let task_id = &cp.spec.id;
        self.emit_step(task_id, 12, "finalize", json!({}));
        let status = if cp.escalated {
            TaskStatus::PendingHumanReview
        } else {
            TaskStatus::Completed
        };
        // Approved designs join the library with their consensus score.
        if status == TaskStatus::Completed {
            if let (Some(design), Some(verdict), Some(task_type)) =
                (&cp.design, &cp.verdict, cp.task_type)
            {
                let mut store = self.store.lock().expect("store poisoned");
                let (seq, evictions) = store.store(design.clone(), task_type, verdict.score());
                let _ = store.save();
                drop(store);
                self.emit(
                    ev::FORGE_DESIGN_STORED,
                    task_id,
                    json!({"created_at": seq, "score": verdict.score()}),
                );
                for eviction in evictions {
                    match eviction {
                        crate::forge::EvictOutcome::Evicted { created_at } => self.emit(
                            ev::FORGE_DESIGN_EVICTED,
                            task_id,
                            json!({"created_at": created_at}),
                        ),
                        crate::forge::EvictOutcome::Blocked { class_survivors } => self.emit(
                            ev::FORGE_EVICTION_BLOCKED,
                            task_id,
                            json!({"class_survivors": class_survivors}),
                        ),
                    }
                }
            }
        }
        self.update_state(task_id, |s| {
            s.status = status;
            s.current_step = 12;
            s.redesign_count = cp.redesign_count;
            s.spent = self.cost.total(task_id);
            s.detail = cp.escalation_reason.clone();
        });
        if status == TaskStatus::Completed {
            self.emit(
                ev::TASK_COMPLETED,
                task_id,
                json!({"redesigns": cp.redesign_count}),
            );
        }
        if Checkpoint::remove(run_dir) {
            self.emit(ev::CHECKPOINT_CLEANED, task_id, json!({}));
        }
    }
}

fn route_pomdp_ref<'a>(
    belief: &Belief,
    catalog: &'a Catalog,
) -> Result<&'a ModelInfo, crate::router::pomdp::PomdpError> {
    crate::router::pomdp::route_pomdp(belief, catalog, &QualityScaledReward::default())
}
