//! The loop benchmark: N tasks x M iterations through the design ->
//! execute -> judge -> reward -> Q-update loop, with a paired t-test
//! between first- and last-iteration scores.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cost::CostTracker;
use crate::forge::{DesignRequest, DesignerPort, TemplateDesigner};
use crate::judge::{score_output, JudgeProfile, ModelTier};
use crate::mode::gate_features;
use crate::orchestrator::{builtin_catalog, composite_reward, derive_rng};
use crate::router::bandit::{encode_state, QTable};
use crate::router::strategies::route_quality;
use crate::task::{Mode, TaskSpec, TaskType};
use crate::topology::{execute_topology, ToolRegistry, TopologyContext};
use crate::usd::Usd;

use super::mock::ScriptedExecutor;
use super::scenario::ScenarioScript;
use super::stats::{paired_t_test, TTest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub tasks: usize,
    pub iterations: usize,
    pub budget: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            tasks: 10,
            iterations: 3,
            budget: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub task_count: usize,
    pub iterations_per_task: usize,
    pub mean_final_score: f64,
    /// Tasks whose last score exceeds their first.
    pub improved_count: usize,
    /// Tasks whose final score reached 0.8.
    pub converged_count: usize,
    pub t_statistic: f64,
    pub p_value: f64,
    pub trajectories: Vec<Vec<f64>>,
}

impl BenchResult {
    pub const CONVERGENCE_THRESHOLD: f64 = 0.8;

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut lines = vec![
            format!("{:<28} {:>10}", "metric", "value"),
            format!("{:-<39}", ""),
            format!("{:<28} {:>10}", "tasks", self.task_count),
            format!(
                "{:<28} {:>10}",
                "iterations per task", self.iterations_per_task
            ),
            format!("{:<28} {:>10.3}", "mean final score", self.mean_final_score),
            format!(
                "{:<28} {:>7}/{}",
                "tasks improved (delta > 0)", self.improved_count, self.task_count
            ),
            format!(
                "{:<28} {:>7}/{}",
                "tasks converged (>= 0.8)", self.converged_count, self.task_count
            ),
            format!(
                "{:<28} {:>10}",
                "t statistic",
                if self.t_statistic.is_finite() {
                    format!("{:.4}", self.t_statistic)
                } else {
                    "inf".to_string()
                }
            ),
            format!("{:<28} {:>10.4}", "p value (paired t)", self.p_value),
            format!(
                "{:<28} {:>10}",
                "significant (p < 0.05)",
                if self.p_value < 0.05 { "yes" } else { "no" }
            ),
        ];
        lines.push(String::new());
        lines.join("\n")
    }

    /// JSON report document; infinite t renders as the string "inf".
    pub fn to_json_report(&self) -> serde_json::Value {
        json!({
            "tasks": self.task_count,
            "iterations_per_task": self.iterations_per_task,
            "mean_final_score": self.mean_final_score,
            "improved_count": self.improved_count,
            "converged_count": self.converged_count,
            "t_statistic": if self.t_statistic.is_finite() {
                json!(self.t_statistic)
            } else {
                json!(if self.t_statistic > 0.0 { "inf" } else { "-inf" })
            },
            "p_value": self.p_value,
            "trajectories": self.trajectories,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("scenario has no bench trajectories")]
    MissingTrajectories,
    #[error("scenario has {have} trajectories but the benchmark needs {need}")]
    NotEnoughTrajectories { have: usize, need: usize },
    #[error("execution failed: {0}")]
    Execution(String),
    #[error("stats: {0}")]
    Stats(#[from] super::stats::StatsError),
}

/// Runs the full design -> execute -> judge -> reward -> Q-update loop for
/// every (task, iteration) pair, with judge scores scripted per iteration.
pub fn run_loop_benchmark(
    config: &BenchConfig,
    scenario: &ScenarioScript,
) -> Result<BenchResult, BenchError> {
    let bench = scenario
        .bench
        .as_ref()
        .ok_or(BenchError::MissingTrajectories)?;
    if bench.trajectories.len() < config.tasks {
        return Err(BenchError::NotEnoughTrajectories {
            have: bench.trajectories.len(),
            need: config.tasks,
        });
    }
    let catalog = builtin_catalog();
    let tools = ToolRegistry::with_builtins();
    let executor = ScriptedExecutor::new(Arc::new(scenario.clone()));
    let designer = TemplateDesigner;
    let features = gate_features(Mode::Power);
    let profile = JudgeProfile::default_profile();
    let budget = Usd::from_dollars(config.budget);
    let mut qtable = QTable::default();
    let mut trajectories: Vec<Vec<f64>> = Vec::with_capacity(config.tasks);

    for task_idx in 0..config.tasks {
        let trajectory = &bench.trajectories[task_idx];
        let task_id = format!("bench-{task_idx}");
        let spec = TaskSpec {
            id: task_id.clone(),
            prompt: format!("benchmark task {task_idx}"),
            task_type: TaskType::Custom,
            budget,
            mode: Mode::Power,
        };
        let state_key = encode_state(TaskType::Custom, catalog.len(), budget);
        let mut scores = Vec::with_capacity(config.iterations);
        for iteration in 0..config.iterations {
            let mut rng = derive_rng(
                config.seed,
                &["bench", &task_idx.to_string(), &iteration.to_string()],
            );
            let strategy = qtable.select(&state_key, &features.allowed_strategies, &mut rng);
            let model =
                route_quality(&catalog).map_err(|e| BenchError::Execution(e.to_string()))?;
            let request = DesignRequest {
                task: &spec,
                task_type: TaskType::Custom,
                recommendation: None,
                allowed: &features.allowed_topologies,
                tools: &tools,
                model_id: model.model_id.clone(),
            };
            let design = designer
                .generate(&request)
                .map_err(|e| BenchError::Execution(e.to_string()))?;
            let cost = CostTracker::new();
            let ctx = TopologyContext::new(&task_id, &executor, &tools, &cost, &catalog, budget);
            execute_topology(&design, &spec.prompt, &ctx, Some(&features))
                .map_err(|e| BenchError::Execution(e.to_string()))?;

            // Judge the iteration with the scripted score.
            let scripted = trajectory[iteration.min(trajectory.len() - 1)];
            let per_criterion: BTreeMap<String, f64> = profile
                .criteria
                .iter()
                .map(|(c, _)| (c.clone(), scripted))
                .collect();
            let score = score_output(
                "bench-judge",
                ModelTier::Frontier,
                &per_criterion,
                0.9,
                &profile,
            )
            .map_err(|e| BenchError::Execution(e.to_string()))?;
            let spent = cost.total(&task_id);
            let reward = composite_reward(score.weighted_total, spent, budget);
            qtable.update(&state_key, strategy, reward);
            scores.push(score.weighted_total);
        }
        trajectories.push(scores);
    }

    let first: Vec<f64> = trajectories.iter().map(|t| t[0]).collect();
    let last: Vec<f64> = trajectories.iter().map(|t| *t.last().unwrap()).collect();
    let ttest: TTest = paired_t_test(&first, &last)?;
    let improved_count = trajectories
        .iter()
        .filter(|t| t.last().unwrap() > &t[0])
        .count();
    let converged_count = last
        .iter()
        .filter(|s| **s >= BenchResult::CONVERGENCE_THRESHOLD)
        .count();
    let mean_final_score = last.iter().sum::<f64>() / last.len().max(1) as f64;
    Ok(BenchResult {
        task_count: config.tasks,
        iterations_per_task: config.iterations,
        mean_final_score,
        improved_count,
        converged_count,
        t_statistic: ttest.t,
        p_value: ttest.p,
        trajectories,
    })
}
