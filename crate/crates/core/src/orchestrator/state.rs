//! Task state and checkpoint documents persisted in each task's run
//! directory: `state.json` for status queries, `checkpoint.json` for
//! crash recovery.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::judge::Verdict;
use crate::orchestrator::sim::CostEstimate;
use crate::router::Strategy;
use crate::task::{TaskSpec, TaskType};
use crate::topology::{RunResult, TopologyKind};
use crate::usd::Usd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Running,
    Paused,
    Completed,
    Failed,
    Cancelled,
    PendingHumanReview,
}

impl TaskStatus {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            TaskStatus::Completed
                | TaskStatus::Failed
                | TaskStatus::Cancelled
                | TaskStatus::PendingHumanReview
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskStatus::Pending => "pending",
            TaskStatus::Running => "running",
            TaskStatus::Paused => "paused",
            TaskStatus::Completed => "completed",
            TaskStatus::Failed => "failed",
            TaskStatus::Cancelled => "cancelled",
            TaskStatus::PendingHumanReview => "pending_human_review",
        }
    }
}

/// The externally visible task state, written to `state.json` on every
/// transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskState {
    pub task_id: String,
    pub status: TaskStatus,
    pub current_step: u32,
    pub redesign_count: u32,
    pub spent: Usd,
    pub detail: Option<String>,
}

impl TaskState {
    pub fn new(task_id: &str) -> TaskState {
        TaskState {
            task_id: task_id.to_string(),
            status: TaskStatus::Pending,
            current_step: 0,
            redesign_count: 0,
            spent: Usd::ZERO,
            detail: None,
        }
    }

    pub fn save(&self, run_dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(run_dir)?;
        let text = serde_json::to_string_pretty(self).expect("state serializes");
        fs::write(run_dir.join("state.json"), text)
    }

    pub fn load(run_dir: &Path) -> Result<TaskState, String> {
        let text = fs::read_to_string(run_dir.join("state.json")).map_err(|e| e.to_string())?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }
}

/// Everything needed to resume a task from its last completed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: TaskSpec,
    pub completed_step: u32,
    pub task_type: Option<TaskType>,
    pub context_note: Option<String>,
    pub design: Option<crate::task::TeamDesign>,
    pub strategy: Option<Strategy>,
    pub state_key: Option<String>,
    pub estimate: Option<CostEstimate>,
    pub run: Option<RunResult>,
    pub exec_error: Option<String>,
    pub verdict: Option<Verdict>,
    pub post_violation: Option<String>,
    pub redesign_count: u32,
    pub failed_topologies: Vec<TopologyKind>,
    pub pending_feedback: Option<String>,
    pub pending_kind: Option<crate::forge::RedesignKind>,
    pub escalated: bool,
    pub escalation_reason: Option<String>,
    pub reward: Option<f64>,
    pub spent: Usd,
}

impl Checkpoint {
    pub fn fresh(spec: TaskSpec) -> Checkpoint {
        Checkpoint {
            spec,
            completed_step: 0,
            task_type: None,
            context_note: None,
            design: None,
            strategy: None,
            state_key: None,
            estimate: None,
            run: None,
            exec_error: None,
            verdict: None,
            post_violation: None,
            redesign_count: 0,
            failed_topologies: Vec::new(),
            pending_feedback: None,
            pending_kind: None,
            escalated: false,
            escalation_reason: None,
            reward: None,
            spent: Usd::ZERO,
        }
    }

    /// Resets pipeline progress for a redirect: new prompt, same task id.
    pub fn redirect(&mut self, prompt: String) {
        let spec = TaskSpec {
            prompt,
            ..self.spec.clone()
        };
        let spent = self.spent;
        *self = Checkpoint::fresh(spec);
        self.spent = spent;
    }

    pub fn save(&self, run_dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(run_dir)?;
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        fs::write(run_dir.join("checkpoint.json"), text)
    }

    pub fn load(run_dir: &Path) -> Result<Checkpoint, String> {
        let path = run_dir.join("checkpoint.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| format!("no checkpoint at {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }

    pub fn remove(run_dir: &Path) -> bool {
        fs::remove_file(run_dir.join("checkpoint.json")).is_ok()
    }

    pub fn exists(run_dir: &Path) -> bool {
        run_dir.join("checkpoint.json").exists()
    }
}
