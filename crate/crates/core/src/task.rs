//! Task and team domain types shared across the kernel.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::topology::{TopologyKind, TopologyParams};
use crate::usd::Usd;

/// Operating mode; gates the feature set (see [`crate::mode`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Companion,
    Power,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Companion => "companion",
            Mode::Power => "power",
        }
    }
}

impl FromStr for Mode {
    type Err = UnknownMode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "companion" => Ok(Mode::Companion),
            "power" => Ok(Mode::Power),
            other => Err(UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown mode: {0}")]
pub struct UnknownMode(pub String);

/// Task classification driving template selection and judge profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskType {
    Code,
    Research,
    Analysis,
    Creative,
    Custom,
}

impl TaskType {
    pub const ALL: [TaskType; 5] = [
        TaskType::Code,
        TaskType::Research,
        TaskType::Analysis,
        TaskType::Creative,
        TaskType::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Code => "code",
            TaskType::Research => "research",
            TaskType::Analysis => "analysis",
            TaskType::Creative => "creative",
            TaskType::Custom => "custom",
        }
    }
}

impl FromStr for TaskType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task type: {s}"))
    }
}

/// A user task: prompt, classification, budget constraint, and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub prompt: String,
    pub task_type: TaskType,
    pub budget: Usd,
    pub mode: Mode,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), TaskSpecError> {
        if self.id.trim().is_empty() {
            return Err(TaskSpecError::EmptyId);
        }
        if self.prompt.trim().is_empty() {
            return Err(TaskSpecError::EmptyPrompt);
        }
        if !self.budget.is_positive() {
            return Err(TaskSpecError::NonPositiveBudget(self.budget));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TaskSpecError {
    #[error("task id must be non-empty")]
    EmptyId,
    #[error("prompt must be non-empty")]
    EmptyPrompt,
    #[error("budget must be positive, got {0}")]
    NonPositiveBudget(Usd),
}

/// One agent role in a team design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub role: String,
    pub system_prompt: String,
    pub tools: Vec<String>,
    pub model_id: String,
}

impl AgentSpec {
    pub fn new(name: &str, role: &str, system_prompt: &str, model_id: &str) -> AgentSpec {
        AgentSpec {
            name: name.to_string(),
            role: role.to_string(),
            system_prompt: system_prompt.to_string(),
            tools: Vec::new(),
            model_id: model_id.to_string(),
        }
    }
}

/// A complete team design: agent roles, topology and its parameters.
/// The tool map and model map are views over the agent list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamDesign {
    pub agents: Vec<AgentSpec>,
    pub topology: TopologyKind,
    #[serde(default)]
    pub params: TopologyParams,
}

impl TeamDesign {
    pub fn new(agents: Vec<AgentSpec>, topology: TopologyKind, params: TopologyParams) -> Self {
        TeamDesign {
            agents,
            topology,
            params,
        }
    }

    /// Agent name -> attached tool names.
    pub fn tool_map(&self) -> BTreeMap<&str, &[String]> {
        self.agents
            .iter()
            .map(|a| (a.name.as_str(), a.tools.as_slice()))
            .collect()
    }

    /// Agent name -> model id.
    pub fn model_map(&self) -> BTreeMap<&str, &str> {
        self.agents
            .iter()
            .map(|a| (a.name.as_str(), a.model_id.as_str()))
            .collect()
    }

    pub fn agent_names(&self) -> Vec<&str> {
        self.agents.iter().map(|a| a.name.as_str()).collect()
    }
}
