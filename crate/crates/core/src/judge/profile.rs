//! Built-in judge profiles: weighted evaluation criteria per task family.

use serde::{Deserialize, Serialize};

use crate::task::TaskType;

/// An ordered set of (criterion, weight) pairs summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeProfile {
    pub name: String,
    pub criteria: Vec<(String, f64)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("profile {0}: weights sum to {1}, expected 1")]
    WeightsDoNotSumToOne(String, f64),
    #[error("unknown profile: {0}")]
    Unknown(String),
}

impl JudgeProfile {
    pub fn new(name: &str, criteria: &[(&str, f64)]) -> JudgeProfile {
        JudgeProfile {
            name: name.to_string(),
            criteria: criteria.iter().map(|(c, w)| (c.to_string(), *w)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let sum: f64 = self.criteria.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ProfileError::WeightsDoNotSumToOne(self.name.clone(), sum));
        }
        Ok(())
    }

    pub fn weight(&self, criterion: &str) -> Option<f64> {
        self.criteria
            .iter()
            .find(|(c, _)| c == criterion)
            .map(|(_, w)| *w)
    }

    pub fn default_profile() -> JudgeProfile {
        JudgeProfile::new(
            "default",
            &[
                ("correctness", 0.4),
                ("completeness", 0.3),
                ("quality", 0.2),
                ("safety", 0.1),
            ],
        )
    }

    pub fn code() -> JudgeProfile {
        JudgeProfile::new(
            "code",
            &[
                ("correctness", 0.35),
                ("completeness", 0.25),
                ("quality", 0.2),
                ("security", 0.15),
                ("performance", 0.05),
            ],
        )
    }

    pub fn research() -> JudgeProfile {
        JudgeProfile::new(
            "research",
            &[
                ("accuracy", 0.4),
                ("completeness", 0.25),
                ("sourcing", 0.25),
                ("clarity", 0.1),
            ],
        )
    }

    pub fn creative() -> JudgeProfile {
        JudgeProfile::new(
            "creative",
            &[
                ("relevance", 0.3),
                ("quality", 0.3),
                ("originality", 0.25),
                ("coherence", 0.15),
            ],
        )
    }

    pub fn builtin(name: &str) -> Result<JudgeProfile, ProfileError> {
        match name {
            "default" => Ok(JudgeProfile::default_profile()),
            "code" => Ok(JudgeProfile::code()),
            "research" => Ok(JudgeProfile::research()),
            "creative" => Ok(JudgeProfile::creative()),
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    /// Profile used when judging a task of the given type.
    pub fn for_task_type(task_type: TaskType) -> JudgeProfile {
        match task_type {
            TaskType::Code => JudgeProfile::code(),
            TaskType::Research => JudgeProfile::research(),
            TaskType::Creative => JudgeProfile::creative(),
            TaskType::Analysis | TaskType::Custom => JudgeProfile::default_profile(),
        }
    }
}
