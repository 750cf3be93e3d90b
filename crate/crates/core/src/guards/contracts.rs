//! Behavioral contracts: pre/post predicate pairs enforced around every team
//! execution. Pre-stage violations abort before any agent runs; post-stage
//! violations feed the redesign loop as structured feedback.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::orchestrator::policy::{content_blocked, SecurityPolicy};
use crate::task::TaskType;
use crate::usd::Usd;

pub const DEFAULT_QUALITY_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pre,
    Post,
}

/// Everything the default contracts inspect about a task.
#[derive(Debug, Clone)]
pub struct ContractCtx {
    pub budget: Usd,
    pub spent: Usd,
    pub prompt: String,
    pub output: Option<String>,
    pub policy: SecurityPolicy,
    pub judges_configured: bool,
    pub consensus_score: Option<f64>,
    pub quality_threshold: f64,
}

impl ContractCtx {
    pub fn pre(
        budget: Usd,
        prompt: &str,
        policy: &SecurityPolicy,
        judges_configured: bool,
    ) -> ContractCtx {
        ContractCtx {
            budget,
            spent: Usd::ZERO,
            prompt: prompt.to_string(),
            output: None,
            policy: policy.clone(),
            judges_configured,
            consensus_score: None,
            quality_threshold: DEFAULT_QUALITY_THRESHOLD,
        }
    }
}

/// A violated contract, carried as a value into the redesign loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub contract: String,
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "contract {} violated at {:?} stage: {}",
            self.contract, self.stage, self.message
        )
    }
}

type Predicate = Box<dyn Fn(&ContractCtx) -> Result<(), String> + Send + Sync>;

/// One named contract with pure pre and post predicates.
pub struct ContractSpec {
    pub name: String,
    pre: Predicate,
    post: Predicate,
}

impl ContractSpec {
    pub fn new(
        name: &str,
        pre: impl Fn(&ContractCtx) -> Result<(), String> + Send + Sync + 'static,
        post: impl Fn(&ContractCtx) -> Result<(), String> + Send + Sync + 'static,
    ) -> ContractSpec {
        ContractSpec {
            name: name.to_string(),
            pre: Box::new(pre),
            post: Box::new(post),
        }
    }

    pub fn check(&self, stage: Stage, ctx: &ContractCtx) -> Result<(), Violation> {
        let predicate = match stage {
            Stage::Pre => &self.pre,
            Stage::Post => &self.post,
        };
        predicate(ctx).map_err(|message| Violation {
            contract: self.name.clone(),
            stage,
            message,
        })
    }
}

/// The four default invariants plus custom contracts registered per task
/// type.
pub struct ContractSet {
    global: Vec<ContractSpec>,
    per_type: BTreeMap<TaskType, Vec<ContractSpec>>,
}

impl ContractSet {
    /// budget, response validity, safety, and quality.
    pub fn defaults() -> ContractSet {
        let mut set = ContractSet {
            global: Vec::new(),
            per_type: BTreeMap::new(),
        };
        set.register(ContractSpec::new(
            "budget",
            |ctx| {
                if ctx.budget.is_positive() {
                    Ok(())
                } else {
                    Err(format!("budget must be positive, got {}", ctx.budget))
                }
            },
            |ctx| {
                if ctx.spent <= ctx.budget {
                    Ok(())
                } else {
                    Err(format!("spent {} exceeds budget {}", ctx.spent, ctx.budget))
                }
            },
        ));
        set.register(ContractSpec::new(
            "response_validity",
            |ctx| {
                if ctx.prompt.trim().is_empty() {
                    Err("prompt is empty".to_string())
                } else {
                    Ok(())
                }
            },
            |ctx| match &ctx.output {
                Some(output) if !output.trim().is_empty() => Ok(()),
                Some(_) => Err("output is empty".to_string()),
                None => Err("no output produced".to_string()),
            },
        ));
        set.register(ContractSpec::new(
            "safety",
            |ctx| {
                if ctx.policy.is_loaded() {
                    Ok(())
                } else {
                    Err("safety policy not loaded".to_string())
                }
            },
            |ctx| match &ctx.output {
                Some(output) => match content_blocked(output, &ctx.policy) {
                    Some(rule) => Err(format!("output matches blocked pattern {rule:?}")),
                    None => Ok(()),
                },
                None => Ok(()),
            },
        ));
        set.register(ContractSpec::new(
            "quality",
            |ctx| {
                if ctx.judges_configured {
                    Ok(())
                } else {
                    Err("no judges configured".to_string())
                }
            },
            |ctx| match ctx.consensus_score {
                Some(score) if score >= ctx.quality_threshold => Ok(()),
                Some(score) => Err(format!(
                    "consensus score {score} below threshold {}",
                    ctx.quality_threshold
                )),
                None => Err("no consensus score".to_string()),
            },
        ));
        set
    }

    pub fn register(&mut self, spec: ContractSpec) {
        self.global.push(spec);
    }

    pub fn register_for(&mut self, task_type: TaskType, spec: ContractSpec) {
        self.per_type.entry(task_type).or_default().push(spec);
    }

    /// Checks every applicable contract at the given stage, returning the
    /// first violation (fail-fast). Violations are values, never panics.
    pub fn evaluate(
        &self,
        stage: Stage,
        task_type: TaskType,
        ctx: &ContractCtx,
    ) -> Result<(), Violation> {
        for spec in self
            .global
            .iter()
            .chain(self.per_type.get(&task_type).into_iter().flatten())
        {
            spec.check(stage, ctx)?;
        }
        Ok(())
    }
}
