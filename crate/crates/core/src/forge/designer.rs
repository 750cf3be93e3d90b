//! Task classification and the deterministic template designer.
//!
//! The designer is a port so a live LLM designer can replace the templates
//! later; the template implementation keeps desk-scale runs reproducible.

use std::collections::BTreeSet;

use crate::task::{AgentSpec, TaskSpec, TaskType, TeamDesign};
use crate::topology::{ToolRegistry, TopologyKind, TopologyParams};

use super::store::DesignRecord;
use super::ForgeError;

/// Keyword table for the rule-based classifier, checked in order.
const CODE_KEYWORDS: &[&str] = &[
    "implement",
    "api",
    "endpoint",
    "function",
    "refactor",
    "bug",
    "compile",
    "code",
    "unit test",
    "script",
    "library",
    "class ",
    "rest ",
];
const RESEARCH_KEYWORDS: &[&str] = &[
    "research",
    "sources",
    "survey",
    "literature",
    "investigate",
    "cite",
    "papers",
    "state of the art",
];
const ANALYSIS_KEYWORDS: &[&str] = &[
    "analyze",
    "analysis",
    "compare",
    "evaluate",
    "assess",
    "metrics",
    "trend",
    "breakdown",
];
const CREATIVE_KEYWORDS: &[&str] = &[
    "haiku", "poem", "story", "creative", "song", "fiction", "novel", "lyrics",
];

/// Rule-based task classification; no keyword match falls back to custom.
pub fn classify_task(prompt: &str) -> TaskType {
    let lower = prompt.to_lowercase();
    let tables: [(&[&str], TaskType); 4] = [
        (CODE_KEYWORDS, TaskType::Code),
        (RESEARCH_KEYWORDS, TaskType::Research),
        (ANALYSIS_KEYWORDS, TaskType::Analysis),
        (CREATIVE_KEYWORDS, TaskType::Creative),
    ];
    for (keywords, task_type) in tables {
        if keywords.iter().any(|k| lower.contains(k)) {
            return task_type;
        }
    }
    TaskType::Custom
}

/// Everything a designer needs to produce one design.
pub struct DesignRequest<'a> {
    pub task: &'a TaskSpec,
    pub task_type: TaskType,
    /// Topology recommendation (RL or operator), honored when allowed.
    pub recommendation: Option<TopologyKind>,
    pub allowed: &'a BTreeSet<TopologyKind>,
    pub tools: &'a ToolRegistry,
    /// Model chosen by the router's active strategy, applied to every agent.
    pub model_id: String,
}

/// The designer port: classification, fresh generation, and adaptation of a
/// proven library design.
pub trait DesignerPort: Send + Sync {
    fn classify(&self, prompt: &str) -> TaskType;
    fn generate(&self, request: &DesignRequest<'_>) -> Result<TeamDesign, ForgeError>;
    fn adapt(
        &self,
        record: &DesignRecord,
        request: &DesignRequest<'_>,
    ) -> Result<TeamDesign, ForgeError>;
}

/// Deterministic template designer keyed by task type and topology.
#[derive(Debug, Default, Clone)]
pub struct TemplateDesigner;

/// Preferred topology per task type (code's 3-agent pipeline, etc.).
pub fn default_topology(task_type: TaskType) -> TopologyKind {
    match task_type {
        TaskType::Code => TopologyKind::Sequential,
        TaskType::Research => TopologyKind::Star,
        TaskType::Analysis => TopologyKind::Mixture,
        TaskType::Creative => TopologyKind::Debate,
        TaskType::Custom => TopologyKind::Parallel,
    }
}

/// The preferred topology demoted to the mode's allowed set: an ungated
/// preference stands; star falls back to hierarchical (hub becomes manager);
/// anything else falls back to the first allowed topology.
pub fn allowed_topology(preferred: TopologyKind, allowed: &BTreeSet<TopologyKind>) -> TopologyKind {
    if allowed.contains(&preferred) {
        return preferred;
    }
    if preferred == TopologyKind::Star && allowed.contains(&TopologyKind::Hierarchical) {
        return TopologyKind::Hierarchical;
    }
    TopologyKind::ALL
        .into_iter()
        .find(|k| allowed.contains(k))
        .unwrap_or(preferred)
}

fn prompt_for(role: &str, task: &str) -> String {
    format!("You are the {role} for this task: {task}")
}

/// Role template per topology, sized to satisfy the arity constraints.
fn agents_for(
    kind: TopologyKind,
    task_type: TaskType,
    task: &str,
    model_id: &str,
) -> (Vec<AgentSpec>, TopologyParams) {
    let mk = |name: &str, role: &str| AgentSpec::new(name, role, &prompt_for(role, task), model_id);
    match kind {
        TopologyKind::Sequential => {
            let agents = if task_type == TaskType::Code {
                vec![
                    mk("architect", "architect"),
                    mk("implementer", "implementer"),
                    mk("reviewer", "reviewer"),
                ]
            } else {
                vec![
                    mk("planner", "planner"),
                    mk("worker", "worker"),
                    mk("refiner", "refiner"),
                ]
            };
            (agents, TopologyParams::default())
        }
        TopologyKind::Parallel => (
            vec![mk("worker-1", "worker"), mk("worker-2", "worker")],
            TopologyParams::default(),
        ),
        TopologyKind::Hierarchical => (
            vec![
                mk("manager", "manager"),
                mk("worker-1", "worker"),
                mk("worker-2", "worker"),
            ],
            TopologyParams::default(),
        ),
        TopologyKind::Dag => (
            vec![
                mk("intake", "intake"),
                mk("branch-a", "specialist"),
                mk("branch-b", "specialist"),
                mk("synthesizer", "synthesizer"),
            ],
            TopologyParams::dag(&[
                ("intake", "branch-a"),
                ("intake", "branch-b"),
                ("branch-a", "synthesizer"),
                ("branch-b", "synthesizer"),
            ]),
        ),
        TopologyKind::Mixture => (
            vec![
                mk("generator-1", "generator"),
                mk("generator-2", "generator"),
                mk("aggregator", "aggregator"),
            ],
            TopologyParams::default(),
        ),
        TopologyKind::Debate => (
            vec![mk("proposer", "proposer"), mk("critic", "critic")],
            TopologyParams::default(),
        ),
        TopologyKind::Mesh => (
            vec![
                mk("peer-1", "peer"),
                mk("peer-2", "peer"),
                mk("peer-3", "peer"),
            ],
            TopologyParams::default(),
        ),
        TopologyKind::Star => (
            vec![
                mk("hub", "hub"),
                mk("spoke-1", "spoke"),
                mk("spoke-2", "spoke"),
            ],
            TopologyParams::default(),
        ),
        TopologyKind::Circular => (
            vec![
                mk("editor-1", "editor"),
                mk("editor-2", "editor"),
                mk("editor-3", "editor"),
            ],
            TopologyParams::default(),
        ),
        TopologyKind::Grid => (
            vec![
                mk("cell-0-0", "cell"),
                mk("cell-0-1", "cell"),
                mk("cell-1-0", "cell"),
                mk("cell-1-1", "cell"),
            ],
            TopologyParams::grid(2, 2),
        ),
        TopologyKind::Forest => (
            vec![
                mk("root-a", "synthesizer"),
                mk("leaf-a1", "worker"),
                mk("leaf-a2", "worker"),
                mk("root-b", "synthesizer"),
                mk("leaf-b1", "worker"),
            ],
            TopologyParams::forest(&[
                ("leaf-a1", "root-a"),
                ("leaf-a2", "root-a"),
                ("leaf-b1", "root-b"),
            ]),
        ),
        TopologyKind::Maker => (
            vec![
                mk("proposer", "proposer"),
                mk("voter-1", "voter"),
                mk("voter-2", "voter"),
                mk("voter-3", "voter"),
            ],
            TopologyParams::default(),
        ),
    }
}

impl DesignerPort for TemplateDesigner {
    fn classify(&self, prompt: &str) -> TaskType {
        classify_task(prompt)
    }

    fn generate(&self, request: &DesignRequest<'_>) -> Result<TeamDesign, ForgeError> {
        if request.model_id.is_empty() {
            return Err(ForgeError::NoModels);
        }
        let preferred = request
            .recommendation
            .filter(|k| request.allowed.contains(k))
            .unwrap_or_else(|| {
                allowed_topology(default_topology(request.task_type), request.allowed)
            });
        let (agents, params) = agents_for(
            preferred,
            request.task_type,
            &request.task.prompt,
            &request.model_id,
        );
        Ok(TeamDesign::new(agents, preferred, params))
    }

    fn adapt(
        &self,
        record: &DesignRecord,
        request: &DesignRequest<'_>,
    ) -> Result<TeamDesign, ForgeError> {
        if request.model_id.is_empty() {
            return Err(ForgeError::NoModels);
        }
        let mut design = record.design.clone();
        for agent in &mut design.agents {
            agent.system_prompt = prompt_for(&agent.role, &request.task.prompt);
            agent.model_id = request.model_id.clone();
        }
        Ok(design)
    }
}
