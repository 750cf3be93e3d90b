//! Agent execution: system prompt injection, the bounded tool-calling loop,
//! and per-turn cost recording.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::Value;

use crate::cost::{CostError, CostTracker};
use crate::router::catalog::Catalog;
use crate::task::AgentSpec;
use crate::usd::Usd;

/// Maximum tool iterations per agent execution. After the cap the next
/// response is taken as final even if it still requests tools.
pub const MAX_TOOL_ITERATIONS: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ToolRequest {
    pub tool: String,
    pub args: Value,
}

/// One executor turn: output text plus any tool requests and token usage.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub text: String,
    pub tool_requests: Vec<ToolRequest>,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

impl AgentResponse {
    pub fn text(text: impl Into<String>) -> AgentResponse {
        AgentResponse {
            text: text.into(),
            tool_requests: Vec::new(),
            tokens_in: 0,
            tokens_out: 0,
        }
    }
}

/// Identifies one executor invocation within a topology run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentCall<'a> {
    pub task_id: &'a str,
    /// Topology-native round index (mesh/grid count from 0, the iterative
    /// review loops from 1).
    pub round: u32,
    /// 1-based turn within the tool loop.
    pub turn: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("agent {agent} failed at turn {turn}: {reason}")]
pub struct AgentFailure {
    pub agent: String,
    pub turn: u32,
    pub reason: String,
}

/// The executor port: desk-scale deployments plug scripted mocks in here,
/// a live deployment would call models through the router.
pub trait AgentExecutor: Send + Sync {
    fn execute(
        &self,
        agent: &AgentSpec,
        prompt: &str,
        call: &AgentCall,
    ) -> Result<AgentResponse, AgentFailure>;
}

type ToolFn = dyn Fn(&Value) -> Result<String, String> + Send + Sync;

/// Named tools the agents may request during execution.
#[derive(Clone, Default)]
pub struct ToolRegistry {
    tools: BTreeMap<String, Arc<ToolFn>>,
}

impl ToolRegistry {
    pub fn new() -> ToolRegistry {
        ToolRegistry::default()
    }

    /// Registry with a few arithmetic/text tools for scripted scenarios.
    pub fn with_builtins() -> ToolRegistry {
        let mut registry = ToolRegistry::new();
        registry.register("add", |args| {
            let a = args.get("a").and_then(Value::as_f64).ok_or("missing a")?;
            let b = args.get("b").and_then(Value::as_f64).ok_or("missing b")?;
            Ok(format!("{}", a + b))
        });
        registry.register("concat", |args| {
            let a = args.get("a").and_then(Value::as_str).unwrap_or("");
            let b = args.get("b").and_then(Value::as_str).unwrap_or("");
            Ok(format!("{a}{b}"))
        });
        registry.register("word_count", |args| {
            let text = args.get("text").and_then(Value::as_str).unwrap_or("");
            Ok(text.split_whitespace().count().to_string())
        });
        registry
    }

    pub fn register(
        &mut self,
        name: &str,
        tool: impl Fn(&Value) -> Result<String, String> + Send + Sync + 'static,
    ) {
        self.tools.insert(name.to_string(), Arc::new(tool));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.tools.keys().map(|k| k.as_str()).collect()
    }

    pub fn run(&self, name: &str, args: &Value) -> Option<Result<String, String>> {
        self.tools.get(name).map(|tool| tool(args))
    }
}

/// Shared services a topology run needs to execute agents.
pub struct TopologyContext<'a> {
    pub task_id: &'a str,
    pub executor: &'a dyn AgentExecutor,
    pub tools: &'a ToolRegistry,
    pub cost: &'a CostTracker,
    pub catalog: &'a Catalog,
    /// Task budget; agent execution halts once spend crosses
    /// `budget * hard_cap_multiplier`.
    pub budget: Usd,
    pub hard_cap_multiplier: u32,
    /// Swarm lifecycle events are emitted here when present. Runners only
    /// emit from the coordinating thread so event order stays deterministic.
    pub bus: Option<&'a crate::event::EventBus>,
}

impl<'a> TopologyContext<'a> {
    pub fn new(
        task_id: &'a str,
        executor: &'a dyn AgentExecutor,
        tools: &'a ToolRegistry,
        cost: &'a CostTracker,
        catalog: &'a Catalog,
        budget: Usd,
    ) -> TopologyContext<'a> {
        TopologyContext {
            task_id,
            executor,
            tools,
            cost,
            catalog,
            budget,
            hard_cap_multiplier: 3,
            bus: None,
        }
    }

    pub fn with_bus(mut self, bus: &'a crate::event::EventBus) -> TopologyContext<'a> {
        self.bus = Some(bus);
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Agent(AgentFailure),
    #[error("agent {agent} requested unregistered tool {tool}")]
    UnknownTool { agent: String, tool: String },
    #[error("cost: {0}")]
    Cost(CostError),
    #[error("budget hard cap exceeded: spent {spent} > cap {cap}")]
    BudgetHardCap { spent: Usd, cap: Usd },
}

/// Result of one agent execution (possibly several tool turns).
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRunOutput {
    pub text: String,
    pub turns: u32,
    pub tool_calls: u32,
    pub cost: Usd,
}

/// Runs one agent to completion: prepends the system prompt, loops through
/// tool requests (at most [`MAX_TOOL_ITERATIONS`]), records cost per turn,
/// and enforces the budget hard cap after every cost record.
pub fn execute_agent(
    ctx: &TopologyContext<'_>,
    agent: &AgentSpec,
    prompt: &str,
    round: u32,
) -> Result<AgentRunOutput, ExecError> {
    let mut current_prompt = if agent.system_prompt.trim().is_empty() {
        prompt.to_string()
    } else {
        format!("{}\n\n{}", agent.system_prompt, prompt)
    };
    let mut turns = 0;
    let mut tool_iterations = 0;
    let mut tool_calls = 0;
    let mut total_cost = Usd::ZERO;
    loop {
        // Once the hard cap is crossed nothing further may execute.
        if let crate::cost::BudgetStatus::Exceeded { spent, cap } =
            ctx.cost
                .check_budget(ctx.task_id, ctx.budget, ctx.hard_cap_multiplier)
        {
            return Err(ExecError::BudgetHardCap { spent, cap });
        }
        turns += 1;
        let call = AgentCall {
            task_id: ctx.task_id,
            round,
            turn: turns,
        };
        let response = ctx
            .executor
            .execute(agent, &current_prompt, &call)
            .map_err(ExecError::Agent)?;
        if response.tokens_in > 0 || response.tokens_out > 0 {
            let record = ctx
                .cost
                .record(
                    ctx.catalog,
                    ctx.task_id,
                    &agent.model_id,
                    response.tokens_in,
                    response.tokens_out,
                )
                .map_err(ExecError::Cost)?;
            total_cost += record.usd;
            let status = ctx
                .cost
                .check_budget(ctx.task_id, ctx.budget, ctx.hard_cap_multiplier);
            if let crate::cost::BudgetStatus::Exceeded { spent, cap } = status {
                return Err(ExecError::BudgetHardCap { spent, cap });
            }
        }
        if response.tool_requests.is_empty() || tool_iterations >= MAX_TOOL_ITERATIONS {
            return Ok(AgentRunOutput {
                text: response.text,
                turns,
                tool_calls,
                cost: total_cost,
            });
        }
        let mut results = Vec::new();
        for request in &response.tool_requests {
            let outcome = ctx.tools.run(&request.tool, &request.args).ok_or_else(|| {
                ExecError::UnknownTool {
                    agent: agent.name.clone(),
                    tool: request.tool.clone(),
                }
            })?;
            let rendered = match outcome {
                Ok(result) => result,
                Err(err) => format!("error: {err}"),
            };
            results.push(format!("{} -> {rendered}", request.tool));
            tool_calls += 1;
        }
        tool_iterations += 1;
        current_prompt = format!("{current_prompt}\n\nTool results:\n{}", results.join("\n"));
    }
}
