//! The twelve execution topologies and their shared machinery.
//!
//! Each topology runs a team of agents over a centralized message hub with an
//! explicit termination condition and a deterministic aggregation of agent
//! outputs. Agent execution itself is delegated to an [`AgentExecutor`]
//! callback supplied through the [`TopologyContext`].

mod context;
mod hub;
mod runner;

pub use context::{
    execute_agent, AgentCall, AgentExecutor, AgentFailure, AgentResponse, AgentRunOutput,
    ExecError, ToolRegistry, ToolRequest, TopologyContext, MAX_TOOL_ITERATIONS,
};
pub use hub::{Message, MsgHub, Recipients};
pub use runner::{
    execute_topology, parse_voter_verdict, replay_final_output, run_circular, run_dag, run_debate,
    run_forest, run_grid, run_hierarchical, run_maker, run_mesh, run_mixture, run_parallel,
    run_sequential, run_star, AgentOutcome, RunResult, Termination, TopologyError, VoterVerdict,
    MARKER_APPROVED, MARKER_CONSENSUS, MARKER_DONE, MARKER_NO_UPDATE,
};

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::task::TeamDesign;

/// The twelve execution patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Sequential,
    Parallel,
    Hierarchical,
    Dag,
    Mixture,
    Debate,
    Mesh,
    Star,
    Circular,
    Grid,
    Forest,
    Maker,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 12] = [
        TopologyKind::Sequential,
        TopologyKind::Parallel,
        TopologyKind::Hierarchical,
        TopologyKind::Dag,
        TopologyKind::Mixture,
        TopologyKind::Debate,
        TopologyKind::Mesh,
        TopologyKind::Star,
        TopologyKind::Circular,
        TopologyKind::Grid,
        TopologyKind::Forest,
        TopologyKind::Maker,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Sequential => "sequential",
            TopologyKind::Parallel => "parallel",
            TopologyKind::Hierarchical => "hierarchical",
            TopologyKind::Dag => "dag",
            TopologyKind::Mixture => "mixture",
            TopologyKind::Debate => "debate",
            TopologyKind::Mesh => "mesh",
            TopologyKind::Star => "star",
            TopologyKind::Circular => "circular",
            TopologyKind::Grid => "grid",
            TopologyKind::Forest => "forest",
            TopologyKind::Maker => "maker",
        }
    }
}

impl FromStr for TopologyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopologyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown topology: {s}"))
    }
}

/// Default vote threshold for the maker topology (voter majority).
pub const DEFAULT_VOTE_THRESHOLD: f64 = 0.66;

/// Per-topology run parameters. Fields irrelevant to a topology are ignored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopologyParams {
    /// Round cap; `None` uses the topology default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_cols: Option<usize>,
    /// Maker approval fraction in (0, 1], default 0.66, must be >= 0.5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote_threshold: Option<f64>,
    /// DAG edges (from, to) in declaration order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dag_edges: Vec<(String, String)>,
    /// Forest parent map: child agent -> parent agent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tree_parents: BTreeMap<String, String>,
}

impl TopologyParams {
    pub fn grid(rows: usize, cols: usize) -> TopologyParams {
        TopologyParams {
            grid_rows: Some(rows),
            grid_cols: Some(cols),
            ..Default::default()
        }
    }

    pub fn dag(edges: &[(&str, &str)]) -> TopologyParams {
        TopologyParams {
            dag_edges: edges
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            ..Default::default()
        }
    }

    pub fn forest(parents: &[(&str, &str)]) -> TopologyParams {
        TopologyParams {
            tree_parents: parents
                .iter()
                .map(|(c, p)| (c.to_string(), p.to_string()))
                .collect(),
            ..Default::default()
        }
    }

    pub fn vote_threshold(&self) -> f64 {
        self.vote_threshold.unwrap_or(DEFAULT_VOTE_THRESHOLD)
    }
}

/// Iterative-topology round caps when `max_rounds` is not set.
/// Non-iterative topologies derive their natural round count from the design.
pub fn default_max_rounds(kind: TopologyKind, design: &TeamDesign) -> u32 {
    match kind {
        TopologyKind::Sequential => design.agents.len() as u32,
        TopologyKind::Parallel => 1,
        TopologyKind::Hierarchical => 3,
        TopologyKind::Dag => dag_levels(design).map(|l| l.len() as u32).unwrap_or(1),
        TopologyKind::Mixture => 1,
        TopologyKind::Debate => 5,
        TopologyKind::Mesh => 4,
        TopologyKind::Star => 3,
        TopologyKind::Circular => 3,
        TopologyKind::Grid => 5,
        TopologyKind::Forest => forest_levels(design).map(|l| l.len() as u32).unwrap_or(1),
        TopologyKind::Maker => 5,
    }
}

pub fn effective_max_rounds(design: &TeamDesign) -> u32 {
    design
        .params
        .max_rounds
        .unwrap_or_else(|| default_max_rounds(design.topology, design))
}

/// Validates topology-specific arity and structure constraints.
/// Returns human-readable violations; empty means the design is well-formed.
pub fn validate_structure(design: &TeamDesign) -> Vec<String> {
    let mut violations = Vec::new();
    let n = design.agents.len();
    if n == 0 {
        violations.push("design has no agents".to_string());
        return violations;
    }
    let mut seen = std::collections::BTreeSet::new();
    for agent in &design.agents {
        if !seen.insert(agent.name.as_str()) {
            violations.push(format!("duplicate agent name: {}", agent.name));
        }
    }
    match design.topology {
        TopologyKind::Sequential | TopologyKind::Parallel => {}
        TopologyKind::Hierarchical => {
            if n < 2 {
                violations.push("hierarchical requires a manager and >=1 worker".to_string());
            }
        }
        TopologyKind::Star => {
            if n < 2 {
                violations.push("star requires a hub and >=1 spoke".to_string());
            }
        }
        TopologyKind::Mixture => {
            if n < 2 {
                violations.push("mixture requires >=1 generator and 1 aggregator".to_string());
            }
        }
        TopologyKind::Debate => {
            if n != 2 {
                violations.push(format!("debate requires exactly 2 agents, got {n}"));
            }
        }
        TopologyKind::Mesh | TopologyKind::Circular => {
            if n < 2 {
                violations.push(format!(
                    "{} requires >=2 agents, got {n}",
                    design.topology.as_str()
                ));
            }
        }
        TopologyKind::Grid => match (design.params.grid_rows, design.params.grid_cols) {
            (Some(r), Some(c)) if r > 0 && c > 0 => {
                if r * c != n {
                    violations.push(format!("grid is {r}x{c} but design has {n} agents"));
                }
            }
            _ => violations.push("grid requires positive grid_rows and grid_cols".to_string()),
        },
        TopologyKind::Dag => {
            if let Err(e) = dag_levels(design) {
                violations.push(e);
            }
        }
        TopologyKind::Forest => {
            if let Err(e) = forest_levels(design) {
                violations.push(e);
            }
        }
        TopologyKind::Maker => {
            if n < 3 {
                violations.push(format!(
                    "maker requires a proposer and >=2 voters, got {n} agents"
                ));
            }
            let threshold = design.params.vote_threshold();
            if !(0.5..=1.0).contains(&threshold) {
                violations.push(format!(
                    "maker vote threshold must be in [0.5, 1], got {threshold}"
                ));
            }
        }
    }
    violations
}

/// Groups DAG nodes into levels by longest-path depth. Errors on cycles or
/// edges referencing unknown agents.
pub fn dag_levels(design: &TeamDesign) -> Result<Vec<Vec<usize>>, String> {
    let names: BTreeMap<&str, usize> = design
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    let n = design.agents.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (from, to) in &design.params.dag_edges {
        let (Some(&u), Some(&v)) = (names.get(from.as_str()), names.get(to.as_str())) else {
            return Err(format!("dag edge references unknown agent: {from} -> {to}"));
        };
        preds[v].push(u);
        succs[u].push(v);
    }
    // Longest-path depth via DFS with cycle detection.
    let mut depth = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    fn visit(
        node: usize,
        preds: &[Vec<usize>],
        depth: &mut [usize],
        on_stack: &mut [bool],
    ) -> Result<usize, String> {
        if on_stack[node] {
            return Err(format!("dag contains a cycle through node index {node}"));
        }
        if depth[node] != usize::MAX {
            return Ok(depth[node]);
        }
        on_stack[node] = true;
        let mut d = 0;
        for &p in &preds[node] {
            d = d.max(visit(p, preds, depth, on_stack)? + 1);
        }
        on_stack[node] = false;
        depth[node] = d;
        Ok(d)
    }
    for node in 0..n {
        visit(node, &preds, &mut depth, &mut on_stack)?;
    }
    let max_depth = depth.iter().copied().max().unwrap_or(0);
    let mut levels = vec![Vec::new(); max_depth + 1];
    for (node, &d) in depth.iter().enumerate() {
        levels[d].push(node);
    }
    Ok(levels)
}

/// Groups forest nodes into levels by height (leaves first). Errors on
/// cycles or parents referencing unknown agents.
pub fn forest_levels(design: &TeamDesign) -> Result<Vec<Vec<usize>>, String> {
    let names: BTreeMap<&str, usize> = design
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    let n = design.agents.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for (child, par) in &design.params.tree_parents {
        let (Some(&c), Some(&p)) = (names.get(child.as_str()), names.get(par.as_str())) else {
            return Err(format!(
                "forest parent map references unknown agent: {child} -> {par}"
            ));
        };
        parent[c] = Some(p);
    }
    // Cycle check: walking up from any node must terminate within n steps.
    for start in 0..n {
        let mut cursor = start;
        for _ in 0..=n {
            match parent[cursor] {
                Some(p) => {
                    if p == start {
                        return Err(format!(
                            "forest parent map contains a cycle through {}",
                            design.agents[start].name
                        ));
                    }
                    cursor = p;
                }
                None => break,
            }
        }
        if parent[cursor].is_some() {
            return Err("forest parent map contains a cycle".to_string());
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(c);
        }
    }
    fn height(node: usize, children: &[Vec<usize>], memo: &mut [Option<usize>]) -> usize {
        if let Some(h) = memo[node] {
            return h;
        }
        let h = children[node]
            .iter()
            .map(|&c| height(c, children, memo) + 1)
            .max()
            .unwrap_or(0);
        memo[node] = Some(h);
        h
    }
    let mut memo = vec![None; n];
    let max_h = (0..n)
        .map(|i| height(i, &children, &mut memo))
        .max()
        .unwrap_or(0);
    let mut levels = vec![Vec::new(); max_h + 1];
    for node in 0..n {
        levels[memo[node].unwrap_or(0)].push(node);
    }
    Ok(levels)
}

/// Roots of a forest design in agent declaration order.
pub fn forest_roots(design: &TeamDesign) -> Vec<usize> {
    (0..design.agents.len())
        .filter(|i| {
            !design
                .params
                .tree_parents
                .contains_key(&design.agents[*i].name)
        })
        .collect()
}
