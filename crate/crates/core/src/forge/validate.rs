//! Design validation: structure, arity, tool resolution, model resolution.

use crate::router::catalog::Catalog;
use crate::task::TeamDesign;
use crate::topology::{validate_structure, ToolRegistry};

/// Checks a design against the tool registry and catalog. Returns a list of
/// violations; empty means valid. Never panics.
pub fn validate_design(
    design: &TeamDesign,
    tools: &ToolRegistry,
    catalog: &Catalog,
) -> Vec<String> {
    let mut violations = validate_structure(design);
    for agent in &design.agents {
        for tool in &agent.tools {
            if !tools.contains(tool) {
                violations.push(format!(
                    "agent {} references unregistered tool {tool}",
                    agent.name
                ));
            }
        }
        if catalog.get(&agent.model_id).is_none() {
            violations.push(format!(
                "agent {} references unknown model {}",
                agent.name, agent.model_id
            ));
        }
    }
    violations
}
