//! Forge: automatic team composition, design-library reuse, the redesign
//! escalation policy, and the design-store memory guard.

pub mod designer;
pub mod redesign;
pub mod stats;
pub mod store;
pub mod validate;

pub use designer::{classify_task, DesignRequest, DesignerPort, TemplateDesigner};
pub use redesign::{
    radical_design, redesign, redesign_decision, refine_design, Escalation, ForgeConfig,
    RedesignDecision, RedesignKind, RedesignOutcome, ESCALATION_STATUS,
};
pub use stats::TopologyStats;
pub use store::{DesignRecord, DesignStore, EvictOutcome};
pub use validate::validate_design;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForgeError {
    #[error("no models available in the catalog")]
    NoModels,
    #[error("designer produced an invalid design: {0:?}")]
    InvalidDesign(Vec<String>),
    #[error("no topology available for radical redesign")]
    TopologiesExhausted,
}
