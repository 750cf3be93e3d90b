//! The deterministic 12-step pipeline with steering, security policy,
//! simulation, checkpointing, composite reward, and escalation.

pub mod policy;
pub mod sim;
pub mod state;
pub mod steering;

mod engine;

pub use engine::{
    builtin_catalog, composite_reward, derive_rng, team_signature, BehaviorRecord, EchoExecutor,
    Engine, EngineBuilder, EngineError, MemoryPort, NoopMemory, Ports, RunOptions, TaskResult,
};
pub use policy::{
    content_blocked, pattern_matches, security_check, PolicyRule, SecurityDecision, SecurityPolicy,
};
pub use sim::{simulate, CostEstimate, SimAssumptions, SimError};
pub use state::{Checkpoint, TaskState, TaskStatus};
pub use steering::{SteeringCommand, SteeringController};
