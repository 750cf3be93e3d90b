//! orchid: a desk-scale multi-agent orchestration kernel.
//!
//! The kernel runs tasks through a deterministic 12-step pipeline: automatic
//! team design (forge), execution over one of twelve topologies (swarm),
//! consensus judging with a quality-guard stack, cost-aware model routing
//! with a learning meta-layer, and escalation to human review when the
//! redesign loop exhausts its bounds. Scripted mock agents and judges make
//! every orchestration-level behavior reproducible and testable offline.
//!
//! ```
//! use orchid::config::Config;
//! use orchid::harness::{engine_from_config, task_spec};
//! use orchid::usd::Usd;
//!
//! let out = tempfile::tempdir().unwrap();
//! let config = Config {
//!     out_dir: out.path().to_path_buf(),
//!     ..Default::default()
//! };
//! let engine = engine_from_config(config.clone(), None);
//! let spec = task_spec("demo", "Build a REST API", Usd::from_dollars(1.0), &config);
//! let result = engine.run_task(spec).unwrap();
//! assert_eq!(result.status.as_str(), "completed");
//! assert!(result.run_dir.join("events.jsonl").exists());
//! ```

pub mod config;
pub mod cost;
pub mod event;
pub mod forge;
pub mod guards;
pub mod harness;
pub mod judge;
pub mod mode;
pub mod orchestrator;
pub mod router;
pub mod task;
pub mod topology;
pub mod usd;

pub use task::{Mode, TaskSpec, TaskType};
pub use usd::Usd;
