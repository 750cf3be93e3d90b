//! The quality-guard stack: score-distribution drift bounds, Goodhart
//! detection, trilemma escape hatches, and behavioral contracts.

pub mod contracts;
pub mod divergence;
pub mod drift;
pub mod goodhart;
pub mod trilemma;
