//! Multi-criteria judge scoring, Shannon-entropy disagreement, three
//! consensus algorithms, and the judging pipeline with drift and
//! anti-fabrication checks.

pub mod consensus;
pub mod pipeline;
pub mod profile;
pub mod score;

pub use consensus::{
    consensus_bft, consensus_raft, consensus_weighted_majority, entropy_bits, run_consensus,
    ConsensusAlgorithm, ConsensusError, ConsensusResult, TierWeights,
};
pub use pipeline::{run_judge_pipeline, JudgeEntry, JudgePanel, PipelineConfig, Verdict};
pub use profile::{JudgeProfile, ProfileError};
pub use score::{score_output, JudgeError, JudgePort, JudgeScore, ModelTier, Vote};
