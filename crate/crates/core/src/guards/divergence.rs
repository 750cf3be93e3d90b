//! Jensen-Shannon divergence and score histograms.
//!
//! Everything here works in log base 2 so JSD lands in [0, 1] and the drift
//! threshold is attainable (in nats JSD is capped at ln 2 ~ 0.693).

use serde::{Deserialize, Serialize};

pub const HIST_BINS: usize = 10;
/// Laplace smoothing epsilon applied to histograms before divergence.
pub const SMOOTHING_EPS: f64 = 1e-6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DivergenceError {
    #[error("distributions have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("not a distribution: components must be nonnegative and sum to 1")]
    InvalidDistribution,
}

fn check_distribution(p: &[f64]) -> Result<(), DivergenceError> {
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(DivergenceError::InvalidDistribution);
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DivergenceError::InvalidDistribution);
    }
    Ok(())
}

/// KL divergence in bits with the 0 log 0 = 0 convention. Assumes q_i > 0
/// wherever p_i > 0 (guaranteed against the JSD mixture).
fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| if pi > 0.0 { pi * (pi / qi).log2() } else { 0.0 })
        .sum()
}

/// Jensen-Shannon divergence in bits:
/// `0.5 KL(P || M) + 0.5 KL(Q || M)` with `M = (P + Q) / 2`.
/// Symmetric, zero iff P = Q, and at most 1.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64, DivergenceError> {
    if p.len() != q.len() {
        return Err(DivergenceError::LengthMismatch(p.len(), q.len()));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let mixture: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| (a + b) / 2.0).collect();
    Ok(0.5 * kl_bits(p, &mixture) + 0.5 * kl_bits(q, &mixture))
}

/// Ten uniform bins over [0, 1]; scores at 1.0 land in the last bin.
pub fn score_histogram(scores: &[f64]) -> [f64; HIST_BINS] {
    let mut counts = [0usize; HIST_BINS];
    for &score in scores {
        let bin = ((score * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
        counts[bin] += 1;
    }
    let total = scores.len().max(1) as f64;
    let mut hist = [0.0; HIST_BINS];
    for (slot, count) in hist.iter_mut().zip(counts) {
        *slot = count as f64 / total;
    }
    hist
}

/// Adds epsilon mass to every bin and renormalizes, so KL terms never
/// divide by zero.
pub fn laplace_smooth(hist: &[f64; HIST_BINS]) -> [f64; HIST_BINS] {
    let mut smoothed = [0.0; HIST_BINS];
    let denom = 1.0 + HIST_BINS as f64 * SMOOTHING_EPS;
    for (slot, &value) in smoothed.iter_mut().zip(hist) {
        *slot = (value + SMOOTHING_EPS) / denom;
    }
    smoothed
}

/// A valid, smoothed reference distribution over score bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution(pub [f64; HIST_BINS]);

impl ScoreDistribution {
    pub fn from_scores(scores: &[f64]) -> ScoreDistribution {
        ScoreDistribution(score_histogram(scores))
    }

    pub fn smoothed(&self) -> [f64; HIST_BINS] {
        laplace_smooth(&self.0)
    }
}
