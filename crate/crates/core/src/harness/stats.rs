//! Paired t-test for the loop benchmark's significance analysis.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub mean_diff: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("paired t-test needs equal-length samples, got {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("paired t-test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
}

/// Two-tailed paired t-test of `after` against `before`.
///
/// Differences with zero variance degenerate: all-zero differences give
/// t = 0, p = 1; a nonzero constant shift reports t = +/-inf with p = 0.
pub fn paired_t_test(before: &[f64], after: &[f64]) -> Result<TTest, StatsError> {
    if before.len() != after.len() {
        return Err(StatsError::LengthMismatch(before.len(), after.len()));
    }
    let n = before.len();
    if n < 2 {
        return Err(StatsError::TooFewPairs(n));
    }
    let diffs: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    let df = n - 1;
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTest {
                t: 0.0,
                p: 1.0,
                df,
                mean_diff: 0.0,
            }
        } else {
            TTest {
                t: if mean > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                p: 0.0,
                df,
                mean_diff: mean,
            }
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("valid dof");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest {
        t,
        p,
        df,
        mean_diff: mean,
    })
}
