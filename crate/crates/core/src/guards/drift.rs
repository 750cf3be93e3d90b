//! Judge drift monitoring: JSD between a judge's reference score
//! distribution and a sliding window of recent scores.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::divergence::{jsd, laplace_smooth, score_histogram, ScoreDistribution, HIST_BINS};

/// Intervention threshold on the JSD between reference and window.
pub const DRIFT_THETA: f64 = 0.877;
/// Sliding window length in scores.
pub const DRIFT_WINDOW: usize = 50;
/// Fraction of the panel that must be suspended to trigger recalibration.
pub const RECALIBRATE_FRACTION: f64 = 0.5;

/// Per-judge drift state: the reference histogram and the recent window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftState {
    pub judge_id: String,
    reference: ScoreDistribution,
    window: VecDeque<f64>,
    pub suspended: bool,
}

impl DriftState {
    pub fn from_golden(judge_id: &str, golden_scores: &[f64]) -> DriftState {
        DriftState {
            judge_id: judge_id.to_string(),
            reference: ScoreDistribution::from_scores(golden_scores),
            window: VecDeque::new(),
            suspended: false,
        }
    }

    /// Uses an explicit reference distribution over the ten score bins.
    pub fn with_reference(judge_id: &str, reference: [f64; HIST_BINS]) -> DriftState {
        DriftState {
            judge_id: judge_id.to_string(),
            reference: ScoreDistribution(reference),
            window: VecDeque::new(),
            suspended: false,
        }
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn reference(&self) -> &ScoreDistribution {
        &self.reference
    }

    /// Current window as a smoothed histogram, once full.
    pub fn window_histogram(&self, window_size: usize) -> Option<[f64; HIST_BINS]> {
        if self.window.len() < window_size {
            return None;
        }
        let scores: Vec<f64> = self.window.iter().copied().collect();
        Some(score_histogram(&scores))
    }
}

/// Outcome of feeding one score through the drift check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum DriftOutcome {
    /// Window not yet full or divergence under the threshold.
    Ok { jsd: Option<f64> },
    /// This judge just crossed the threshold and is suspended. The snapshots
    /// accompany the drift event.
    Suspended {
        jsd: f64,
        reference: Vec<f64>,
        window: Vec<f64>,
    },
    /// At least half the panel is suspended; references were reset from the
    /// golden set and every judge is active again.
    Recalibrated { jsd: f64, suspended_fraction: f64 },
}

/// Panel-wide drift monitor.
pub struct DriftMonitor {
    states: BTreeMap<String, DriftState>,
    pub theta: f64,
    pub window_size: usize,
    golden: Vec<f64>,
}

impl DriftMonitor {
    pub fn new(golden: Vec<f64>, theta: f64, window_size: usize) -> DriftMonitor {
        DriftMonitor {
            states: BTreeMap::new(),
            theta,
            window_size,
            golden,
        }
    }

    pub fn register(&mut self, judge_id: &str) {
        self.states
            .entry(judge_id.to_string())
            .or_insert_with(|| DriftState::from_golden(judge_id, &self.golden));
    }

    pub fn register_with_reference(&mut self, judge_id: &str, reference: [f64; HIST_BINS]) {
        self.states.insert(
            judge_id.to_string(),
            DriftState::with_reference(judge_id, reference),
        );
    }

    pub fn is_suspended(&self, judge_id: &str) -> bool {
        self.states
            .get(judge_id)
            .map(|s| s.suspended)
            .unwrap_or(false)
    }

    pub fn suspended_fraction(&self) -> f64 {
        if self.states.is_empty() {
            return 0.0;
        }
        let suspended = self.states.values().filter(|s| s.suspended).count();
        suspended as f64 / self.states.len() as f64
    }

    pub fn state(&self, judge_id: &str) -> Option<&DriftState> {
        self.states.get(judge_id)
    }

    /// Pushes a new score into the judge's window; once the window is full,
    /// compares it against the reference. Crossing the threshold suspends
    /// the judge; if at least half the panel is then suspended, references
    /// reset from the golden set (recalibration).
    pub fn record_score(&mut self, judge_id: &str, score: f64) -> DriftOutcome {
        self.register(judge_id);
        let window_size = self.window_size;
        let theta = self.theta;
        let state = self.states.get_mut(judge_id).expect("registered");
        state.window.push_back(score);
        if state.window.len() > window_size {
            state.window.pop_front();
        }
        let Some(window_hist) = state.window_histogram(window_size) else {
            return DriftOutcome::Ok { jsd: None };
        };
        let reference = state.reference.smoothed();
        let window = laplace_smooth(&window_hist);
        let divergence = jsd(&reference, &window).expect("histograms are distributions");
        if divergence <= theta {
            return DriftOutcome::Ok {
                jsd: Some(divergence),
            };
        }
        state.suspended = true;
        let fraction = self.suspended_fraction();
        if fraction >= RECALIBRATE_FRACTION {
            self.recalibrate();
            return DriftOutcome::Recalibrated {
                jsd: divergence,
                suspended_fraction: fraction,
            };
        }
        let state = self.states.get(judge_id).expect("registered");
        DriftOutcome::Suspended {
            jsd: divergence,
            reference: state.reference.smoothed().to_vec(),
            window: window.to_vec(),
        }
    }

    /// Resets every judge's reference from the golden set, clears windows,
    /// and lifts all suspensions.
    pub fn recalibrate(&mut self) {
        let reference = ScoreDistribution::from_scores(&self.golden);
        for state in self.states.values_mut() {
            state.reference = reference.clone();
            state.window.clear();
            state.suspended = false;
        }
    }
}
