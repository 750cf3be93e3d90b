//! Goodhart detection: four signals of metric gaming over the evaluation
//! history, a risk level derived from how many fired, and the corrective
//! actions (judge rotation, panel replacement).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::judge::pipeline::JudgePanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodhartConfig {
    /// Normalized cross-judge entropy below this flags lowEntropy.
    pub entropy_threshold: f64,
    /// Window (evaluations) for calibration and inflation signals.
    pub calibration_window: usize,
    /// |mean confidence - mean accuracy| above this flags calibrationDrift.
    pub calibration_threshold: f64,
    /// scoreInflation fires when delta_score > factor * delta_reward.
    pub inflation_factor: f64,
    /// Window (redesigns) for the diversity signal.
    pub diversity_window: usize,
    /// Fewer distinct team signatures than this flags diversityCollapse.
    pub diversity_min_distinct: usize,
}

impl Default for GoodhartConfig {
    fn default() -> Self {
        GoodhartConfig {
            entropy_threshold: 0.3,
            calibration_window: 50,
            calibration_threshold: 0.15,
            inflation_factor: 1.5,
            diversity_window: 10,
            diversity_min_distinct: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GoodhartSignal {
    LowEntropy,
    CalibrationDrift,
    ScoreInflation,
    DiversityCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLevel {
    None,
    Low,
    Medium,
    High,
}

impl RiskLevel {
    /// Risk is a pure function of the number of fired signals.
    pub fn from_signal_count(count: usize) -> RiskLevel {
        match count {
            0 => RiskLevel::None,
            1 => RiskLevel::Low,
            2 => RiskLevel::Medium,
            _ => RiskLevel::High,
        }
    }
}

/// One evaluation's record in the Goodhart history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Per-judge weighted totals for the same output.
    pub judge_scores: Vec<f64>,
    /// Panel mean self-reported confidence.
    pub confidence: f64,
    /// Observed accuracy label (downstream acceptance at desk scale).
    pub accuracy: f64,
    /// Composite reward recorded for the episode.
    pub reward: f64,
    /// Team signature: topology, agent count, sorted role names.
    pub team_signature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodhartReport {
    pub signals: BTreeSet<GoodhartSignal>,
    /// Signals whose window demands were not met; reported, never flagged.
    pub indeterminate: BTreeSet<GoodhartSignal>,
    pub risk: RiskLevel,
}

/// Normalized Shannon entropy of the judges' score-mass distribution:
/// scores normalized to sum 1, entropy divided by log2(k). `None` when the
/// distribution is undefined (fewer than two judges or zero mass).
pub fn normalized_score_entropy(scores: &[f64]) -> Option<f64> {
    if scores.len() < 2 {
        return None;
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let entropy: f64 = scores
        .iter()
        .map(|&s| {
            let p = s / total;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum();
    Some(entropy / (scores.len() as f64).log2())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        return 0.0;
    }
    collected.iter().sum::<f64>() / collected.len() as f64
}

/// Evaluates the four signals over the history. Signals whose window is not
/// yet filled are indeterminate, never flagged.
pub fn detect(history: &[EvalRecord], config: &GoodhartConfig) -> GoodhartReport {
    let mut signals = BTreeSet::new();
    let mut indeterminate = BTreeSet::new();

    // Low entropy: divergent scores for the latest evaluation.
    match history
        .last()
        .and_then(|r| normalized_score_entropy(&r.judge_scores))
    {
        Some(entropy) => {
            if entropy < config.entropy_threshold {
                signals.insert(GoodhartSignal::LowEntropy);
            }
        }
        None => {
            indeterminate.insert(GoodhartSignal::LowEntropy);
        }
    }

    // Calibration drift over the last `calibration_window` evaluations.
    if history.len() >= config.calibration_window {
        let window = &history[history.len() - config.calibration_window..];
        let confidence = mean(window.iter().map(|r| r.confidence));
        let accuracy = mean(window.iter().map(|r| r.accuracy));
        if (confidence - accuracy).abs() > config.calibration_threshold {
            signals.insert(GoodhartSignal::CalibrationDrift);
        }
    } else {
        indeterminate.insert(GoodhartSignal::CalibrationDrift);
    }

    // Score inflation: second-half mean minus first-half mean of the window,
    // for judge scores versus recorded rewards.
    if history.len() >= config.calibration_window {
        let window = &history[history.len() - config.calibration_window..];
        let half = window.len() / 2;
        let record_score = |r: &EvalRecord| mean(r.judge_scores.iter().copied());
        let delta_score = mean(window[half..].iter().map(record_score))
            - mean(window[..half].iter().map(record_score));
        let delta_reward = mean(window[half..].iter().map(|r| r.reward))
            - mean(window[..half].iter().map(|r| r.reward));
        if delta_score > config.inflation_factor * delta_reward {
            signals.insert(GoodhartSignal::ScoreInflation);
        }
    } else {
        indeterminate.insert(GoodhartSignal::ScoreInflation);
    }

    // Diversity collapse over the last `diversity_window` redesigns.
    if history.len() >= config.diversity_window {
        let window = &history[history.len() - config.diversity_window..];
        let distinct: BTreeSet<&str> = window.iter().map(|r| r.team_signature.as_str()).collect();
        if distinct.len() < config.diversity_min_distinct {
            signals.insert(GoodhartSignal::DiversityCollapse);
        }
    } else {
        indeterminate.insert(GoodhartSignal::DiversityCollapse);
    }

    let risk = RiskLevel::from_signal_count(signals.len());
    GoodhartReport {
        signals,
        indeterminate,
        risk,
    }
}

/// Corrective action taken for a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum GoodhartAction {
    /// Risk none/low: log only.
    LogOnly,
    /// Risk medium: one judge swapped for the next configured reserve.
    RotatedOne { out: String, into: String },
    /// Risk high: round discarded, the whole panel replaced.
    PanelReplaced { out: Vec<String>, into: Vec<String> },
    /// No reserves left to rotate in; needs a human.
    Escalated { reason: String },
}

impl GoodhartAction {
    /// True when the current evaluation round must be re-run.
    pub fn discards_round(&self) -> bool {
        matches!(self, GoodhartAction::PanelReplaced { .. })
    }
}

/// Applies the report's risk level to the panel: medium rotates exactly one
/// judge, high replaces the whole panel and discards the round.
pub fn apply_action(report: &GoodhartReport, panel: &mut JudgePanel) -> GoodhartAction {
    match report.risk {
        RiskLevel::None | RiskLevel::Low => GoodhartAction::LogOnly,
        RiskLevel::Medium => match panel.rotate_one() {
            Some((out, into)) => GoodhartAction::RotatedOne { out, into },
            None => GoodhartAction::Escalated {
                reason: "medium Goodhart risk but no reserve judges configured".to_string(),
            },
        },
        RiskLevel::High => match panel.replace_all() {
            Some((out, into)) => GoodhartAction::PanelReplaced { out, into },
            None => GoodhartAction::Escalated {
                reason: "high Goodhart risk but not enough reserve judges".to_string(),
            },
        },
    }
}
