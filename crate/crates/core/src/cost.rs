//! Per-task cost accounting and budget checks.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::router::catalog::Catalog;
use crate::usd::Usd;

/// One model invocation's token usage priced at catalog rates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRecord {
    pub task_id: String,
    pub model_id: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub usd: Usd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetStatus {
    Ok,
    Exceeded { spent: Usd, cap: Usd },
}

impl BudgetStatus {
    pub fn is_ok(self) -> bool {
        matches!(self, BudgetStatus::Ok)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CostError {
    #[error("unknown model: {0}")]
    UnknownModel(String),
}

/// Tracks cumulative spend per task. Totals only grow.
#[derive(Default)]
pub struct CostTracker {
    totals: Mutex<BTreeMap<String, Usd>>,
}

impl CostTracker {
    pub fn new() -> CostTracker {
        CostTracker::default()
    }

    /// Prices the call at the model's catalog rates and updates the task
    /// total atomically.
    pub fn record(
        &self,
        catalog: &Catalog,
        task_id: &str,
        model_id: &str,
        tokens_in: u64,
        tokens_out: u64,
    ) -> Result<CostRecord, CostError> {
        let model = catalog
            .get(model_id)
            .ok_or_else(|| CostError::UnknownModel(model_id.to_string()))?;
        let usd = Usd::token_cost(tokens_in, model.input_rate)
            + Usd::token_cost(tokens_out, model.output_rate);
        let mut totals = self.totals.lock().expect("cost tracker poisoned");
        *totals.entry(task_id.to_string()).or_insert(Usd::ZERO) += usd;
        Ok(CostRecord {
            task_id: task_id.to_string(),
            model_id: model_id.to_string(),
            tokens_in,
            tokens_out,
            usd,
        })
    }

    pub fn total(&self, task_id: &str) -> Usd {
        self.totals
            .lock()
            .expect("cost tracker poisoned")
            .get(task_id)
            .copied()
            .unwrap_or(Usd::ZERO)
    }

    /// Restores a task total from a checkpoint. Never lowers an existing
    /// total (spend is monotone).
    pub fn restore_total(&self, task_id: &str, spent: Usd) {
        let mut totals = self.totals.lock().expect("cost tracker poisoned");
        let entry = totals.entry(task_id.to_string()).or_insert(Usd::ZERO);
        if spent > *entry {
            *entry = spent;
        }
    }

    /// Ok iff cumulative cost <= budget * multiplier. Multiplier is 1 for
    /// behavioral contracts and 3 for the redesign loop hard cap.
    pub fn check_budget(&self, task_id: &str, budget: Usd, multiplier: u32) -> BudgetStatus {
        let spent = self.total(task_id);
        let cap = budget * multiplier;
        if spent <= cap {
            BudgetStatus::Ok
        } else {
            BudgetStatus::Exceeded { spent, cap }
        }
    }
}
