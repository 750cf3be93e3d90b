//! Per-(task type, topology) reward statistics backing the topology
//! recommendation the forge consults before designing.

use std::collections::BTreeMap;

use crate::task::TaskType;
use crate::topology::TopologyKind;

#[derive(Debug, Clone, Default)]
pub struct TopologyStats {
    totals: BTreeMap<(TaskType, TopologyKind), (f64, u64)>,
}

impl TopologyStats {
    pub fn new() -> TopologyStats {
        TopologyStats::default()
    }

    pub fn update(&mut self, task_type: TaskType, topology: TopologyKind, reward: f64) {
        let entry = self.totals.entry((task_type, topology)).or_insert((0.0, 0));
        entry.0 += reward;
        entry.1 += 1;
    }

    pub fn mean(&self, task_type: TaskType, topology: TopologyKind) -> Option<f64> {
        self.totals
            .get(&(task_type, topology))
            .map(|(sum, count)| sum / *count as f64)
    }

    /// Best-performing topology for the task type, ties broken by the fixed
    /// topology order. None until at least one sample exists.
    pub fn recommend(&self, task_type: TaskType) -> Option<TopologyKind> {
        let mut best: Option<(TopologyKind, f64)> = None;
        for kind in TopologyKind::ALL {
            if let Some(mean) = self.mean(task_type, kind) {
                match best {
                    Some((_, best_mean)) if mean <= best_mean => {}
                    _ => best = Some((kind, mean)),
                }
            }
        }
        best.map(|(kind, _)| kind)
    }
}
