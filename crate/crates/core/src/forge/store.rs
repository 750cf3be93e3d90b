//! The design library: proven team designs per task type, a rolling window,
//! and the memory guard that blocks evictions which would forget a topology.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::task::{TaskType, TeamDesign};
use crate::topology::TopologyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub design: TeamDesign,
    pub task_type: TaskType,
    /// Judge consensus score of the design's best run, in [0, 1].
    pub success_score: f64,
    /// Insertion sequence number; the store's logical clock.
    pub created_at: u64,
    pub evicted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum EvictOutcome {
    Evicted {
        created_at: u64,
    },
    /// Eviction would leave the topology class with fewer than two
    /// surviving entries.
    Blocked {
        class_survivors: usize,
    },
}

/// In-memory design store with JSONL persistence (one record per line).
#[derive(Debug, Default)]
pub struct DesignStore {
    records: Vec<DesignRecord>,
    next_seq: u64,
    /// Rolling window: active (non-evicted) records are trimmed to this.
    pub window_size: usize,
    path: Option<PathBuf>,
}

pub const DEFAULT_WINDOW_SIZE: usize = 100;

impl DesignStore {
    pub fn new(window_size: usize) -> DesignStore {
        DesignStore {
            window_size,
            ..Default::default()
        }
    }

    pub fn with_path(window_size: usize, path: impl Into<PathBuf>) -> DesignStore {
        DesignStore {
            window_size,
            path: Some(path.into()),
            ..Default::default()
        }
    }

    /// Loads records from a JSONL file if it exists.
    pub fn load(window_size: usize, path: &Path) -> Result<DesignStore, String> {
        let mut store = DesignStore::with_path(window_size, path);
        if !path.exists() {
            return Ok(store);
        }
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: DesignRecord = serde_json::from_str(line)
                .map_err(|e| format!("design store line {}: {e}", idx + 1))?;
            store.next_seq = store.next_seq.max(record.created_at + 1);
            store.records.push(record);
        }
        Ok(store)
    }

    pub fn save(&self) -> Result<(), String> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
        let mut lines = String::new();
        for record in &self.records {
            lines.push_str(&serde_json::to_string(record).expect("record serializes"));
            lines.push('\n');
        }
        fs::write(path, lines).map_err(|e| e.to_string())
    }

    /// Stores a new record and trims the rolling window under the memory
    /// guard. Returns (stored sequence, evictions performed).
    pub fn store(
        &mut self,
        design: TeamDesign,
        task_type: TaskType,
        success_score: f64,
    ) -> (u64, Vec<EvictOutcome>) {
        let created_at = self.next_seq;
        self.next_seq += 1;
        self.records.push(DesignRecord {
            design,
            task_type,
            success_score,
            created_at,
            evicted: false,
        });
        let evictions = self.enforce_window();
        (created_at, evictions)
    }

    pub fn records(&self) -> &[DesignRecord] {
        &self.records
    }

    pub fn active_count(&self) -> usize {
        self.records.iter().filter(|r| !r.evicted).count()
    }

    /// Highest-scoring non-evicted record of the task type with score at or
    /// above the threshold; ties go to the most recent record.
    pub fn get_best(&self, task_type: TaskType, threshold: f64) -> Option<&DesignRecord> {
        self.records
            .iter()
            .filter(|r| !r.evicted && r.task_type == task_type && r.success_score >= threshold)
            .max_by(|a, b| {
                a.success_score
                    .partial_cmp(&b.success_score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.created_at.cmp(&b.created_at))
            })
    }

    fn class_survivors(&self, topology: TopologyKind) -> usize {
        self.records
            .iter()
            .filter(|r| !r.evicted && r.design.topology == topology)
            .count()
    }

    /// Evicts the record only if its topology class keeps at least two
    /// non-evicted entries afterwards.
    pub fn evict_with_guard(&mut self, created_at: u64) -> EvictOutcome {
        let Some(idx) = self
            .records
            .iter()
            .position(|r| r.created_at == created_at && !r.evicted)
        else {
            return EvictOutcome::Blocked { class_survivors: 0 };
        };
        let topology = self.records[idx].design.topology;
        let survivors_after = self.class_survivors(topology).saturating_sub(1);
        if survivors_after >= 2 {
            self.records[idx].evicted = true;
            EvictOutcome::Evicted { created_at }
        } else {
            EvictOutcome::Blocked {
                class_survivors: survivors_after,
            }
        }
    }

    /// Trims the active set to the window size, trying candidates oldest
    /// first and skipping any the guard blocks.
    fn enforce_window(&mut self) -> Vec<EvictOutcome> {
        let mut outcomes = Vec::new();
        while self.active_count() > self.window_size {
            let candidates: Vec<u64> = self
                .records
                .iter()
                .filter(|r| !r.evicted)
                .map(|r| r.created_at)
                .collect();
            let mut evicted_any = false;
            for candidate in candidates {
                match self.evict_with_guard(candidate) {
                    EvictOutcome::Evicted { created_at } => {
                        outcomes.push(EvictOutcome::Evicted { created_at });
                        evicted_any = true;
                        break;
                    }
                    blocked => outcomes.push(blocked),
                }
            }
            if !evicted_any {
                break; // every candidate is guarded; the window may overfill
            }
        }
        outcomes
    }
}
