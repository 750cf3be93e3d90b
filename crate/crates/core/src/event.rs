//! Typed event bus with per-task append-only logs.
//!
//! Events are the audit trail for every orchestration decision: each task owns
//! a strictly ordered log, optionally mirrored to one JSONL file per task.
//! Subscribers receive matching events by type prefix before `emit` returns.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Mutex, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Registered event types, grouped by emitter.
pub mod types {
    pub const TASK_STARTED: &str = "task:started";
    pub const TASK_STEP: &str = "task:step";
    pub const TASK_PAUSED: &str = "task:paused";
    pub const TASK_RESUMED: &str = "task:resumed";
    pub const TASK_REDIRECTED: &str = "task:redirected";
    pub const TASK_CANCELLED: &str = "task:cancelled";
    pub const TASK_COMPLETED: &str = "task:completed";
    pub const TASK_FAILED: &str = "task:failed";
    pub const TASK_ESCALATED: &str = "task:escalated";

    pub const FORGE_CLASSIFIED: &str = "forge:classified";
    pub const FORGE_DESIGNED: &str = "forge:designed";
    pub const FORGE_ADAPTED: &str = "forge:adapted";
    pub const FORGE_REDESIGNED: &str = "forge:redesigned";
    pub const FORGE_DESIGN_STORED: &str = "forge:design_stored";
    pub const FORGE_DESIGN_EVICTED: &str = "forge:design_evicted";
    pub const FORGE_EVICTION_BLOCKED: &str = "forge:eviction_blocked";

    pub const SWARM_STARTED: &str = "swarm:started";
    pub const SWARM_ROUND: &str = "swarm:round";
    pub const SWARM_AGENT_COMPLETED: &str = "swarm:agent_completed";
    pub const SWARM_AGENT_FAILED: &str = "swarm:agent_failed";
    pub const SWARM_COMPLETED: &str = "swarm:completed";
    pub const SWARM_FAILED: &str = "swarm:failed";

    pub const JUDGE_SCORED: &str = "judge:scored";
    pub const JUDGE_VERDICT: &str = "judge:verdict";
    pub const JUDGE_FABRICATION: &str = "judge:fabrication";
    pub const JUDGE_PANEL_COLLAPSED: &str = "judge:panel_collapsed";

    pub const DRIFT_WARNING: &str = "drift:warning";
    pub const DRIFT_SUSPENDED: &str = "drift:suspended";
    pub const DRIFT_RECALIBRATED: &str = "drift:recalibrated";

    pub const GOODHART_REPORT: &str = "goodhart:report";
    pub const GOODHART_ROTATION: &str = "goodhart:rotation";
    pub const GOODHART_PANEL_REPLACED: &str = "goodhart:panel_replaced";
    pub const GOODHART_ESCALATION: &str = "goodhart:escalation";

    pub const TRILEMMA_BOUND: &str = "trilemma:bound";
    pub const TRILEMMA_FIREWALL_DENIED: &str = "trilemma:firewall_denied";

    pub const CONTRACT_VIOLATION: &str = "contract:violation";

    pub const ROUTER_STRATEGY_SELECTED: &str = "router:strategy_selected";
    pub const ROUTER_MODEL_SELECTED: &str = "router:model_selected";
    pub const ROUTER_BREAKER_OPEN: &str = "router:breaker_open";
    pub const ROUTER_BREAKER_CLOSED: &str = "router:breaker_closed";

    pub const RL_Q_UPDATED: &str = "rl:q_updated";
    pub const RL_PERSISTED: &str = "rl:persisted";

    pub const DISCOVERY_COMPLETED: &str = "discovery:completed";
    pub const DISCOVERY_PROVIDER_FAILED: &str = "discovery:provider_failed";

    pub const COST_RECORDED: &str = "cost:recorded";
    pub const BUDGET_EXCEEDED: &str = "budget:exceeded";

    pub const SECURITY_BLOCKED: &str = "security:blocked";
    pub const SIMULATION_ESTIMATED: &str = "simulation:estimated";

    pub const CHECKPOINT_SAVED: &str = "checkpoint:saved";
    pub const CHECKPOINT_RESTORED: &str = "checkpoint:restored";
    pub const CHECKPOINT_CLEANED: &str = "checkpoint:cleaned";

    pub const BEHAVIOR_CAPTURED: &str = "behavior:captured";
    pub const BENCH_TASK_COMPLETED: &str = "bench:task_completed";

    pub const ALL: [&str; 53] = [
        TASK_STARTED,
        TASK_STEP,
        TASK_PAUSED,
        TASK_RESUMED,
        TASK_REDIRECTED,
        TASK_CANCELLED,
        TASK_COMPLETED,
        TASK_FAILED,
        TASK_ESCALATED,
        FORGE_CLASSIFIED,
        FORGE_DESIGNED,
        FORGE_ADAPTED,
        FORGE_REDESIGNED,
        FORGE_DESIGN_STORED,
        FORGE_DESIGN_EVICTED,
        FORGE_EVICTION_BLOCKED,
        SWARM_STARTED,
        SWARM_ROUND,
        SWARM_AGENT_COMPLETED,
        SWARM_AGENT_FAILED,
        SWARM_COMPLETED,
        SWARM_FAILED,
        JUDGE_SCORED,
        JUDGE_VERDICT,
        JUDGE_FABRICATION,
        JUDGE_PANEL_COLLAPSED,
        DRIFT_WARNING,
        DRIFT_SUSPENDED,
        DRIFT_RECALIBRATED,
        GOODHART_REPORT,
        GOODHART_ROTATION,
        GOODHART_PANEL_REPLACED,
        GOODHART_ESCALATION,
        TRILEMMA_BOUND,
        TRILEMMA_FIREWALL_DENIED,
        CONTRACT_VIOLATION,
        ROUTER_STRATEGY_SELECTED,
        ROUTER_MODEL_SELECTED,
        ROUTER_BREAKER_OPEN,
        ROUTER_BREAKER_CLOSED,
        RL_Q_UPDATED,
        RL_PERSISTED,
        DISCOVERY_COMPLETED,
        DISCOVERY_PROVIDER_FAILED,
        COST_RECORDED,
        BUDGET_EXCEEDED,
        SECURITY_BLOCKED,
        SIMULATION_ESTIMATED,
        CHECKPOINT_SAVED,
        CHECKPOINT_RESTORED,
        CHECKPOINT_CLEANED,
        BEHAVIOR_CAPTURED,
        BENCH_TASK_COMPLETED,
    ];
}

fn registry() -> &'static std::collections::BTreeSet<&'static str> {
    static REGISTRY: OnceLock<std::collections::BTreeSet<&'static str>> = OnceLock::new();
    REGISTRY.get_or_init(|| types::ALL.iter().copied().collect())
}

pub fn is_registered(event_type: &str) -> bool {
    registry().contains(event_type)
}

/// A typed, timestamped record in a task's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    #[serde(rename = "type")]
    pub event_type: String,
    pub task_id: String,
    pub ts_ms: u64,
    pub payload: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum EventError {
    #[error("unknown event type: {0}")]
    UnknownEventType(String),
    #[error("event log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log parse at line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

struct Subscriber {
    prefix: String,
    tx: Sender<Event>,
}

#[derive(Default)]
struct BusInner {
    logs: BTreeMap<String, Vec<Event>>,
    subscribers: Vec<Subscriber>,
    last_ts: u64,
}

/// Thread-safe event bus. Per-task delivery order is guaranteed; emissions
/// from different tasks interleave arbitrarily.
pub struct EventBus {
    inner: Mutex<BusInner>,
    log_dir: Option<PathBuf>,
}

impl EventBus {
    pub fn new() -> EventBus {
        EventBus {
            inner: Mutex::new(BusInner::default()),
            log_dir: None,
        }
    }

    /// Mirrors each task's log to `<dir>/<task_id>/events.jsonl`.
    pub fn with_log_dir(dir: impl Into<PathBuf>) -> EventBus {
        EventBus {
            inner: Mutex::new(BusInner::default()),
            log_dir: Some(dir.into()),
        }
    }

    /// Appends an event to the task log and delivers it to all matching
    /// subscribers before returning. Returns the per-task sequence number.
    pub fn emit(&self, event_type: &str, task_id: &str, payload: Value) -> Result<u64, EventError> {
        if !is_registered(event_type) {
            return Err(EventError::UnknownEventType(event_type.to_string()));
        }
        let mut inner = self.inner.lock().expect("event bus poisoned");
        let wall = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let ts_ms = wall.max(inner.last_ts);
        inner.last_ts = ts_ms;
        let log = inner.logs.entry(task_id.to_string()).or_default();
        let seq = log.len() as u64 + 1;
        let event = Event {
            seq,
            event_type: event_type.to_string(),
            task_id: task_id.to_string(),
            ts_ms,
            payload,
        };
        log.push(event.clone());
        if let Some(dir) = &self.log_dir {
            append_line(dir, &event)?;
        }
        inner.subscribers.retain(|sub| {
            if event.event_type.starts_with(&sub.prefix) {
                sub.tx.send(event.clone()).is_ok()
            } else {
                true
            }
        });
        Ok(seq)
    }

    /// Subscribes to every future event whose type starts with `prefix`.
    pub fn subscribe(&self, prefix: &str) -> Subscription {
        let (tx, rx) = channel();
        self.inner
            .lock()
            .expect("event bus poisoned")
            .subscribers
            .push(Subscriber {
                prefix: prefix.to_string(),
                tx,
            });
        Subscription { rx }
    }

    /// Snapshot of one task's log in emission order.
    pub fn task_log(&self, task_id: &str) -> Vec<Event> {
        self.inner
            .lock()
            .expect("event bus poisoned")
            .logs
            .get(task_id)
            .cloned()
            .unwrap_or_default()
    }

    /// Event types for one task, in order. Convenient for grammar checks.
    pub fn task_event_types(&self, task_id: &str) -> Vec<String> {
        self.task_log(task_id)
            .into_iter()
            .map(|e| e.event_type)
            .collect()
    }
}

impl Default for EventBus {
    fn default() -> Self {
        EventBus::new()
    }
}

fn append_line(dir: &Path, event: &Event) -> Result<(), EventError> {
    let task_dir = dir.join(&event.task_id);
    fs::create_dir_all(&task_dir)?;
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(task_dir.join("events.jsonl"))?;
    let line = serde_json::to_string(event).expect("event serializes");
    writeln!(file, "{line}")?;
    Ok(())
}

/// Blocking handle over a prefix subscription.
pub struct Subscription {
    rx: Receiver<Event>,
}

impl Subscription {
    pub fn try_next(&self) -> Option<Event> {
        self.rx.try_recv().ok()
    }

    pub fn drain(&self) -> Vec<Event> {
        self.rx.try_iter().collect()
    }
}

/// Reads a JSONL event log back into memory; replaying it reconstructs the
/// task's in-memory log exactly.
pub fn read_log(path: &Path) -> Result<Vec<Event>, EventError> {
    let file = fs::File::open(path)?;
    let mut events = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|source| EventError::Parse {
            line: idx + 1,
            source,
        })?;
        events.push(event);
    }
    Ok(events)
}
