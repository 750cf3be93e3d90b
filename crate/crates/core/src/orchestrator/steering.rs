//! Mid-flight steering: pause, resume, redirect, cancel. Commands arrive
//! in-process through [`SteeringController::push`] or cross-process through
//! a JSONL command file the running pipeline polls at step boundaries.

use std::collections::VecDeque;
use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SteeringCommand {
    Pause,
    Resume,
    Redirect { prompt: String },
    Cancel,
}

impl SteeringCommand {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            SteeringCommand::Redirect { prompt } if prompt.trim().is_empty() => {
                Err("redirect requires a non-empty prompt".to_string())
            }
            _ => Ok(()),
        }
    }
}

/// Per-task steering queue, optionally backed by a command file so separate
/// processes can steer a running task.
pub struct SteeringController {
    queue: Mutex<VecDeque<SteeringCommand>>,
    file: Option<PathBuf>,
    consumed_lines: Mutex<usize>,
}

impl SteeringController {
    pub fn new() -> SteeringController {
        SteeringController {
            queue: Mutex::new(VecDeque::new()),
            file: None,
            consumed_lines: Mutex::new(0),
        }
    }

    pub fn with_file(path: impl Into<PathBuf>) -> SteeringController {
        SteeringController {
            queue: Mutex::new(VecDeque::new()),
            file: Some(path.into()),
            consumed_lines: Mutex::new(0),
        }
    }

    pub fn push(&self, command: SteeringCommand) {
        self.queue
            .lock()
            .expect("steering queue poisoned")
            .push_back(command);
    }

    /// Next pending command: in-memory first, then new lines from the
    /// command file.
    pub fn poll(&self) -> Option<SteeringCommand> {
        if let Some(command) = self
            .queue
            .lock()
            .expect("steering queue poisoned")
            .pop_front()
        {
            return Some(command);
        }
        self.poll_file()
    }

    fn poll_file(&self) -> Option<SteeringCommand> {
        let path = self.file.as_ref()?;
        let text = fs::read_to_string(path).ok()?;
        let mut consumed = self.consumed_lines.lock().expect("cursor poisoned");
        let mut lines = text.lines().skip(*consumed);
        loop {
            let line = lines.next()?;
            *consumed += 1;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<SteeringCommand>(line) {
                Ok(command) => return Some(command),
                Err(_) => continue, // malformed lines are skipped
            }
        }
    }

    /// Appends a command to a task's steering file; the CLI-facing writer.
    pub fn append_to_file(
        path: &std::path::Path,
        command: &SteeringCommand,
    ) -> std::io::Result<()> {
        use std::io::Write;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        writeln!(
            file,
            "{}",
            serde_json::to_string(command).expect("command serializes")
        )
    }
}

impl Default for SteeringController {
    fn default() -> Self {
        SteeringController::new()
    }
}
