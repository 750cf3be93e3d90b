//! Centralized append-only message log for one topology run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipients {
    Broadcast,
    To(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: String,
    pub recipients: Recipients,
    pub round: u32,
    pub content: String,
}

/// Append-only log of every message exchanged during a run, queryable by
/// round and recipient. Round numbers never decrease.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MsgHub {
    messages: Vec<Message>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HubError {
    #[error("round {attempted} precedes the hub's latest round {latest}")]
    RoundRegression { attempted: u32, latest: u32 },
}

impl MsgHub {
    pub fn new() -> MsgHub {
        MsgHub::default()
    }

    pub fn append(&mut self, message: Message) -> Result<(), HubError> {
        if let Some(latest) = self.messages.iter().map(|m| m.round).max() {
            if message.round < latest {
                return Err(HubError::RoundRegression {
                    attempted: message.round,
                    latest,
                });
            }
        }
        self.messages.push(message);
        Ok(())
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn by_round(&self, round: u32) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.round == round)
    }

    pub fn for_recipient<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Message> {
        self.messages.iter().filter(move |m| match &m.recipients {
            Recipients::Broadcast => true,
            Recipients::To(names) => names.iter().any(|n| n == name),
        })
    }

    /// Last message content sent by `sender` at or below `round`.
    pub fn last_from(&self, sender: &str, round: u32) -> Option<&Message> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.sender == sender && m.round <= round)
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}
