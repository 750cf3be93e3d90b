//! Trilemma escape hatches: the bounded-improvement clamp and the safety
//! firewall around frozen configuration domains.
//!
//! The firewall runs outside the learning loop: no learning-origin write can
//! touch the security policy or the judge profiles. Escalation bounds (5
//! redesigns, 3x budget) live in the forge redesign policy.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::judge::profile::JudgeProfile;
use crate::orchestrator::policy::SecurityPolicy;

/// Per-iteration cap on Q-value movement.
pub const Q_DELTA_CAP: f64 = 0.15;

/// Clamps a raw Q delta to [-0.15, +0.15].
pub fn clamp_q_delta(raw: f64) -> f64 {
    raw.clamp(-Q_DELTA_CAP, Q_DELTA_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigDomain {
    SafetyPolicy,
    JudgeProfiles,
    QTable,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteOrigin {
    /// The write comes from the self-improvement loop (RL, forge, judges).
    Learning,
    /// The write carries explicit human approval.
    HumanApproved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WriteRequest {
    pub domain: ConfigDomain,
    pub origin: WriteOrigin,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FirewallDecision {
    Allow,
    Deny { reason: String },
}

impl FirewallDecision {
    pub fn is_allowed(&self) -> bool {
        matches!(self, FirewallDecision::Allow)
    }
}

/// Denies learning-origin writes to the frozen domains (safety policy and
/// judge profiles); everything else is allowed.
pub fn check_firewall(request: &WriteRequest) -> FirewallDecision {
    match (request.domain, request.origin) {
        (ConfigDomain::SafetyPolicy | ConfigDomain::JudgeProfiles, WriteOrigin::Learning) => {
            FirewallDecision::Deny {
                reason: format!(
                    "{:?} is frozen against learning-origin writes ({})",
                    request.domain, request.description
                ),
            }
        }
        _ => FirewallDecision::Allow,
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("firewall denied write: {reason}")]
pub struct FirewallDenied {
    pub reason: String,
}

/// Holds the frozen configuration domains behind the firewall. All writes
/// must flow through this store, which consults [`check_firewall`].
#[derive(Debug, Clone)]
pub struct GuardedStore {
    safety_policy: SecurityPolicy,
    judge_profiles: BTreeMap<String, JudgeProfile>,
}

impl GuardedStore {
    pub fn new(safety_policy: SecurityPolicy, profiles: Vec<JudgeProfile>) -> GuardedStore {
        GuardedStore {
            safety_policy,
            judge_profiles: profiles.into_iter().map(|p| (p.name.clone(), p)).collect(),
        }
    }

    pub fn with_builtin_profiles(safety_policy: SecurityPolicy) -> GuardedStore {
        GuardedStore::new(
            safety_policy,
            vec![
                JudgeProfile::default_profile(),
                JudgeProfile::code(),
                JudgeProfile::research(),
                JudgeProfile::creative(),
            ],
        )
    }

    pub fn safety_policy(&self) -> &SecurityPolicy {
        &self.safety_policy
    }

    pub fn profile(&self, name: &str) -> Option<&JudgeProfile> {
        self.judge_profiles.get(name)
    }

    pub fn write_safety_policy(
        &mut self,
        origin: WriteOrigin,
        description: &str,
        policy: SecurityPolicy,
    ) -> Result<(), FirewallDenied> {
        match check_firewall(&WriteRequest {
            domain: ConfigDomain::SafetyPolicy,
            origin,
            description: description.to_string(),
        }) {
            FirewallDecision::Allow => {
                self.safety_policy = policy;
                Ok(())
            }
            FirewallDecision::Deny { reason } => Err(FirewallDenied { reason }),
        }
    }

    pub fn write_profile(
        &mut self,
        origin: WriteOrigin,
        description: &str,
        profile: JudgeProfile,
    ) -> Result<(), FirewallDenied> {
        match check_firewall(&WriteRequest {
            domain: ConfigDomain::JudgeProfiles,
            origin,
            description: description.to_string(),
        }) {
            FirewallDecision::Allow => {
                self.judge_profiles.insert(profile.name.clone(), profile);
                Ok(())
            }
            FirewallDecision::Deny { reason } => Err(FirewallDenied { reason }),
        }
    }

    /// Hash of the guarded state; unchanged hash means unchanged bytes.
    pub fn state_hash(&self) -> u64 {
        let serialized = serde_json::to_string(&(&self.safety_policy, &self.judge_profiles))
            .expect("guarded state serializes");
        let mut hasher = DefaultHasher::new();
        serialized.hash(&mut hasher);
        hasher.finish()
    }
}
