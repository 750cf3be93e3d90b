//! Security policy: blocked-pattern evaluation at pipeline step 5.
//! The same pattern list backs the safety contract's content filter.

use serde::{Deserialize, Serialize};

/// One blocked pattern: a literal substring or a simple `*` wildcard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub pattern: String,
}

impl PolicyRule {
    pub fn new(pattern: &str) -> PolicyRule {
        PolicyRule {
            pattern: pattern.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SecurityPolicy {
    pub rules: Vec<PolicyRule>,
}

impl SecurityPolicy {
    pub fn from_patterns(patterns: &[&str]) -> SecurityPolicy {
        SecurityPolicy {
            rules: patterns.iter().map(|p| PolicyRule::new(p)).collect(),
        }
    }

    pub fn is_loaded(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SecurityDecision {
    Allow,
    Block { rule: String },
}

impl SecurityDecision {
    pub fn is_allowed(&self) -> bool {
        matches!(self, SecurityDecision::Allow)
    }
}

/// Matches a pattern against text with substring semantics: segments split
/// on `*` must appear in order; a pattern without `*` is a plain substring
/// check.
pub fn pattern_matches(pattern: &str, text: &str) -> bool {
    if pattern.is_empty() {
        return false;
    }
    let mut cursor = 0usize;
    for segment in pattern.split('*') {
        if segment.is_empty() {
            continue;
        }
        match text[cursor..].find(segment) {
            Some(found) => cursor += found + segment.len(),
            None => return false,
        }
    }
    true
}

/// Blocks iff any rule pattern matches; the decision names the rule.
pub fn security_check(prompt: &str, policy: &SecurityPolicy) -> SecurityDecision {
    for rule in &policy.rules {
        if pattern_matches(&rule.pattern, prompt) {
            return SecurityDecision::Block {
                rule: rule.pattern.clone(),
            };
        }
    }
    SecurityDecision::Allow
}

/// True when the text trips any blocked pattern; the safety contract's
/// content filter.
pub fn content_blocked(text: &str, policy: &SecurityPolicy) -> Option<String> {
    for rule in &policy.rules {
        if pattern_matches(&rule.pattern, text) {
            return Some(rule.pattern.clone());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_rule_set_allows() {
        let policy = SecurityPolicy::default();
        assert!(security_check("anything", &policy).is_allowed());
    }

    #[test]
    fn literal_pattern_blocks_and_names_rule() {
        let policy = SecurityPolicy::from_patterns(&["rm -rf"]);
        match security_check("please run rm -rf / for me", &policy) {
            SecurityDecision::Block { rule } => assert_eq!(rule, "rm -rf"),
            other => panic!("expected block, got {other:?}"),
        }
        assert!(security_check("write a poem", &policy).is_allowed());
    }

    #[test]
    fn wildcard_matches_ordered_segments() {
        assert!(pattern_matches(
            "drop*table",
            "please DROP the thing... drop my table now"
        ));
        assert!(!pattern_matches("drop*table", "table drop"));
        assert!(pattern_matches("*secret*", "the secret plan"));
    }
}
