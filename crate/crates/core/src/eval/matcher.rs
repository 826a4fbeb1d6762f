use std::collections::BTreeMap;

use crate::text::{similarity, term_tokens};

/// Decides whether two model or library names refer to the same thing.
///
/// Names are lowercased, split on punctuation and singularized, then mapped
/// through the alias table. Two names match when their canonical forms are
/// equal (also with spaces removed) or at least `threshold` similar.
#[derive(Debug, Clone, PartialEq)]
pub struct NameMatcher {
    aliases: BTreeMap<String, String>,
    pub threshold: f64,
}

impl Default for NameMatcher {
    fn default() -> Self {
        NameMatcher {
            aliases: BTreeMap::new(),
            threshold: 0.9,
        }
    }
}

pub fn normalize_name(name: &str) -> String {
    term_tokens(name).join(" ")
}

impl NameMatcher {
    pub fn new(aliases: &[(String, String)], threshold: f64) -> Self {
        NameMatcher {
            aliases: aliases
                .iter()
                .map(|(a, c)| (normalize_name(a), normalize_name(c)))
                .collect(),
            threshold,
        }
    }

    pub fn canonical(&self, name: &str) -> String {
        let n = normalize_name(name);
        self.aliases.get(&n).cloned().unwrap_or(n)
    }

    pub fn matches(&self, a: &str, b: &str) -> bool {
        let (ca, cb) = (self.canonical(a), self.canonical(b));
        if ca.is_empty() || cb.is_empty() {
            return false;
        }
        ca == cb || ca.replace(' ', "") == cb.replace(' ', "") || similarity(&ca, &cb) >= self.threshold
    }

    pub fn any_match(&self, name: &str, pool: &[String]) -> bool {
        pool.iter().any(|p| self.matches(name, p))
    }

    /// Items deduplicated under the matcher, keeping the first of each group.
    pub fn dedup(&self, items: &[String]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for i in items {
            if !self.canonical(i).is_empty() && !out.iter().any(|o| self.matches(o, i)) {
                out.push(i.clone());
            }
        }
        out
    }
}
