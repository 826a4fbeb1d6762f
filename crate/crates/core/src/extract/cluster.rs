use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ConfigDir;
use crate::error::{Error, Result};
use crate::graph::BaseModel;
use crate::text::{contains_token_run, similarity, term_tokens};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseEntry {
    pub name: String,
    pub definition: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl BaseEntry {
    pub fn to_base_model(&self) -> BaseModel {
        BaseModel::new(&self.name, &self.definition).with_aliases(self.aliases.iter().cloned())
    }
}

/// Canonical base models with aliases, plus the catch-all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLexicon {
    pub fallback: String,
    pub fuzzy_threshold: f64,
    #[serde(rename = "base")]
    pub bases: Vec<BaseEntry>,
}

impl BaseLexicon {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        let lex: BaseLexicon = cfg.toml("base_lexicon.toml")?;
        let err = |message: String| Error::Config { name: "base_lexicon.toml".into(), message };
        if !lex.bases.iter().any(|b| b.name == lex.fallback) {
            return Err(err(format!("fallback base {:?} missing", lex.fallback)));
        }
        if !(0.0..=1.0).contains(&lex.fuzzy_threshold) {
            return Err(err("fuzzy_threshold outside [0, 1]".into()));
        }
        Ok(lex)
    }

    pub fn entry(&self, name: &str) -> Option<&BaseEntry> {
        self.bases.iter().find(|b| b.name == name)
    }

    /// Base name for one variation phrase.
    pub fn assign(&self, phrase: &str) -> &str {
        assign_with(self, phrase, self.fuzzy_threshold)
    }
}

/// Prefers the candidate with the longer base name, then the
/// lexicographically smaller one.
fn better(a: &str, b: &str) -> bool {
    a.len() > b.len() || (a.len() == b.len() && a < b)
}

pub(crate) fn assign_with<'a>(lex: &'a BaseLexicon, phrase: &str, threshold: f64) -> &'a str {
    let toks = term_tokens(phrase);
    let names = |b: &'a BaseEntry| std::iter::once(&b.name).chain(b.aliases.iter());

    // Stage 1: longest name or alias occurring as a token run.
    let mut best: Option<(usize, &str)> = None;
    for b in lex.bases.iter().filter(|b| b.name != lex.fallback) {
        for n in names(b) {
            let needle = term_tokens(n);
            if needle.is_empty() || !contains_token_run(&toks, &needle) {
                continue;
            }
            let len = needle.join(" ").len();
            let wins = match best {
                None => true,
                Some((l, cur)) => len > l || (len == l && better(&b.name, cur)),
            };
            if wins {
                best = Some((len, &b.name));
            }
        }
    }
    if let Some((_, name)) = best {
        return name;
    }

    // Stage 2: fuzzy similarity against every name and alias.
    let joined = toks.join(" ");
    let mut best: Option<(f64, &str)> = None;
    for b in lex.bases.iter().filter(|b| b.name != lex.fallback) {
        for n in names(b) {
            let s = similarity(&joined, &term_tokens(n).join(" "));
            if s < threshold {
                continue;
            }
            let wins = match best {
                None => true,
                Some((bs, cur)) => s > bs || (s == bs && better(&b.name, cur)),
            };
            if wins {
                best = Some((s, &b.name));
            }
        }
    }
    best.map(|(_, n)| n).unwrap_or(&lex.fallback)
}

/// Assigns every phrase to a base name.
pub fn cluster_variations<'a>(phrases: impl IntoIterator<Item = &'a str>, lexicon: &BaseLexicon) -> BTreeMap<String, String> {
    phrases
        .into_iter()
        .map(|p| (p.to_string(), lexicon.assign(p).to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> BaseLexicon {
        BaseLexicon::load(&ConfigDir::bundled()).unwrap()
    }

    #[test]
    fn examples() {
        let l = lex();
        assert_eq!(l.assign("ridge regression"), "Regression");
        assert_eq!(l.assign("vision transformer"), "Transformer");
        assert_eq!(l.assign("foonet-xl"), "Miscellaneous");
        assert_eq!(l.assign("deep convolutional neural network"), "CNN");
        assert_eq!(l.assign("random forest regressor"), "Decision Tree");
    }

    #[test]
    fn fuzzy_stage() {
        let l = lex();
        assert_eq!(l.assign("autoencodr"), "Autoencoder");
        assert_eq!(assign_with(&l, "autoencodr", 0.99), "Miscellaneous");
    }

    #[test]
    fn total_and_idempotent() {
        let l = lex();
        let m = cluster_variations(["ridge regression", "foonet-xl", "xgboost classifier"], &l);
        assert_eq!(m.len(), 3);
        assert_eq!(m["xgboost classifier"], "Boosting");
        assert_eq!(cluster_variations(m.keys().map(String::as_str), &l), m);
    }

    #[test]
    fn missing_fallback_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base_lexicon.toml"), "fallback = \"Other\"\nfuzzy_threshold = 0.8\n[[base]]\nname = \"CNN\"\ndefinition = \"d\"\n").unwrap();
        assert!(BaseLexicon::load(&ConfigDir::at(dir.path())).is_err());
    }
}
