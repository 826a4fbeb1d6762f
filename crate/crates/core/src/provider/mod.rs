//! Text-labeling providers with majority voting.
//!
//! Three backends share one trait: an offline rule-based [`HeuristicBackend`],
//! and a chat-completion [`ChatBackend`] that runs live or from the replay
//! store depending on its [`HttpClient`](crate::http::HttpClient) mode.

mod chat;
mod heuristic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use chat::ChatBackend;
pub use heuristic::{HeuristicBackend, HeuristicLexicon, Polarity};

use crate::config::ConfigDir;
use crate::error::Result;
use crate::http::HttpError;

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("vote count must be odd and at least 1, got {0}")]
    InvalidVotes(usize),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("answer {answer:?} is not one of the allowed options")]
    OffOptions { answer: String },
    #[error("backend response malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("fusion needs at least 2 systems, got {0}")]
    TooFewSystems(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    PhraseLabel,
    Definition,
    Sentiment,
    QualityMap,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::PhraseLabel, TaskKind::Definition, TaskKind::Sentiment, TaskKind::QualityMap];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::PhraseLabel => "phrase_label",
            TaskKind::Definition => "definition",
            TaskKind::Sentiment => "sentiment",
            TaskKind::QualityMap => "quality_map",
        }
    }

    /// Definition answers are free text; the rest pick from options.
    pub fn is_classification(self) -> bool {
        self != TaskKind::Definition
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const MODEL: &str = "Model";
pub const FEATURE: &str = "Feature";
pub const NEITHER: &str = "Neither";
pub const POSITIVE: &str = "positive";
pub const NEGATIVE: &str = "negative";
pub const NEUTRAL: &str = "neutral";
/// Extra quality-map option for opinions about no particular attribute.
pub const NO_ATTRIBUTE: &str = "none";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelTask {
    pub kind: TaskKind,
    pub prompt_context: String,
    pub candidate: String,
    pub options: Vec<String>,
}

impl LabelTask {
    pub fn phrase_label(context: &str, phrase: &str) -> Self {
        Self::new(TaskKind::PhraseLabel, context, phrase, &[FEATURE, MODEL, NEITHER])
    }

    pub fn definition(context: &str, name: &str) -> Self {
        Self::new(TaskKind::Definition, context, name, &[])
    }

    pub fn sentiment(context: &str, sentence: &str) -> Self {
        Self::new(TaskKind::Sentiment, context, sentence, &[NEGATIVE, NEUTRAL, POSITIVE])
    }

    pub fn quality_map(attribute_glossary: &str, sentence: &str, attributes: &[String]) -> Self {
        let mut options: Vec<&str> = attributes.iter().map(String::as_str).collect();
        options.push(NO_ATTRIBUTE);
        Self::new(TaskKind::QualityMap, attribute_glossary, sentence, &options)
    }

    fn new(kind: TaskKind, context: &str, candidate: &str, options: &[&str]) -> Self {
        LabelTask {
            kind,
            prompt_context: context.to_string(),
            candidate: candidate.to_string(),
            options: options.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        if self.candidate.trim().is_empty() {
            return Err(ProviderError::InvalidTask("empty candidate".into()));
        }
        if self.kind.is_classification() && self.options.is_empty() {
            return Err(ProviderError::InvalidTask(format!("{} task without options", self.kind)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResult {
    pub answer: String,
    pub confidence: f64,
    pub votes: Vec<String>,
}

/// A labeling backend. `vote` is the 0-based vote index, so deterministic
/// backends can vary requests per vote.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn answer(&self, task: &LabelTask, vote: usize) -> Result<String, ProviderError>;
}

/// Asks `backend` `votes` times and returns the most frequent answer. Ties
/// go to the lexicographically smallest answer. Each failed vote is retried
/// once.
pub fn label(task: &LabelTask, backend: &dyn Backend, votes: usize) -> Result<LabelResult, ProviderError> {
    if votes == 0 || votes % 2 == 0 {
        return Err(ProviderError::InvalidVotes(votes));
    }
    task.check()?;
    let mut raw = Vec::with_capacity(votes);
    for v in 0..votes {
        let ask = || -> Result<String, ProviderError> {
            let a = backend.answer(task, v)?;
            if task.kind.is_classification() && !task.options.contains(&a) {
                return Err(ProviderError::OffOptions { answer: a });
            }
            Ok(a)
        };
        let a = match ask() {
            Ok(a) => a,
            Err(first) => {
                tracing::debug!(backend = backend.name(), vote = v, error = %first, "retrying vote");
                ask()?
            }
        };
        raw.push(a);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &raw {
        *counts.entry(a.as_str()).or_default() += 1;
    }
    // BTreeMap iterates in ascending order, so the first maximum wins ties.
    let (answer, n) = counts
        .iter()
        .fold(("", 0), |best, (a, n)| if *n > best.1 { (*a, *n) } else { best });
    Ok(LabelResult {
        answer: answer.to_string(),
        confidence: n as f64 / votes as f64,
        votes: raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusePolicy {
    Union,
    Intersection,
    Majority,
}

/// Combines answer sets from several systems.
pub fn fuse<T: Ord + Clone>(systems: &[BTreeSet<T>], policy: FusePolicy) -> Result<BTreeSet<T>, ProviderError> {
    if systems.len() < 2 {
        return Err(ProviderError::TooFewSystems(systems.len()));
    }
    Ok(match policy {
        FusePolicy::Union => systems.iter().flatten().cloned().collect(),
        FusePolicy::Intersection => systems[0]
            .iter()
            .filter(|x| systems[1..].iter().all(|s| s.contains(x)))
            .cloned()
            .collect(),
        FusePolicy::Majority => {
            let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
            for x in systems.iter().flatten() {
                *counts.entry(x).or_default() += 1;
            }
            counts
                .into_iter()
                .filter(|(_, n)| 2 * n > systems.len())
                .map(|(x, _)| x.clone())
                .collect()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Heuristic,
    /// Chat backend answering only from the replay store.
    Replay,
    /// Chat backend talking to the endpoint, recording responses.
    Live,
}

/// `provider.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub votes: usize,
    pub seed: u64,
    pub timeout_secs: u64,
}

/// Prompt templates, one per task kind. Lines starting with `#` are
/// comments.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    templates: BTreeMap<TaskKind, String>,
}

impl PromptSet {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        let mut templates = BTreeMap::new();
        for kind in TaskKind::ALL {
            let text = cfg.text(&format!("prompts/{}.v1.txt", kind.as_str()))?;
            let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
            templates.insert(kind, body.join("\n").trim().to_string());
        }
        Ok(PromptSet { templates })
    }

    pub fn render(&self, task: &LabelTask) -> String {
        self.templates
            .get(&task.kind)
            .map(String::as_str)
            .unwrap_or("{candidate}")
            .replace("{options}", &task.options.join(", "))
            .replace("{context}", task.prompt_context.trim())
            .replace("{candidate}", task.candidate.trim())
    }
}
