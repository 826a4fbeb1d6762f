//! Offline rule-based backend.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{Backend, LabelTask, ProviderError, TaskKind, FEATURE, MODEL, NEGATIVE, NEITHER, NEUTRAL, NO_ATTRIBUTE, POSITIVE};
use crate::config::ConfigDir;
use crate::error::{Error, Result};
use crate::text::{collapse_whitespace, count_token_runs, normalize_phrase, split_sentences, term_tokens};

#[derive(Deserialize)]
struct RawLexicon {
    phrase_label: RawPhrase,
    sentiment: RawSentiment,
    quality_map: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
struct RawPhrase {
    model_heads: Vec<String>,
    model_names: Vec<String>,
    generic_modifiers: Vec<String>,
    feature_cues: Vec<String>,
}

#[derive(Deserialize)]
struct RawSentiment {
    positive: Vec<String>,
    negative: Vec<String>,
    negations: Vec<String>,
    negation_window: usize,
}

/// Rule tables for the heuristic backend, normalized to term tokens.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeuristicLexicon {
    pub model_heads: Vec<String>,
    pub model_names: Vec<String>,
    pub generic_modifiers: Vec<String>,
    pub feature_cues: Vec<String>,
    pub positive: Vec<Vec<String>>,
    pub negative: Vec<Vec<String>>,
    pub negations: Vec<String>,
    pub negation_window: usize,
    /// Attribute name → keyword token runs.
    pub quality_map: BTreeMap<String, Vec<Vec<String>>>,
}

fn words(list: Vec<String>) -> Vec<String> {
    list.iter().map(|w| normalize_phrase(w)).filter(|w| !w.is_empty()).collect()
}

fn runs(list: Vec<String>) -> Vec<Vec<String>> {
    list.iter().map(|w| term_tokens(w)).filter(|w| !w.is_empty()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl HeuristicLexicon {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        let raw: RawLexicon = cfg.toml("heuristic_lexicon.toml")?;
        if raw.quality_map.is_empty() {
            return Err(Error::Config {
                name: "heuristic_lexicon.toml".into(),
                message: "empty quality_map".into(),
            });
        }
        Ok(HeuristicLexicon {
            model_heads: words(raw.phrase_label.model_heads),
            model_names: words(raw.phrase_label.model_names),
            generic_modifiers: words(raw.phrase_label.generic_modifiers),
            feature_cues: words(raw.phrase_label.feature_cues),
            positive: runs(raw.sentiment.positive),
            negative: runs(raw.sentiment.negative),
            negations: words(raw.sentiment.negations),
            negation_window: raw.sentiment.negation_window,
            quality_map: raw.quality_map.into_iter().map(|(k, v)| (k, runs(v))).collect(),
        })
    }

    /// Model, Feature or Neither for a noun phrase.
    pub fn phrase_label(&self, phrase: &str) -> &'static str {
        let toks = term_tokens(phrase);
        let Some(last) = toks.last() else { return NEITHER };
        let is_model = if toks.len() == 1 {
            self.model_names.contains(last)
        } else {
            self.model_heads.contains(last)
                && !toks[..toks.len() - 1].iter().all(|t| self.generic_modifiers.contains(t))
        };
        if is_model {
            MODEL
        } else if toks.iter().any(|t| self.feature_cues.contains(t)) {
            FEATURE
        } else {
            NEITHER
        }
    }

    /// Sum of cue polarities; a negation within the window before a cue
    /// flips it.
    pub fn polarity_score(&self, sentence: &str) -> i32 {
        let toks = term_tokens(sentence);
        let mut score = 0;
        for (cues, sign) in [(&self.positive, 1), (&self.negative, -1)] {
            for cue in cues {
                for start in 0..toks.len() {
                    if !toks[start..].starts_with(cue) {
                        continue;
                    }
                    let from = start.saturating_sub(self.negation_window);
                    let negated = toks[from..start].iter().any(|t| self.negations.contains(t));
                    score += if negated { -sign } else { sign };
                }
            }
        }
        score
    }

    pub fn polarity(&self, sentence: &str) -> Polarity {
        match self.polarity_score(sentence) {
            s if s > 0 => Polarity::Positive,
            s if s < 0 => Polarity::Negative,
            _ => Polarity::Neutral,
        }
    }

    /// Attribute with the most keyword hits; ties go to the earliest entry
    /// in `attributes`. `None` without any hit.
    pub fn quality_attribute<'a>(&self, sentence: &str, attributes: &'a [String]) -> Option<&'a str> {
        let toks = term_tokens(sentence);
        let mut best: Option<(&str, usize)> = None;
        for a in attributes {
            let hits: usize = self
                .quality_map
                .get(a)
                .map(|kws| kws.iter().map(|k| count_token_runs(&toks, k)).sum())
                .unwrap_or(0);
            if hits > 0 && best.is_none_or(|(_, b)| hits > b) {
                best = Some((a, hits));
            }
        }
        best.map(|(a, _)| a)
    }
}

/// The sentence of `context` that mentions `candidate`, or the first one.
pub fn defining_sentence(context: &str, candidate: &str) -> String {
    let needle = term_tokens(candidate);
    let sentences: Vec<&str> = split_sentences(context).into_iter().map(|(s, e)| &context[s..e]).collect();
    let pick = sentences
        .iter()
        .find(|s| count_token_runs(&term_tokens(s), &needle) > 0)
        .or(sentences.first())
        .copied()
        .unwrap_or("");
    collapse_whitespace(pick)
}

#[derive(Debug, Clone)]
pub struct HeuristicBackend {
    lexicon: HeuristicLexicon,
}

impl HeuristicBackend {
    pub fn new(lexicon: HeuristicLexicon) -> Self {
        HeuristicBackend { lexicon }
    }

    pub fn lexicon(&self) -> &HeuristicLexicon {
        &self.lexicon
    }
}

impl Backend for HeuristicBackend {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn answer(&self, task: &LabelTask, _vote: usize) -> Result<String, ProviderError> {
        let lx = &self.lexicon;
        Ok(match task.kind {
            TaskKind::PhraseLabel => lx.phrase_label(&task.candidate).to_string(),
            TaskKind::Definition => defining_sentence(&task.prompt_context, &task.candidate),
            TaskKind::Sentiment => match lx.polarity(&task.candidate) {
                Polarity::Positive => POSITIVE,
                Polarity::Negative => NEGATIVE,
                Polarity::Neutral => NEUTRAL,
            }
            .to_string(),
            TaskKind::QualityMap => lx
                .quality_attribute(&task.candidate, &task.options)
                .unwrap_or(NO_ATTRIBUTE)
                .to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::label;

    fn lx() -> HeuristicLexicon {
        HeuristicLexicon::load(&ConfigDir::bundled()).unwrap()
    }

    #[test]
    fn phrase_labels() {
        let l = lx();
        assert_eq!(l.phrase_label("convolutional neural network"), MODEL);
        assert_eq!(l.phrase_label("Ridge Regression"), MODEL);
        assert_eq!(l.phrase_label("XGBoost"), MODEL);
        assert_eq!(l.phrase_label("machine learning model"), NEITHER);
        assert_eq!(l.phrase_label("l2 penalty"), FEATURE);
        assert_eq!(l.phrase_label("heavy-tailed noise"), FEATURE);
        assert_eq!(l.phrase_label("installation guide"), NEITHER);
    }

    #[test]
    fn heuristic_label_is_unanimous() {
        let b = HeuristicBackend::new(lx());
        let r = label(&LabelTask::phrase_label("", "convolutional neural network"), &b, 3).unwrap();
        assert_eq!(r.answer, MODEL);
        assert_eq!(r.confidence, 1.0);
    }

    #[test]
    fn sentiment_cues_and_negation() {
        let l = lx();
        assert_eq!(l.polarity("Training was painfully slow on CPU."), Polarity::Negative);
        assert_eq!(l.polarity("The API is intuitive and the docs are great."), Polarity::Positive);
        assert_eq!(l.polarity("It works."), Polarity::Neutral);
        assert_eq!(l.polarity("It is not slow at all."), Polarity::Positive);
    }

    #[test]
    fn quality_mapping() {
        let l = lx();
        let attrs: Vec<String> = crate::quality::AttributeSet::load(&ConfigDir::bundled()).unwrap().names();
        assert_eq!(l.quality_attribute("Training was painfully slow on CPU.", &attrs), Some("performance efficiency"));
        assert_eq!(l.quality_attribute("The API is intuitive and the docs are great.", &attrs), Some("interaction capability"));
        assert_eq!(l.quality_attribute("It works.", &attrs), None);
    }

    #[test]
    fn definition_sentence() {
        let ctx = "Linear models are common. Ridge regression adds an L2 penalty to least squares. Done.";
        assert_eq!(defining_sentence(ctx, "ridge regression"), "Ridge regression adds an L2 penalty to least squares.");
        assert_eq!(defining_sentence(ctx, "lasso"), "Linear models are common.");
    }
}
