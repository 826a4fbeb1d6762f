use serde::{Deserialize, Serialize};

use crate::config::ConfigDir;
use crate::error::{Error, Result};
use crate::graph::AiBasis;
use crate::text::{count_token_runs, term_tokens};

use super::RegistryMetadata;

/// Term lists for deciding whether a library is AI-related.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiLexicon {
    pub strong_terms: Vec<String>,
    pub weak_terms: Vec<String>,
    pub classifier_markers: Vec<String>,
    pub strong_weight: f64,
    pub weak_weight: f64,
    pub threshold: f64,
}

impl AiLexicon {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        let lex: AiLexicon = cfg.toml("ai_lexicon.toml")?;
        lex.check().map_err(|message| Error::Config {
            name: "ai_lexicon.toml".into(),
            message,
        })?;
        Ok(lex)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let norm = |v: &[String]| v.iter().map(|t| term_tokens(t).join(" ")).collect::<Vec<_>>();
        let strong = norm(&self.strong_terms);
        if let Some(t) = norm(&self.weak_terms).iter().find(|t| strong.contains(t)) {
            return Err(format!("term {t:?} is both strong and weak"));
        }
        if self.classifier_markers.iter().any(|m| m.trim().is_empty()) {
            return Err("empty classifier marker".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AiClassification {
    pub ai_related: bool,
    pub score: f64,
    pub basis: AiBasis,
}

/// Classifier tags decide outright; otherwise term hits in the summary and
/// homepage text are weighted. Each distinct term counts once.
pub fn classify_ai_related(meta: &RegistryMetadata, lexicon: &AiLexicon, homepage_text: Option<&str>) -> AiClassification {
    let tagged = meta
        .classifiers
        .iter()
        .any(|c| lexicon.classifier_markers.iter().any(|m| c.contains(m.as_str())));
    if tagged {
        return AiClassification { ai_related: true, score: 1.0, basis: AiBasis::Tag };
    }
    let mut text = term_tokens(&meta.summary);
    if let Some(h) = homepage_text {
        // A separator token keeps terms from matching across the seam.
        text.push(String::new());
        text.extend(term_tokens(h));
    }
    let hits = |terms: &[String]| {
        let mut seen: Vec<Vec<String>> = Vec::new();
        for t in terms {
            let needle = term_tokens(t);
            if !seen.contains(&needle) && count_token_runs(&text, &needle) > 0 {
                seen.push(needle);
            }
        }
        seen.len() as f64
    };
    let raw = lexicon.strong_weight * hits(&lexicon.strong_terms) + lexicon.weak_weight * hits(&lexicon.weak_terms);
    let score = raw.clamp(0.0, 1.0);
    let ai_related = score >= lexicon.threshold;
    AiClassification {
        ai_related,
        score,
        basis: if ai_related { AiBasis::Heuristic } else { AiBasis::None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> AiLexicon {
        AiLexicon::load(&ConfigDir::bundled()).unwrap()
    }

    fn meta(summary: &str, classifiers: &[&str]) -> RegistryMetadata {
        RegistryMetadata {
            distribution_name: "x".into(),
            summary: summary.into(),
            classifiers: classifiers.iter().map(|s| s.to_string()).collect(),
            version: "1".into(),
            ..Default::default()
        }
    }

    #[test]
    fn tag_basis() {
        let m = meta("HTTP client", &["Topic :: Scientific/Engineering :: Artificial Intelligence"]);
        let c = classify_ai_related(&m, &lex(), None);
        assert_eq!((c.ai_related, c.score, c.basis), (true, 1.0, AiBasis::Tag));
    }

    #[test]
    fn heuristic_strong_hit() {
        let c = classify_ai_related(&meta("a deep learning framework for graphs", &[]), &lex(), None);
        assert!(c.ai_related);
        assert!((c.score - 0.6).abs() < 1e-12);
        assert_eq!(c.basis, AiBasis::Heuristic);
    }

    #[test]
    fn no_hits() {
        let c = classify_ai_related(&meta("HTTP client for humans", &[]), &lex(), None);
        assert_eq!((c.ai_related, c.score, c.basis), (false, 0.0, AiBasis::None));
    }

    #[test]
    fn weak_terms_need_two() {
        let l = lex();
        let one = classify_ai_related(&meta("fast tensor ops", &[]), &l, None);
        assert!(!one.ai_related);
        assert_eq!(one.basis, AiBasis::None);
        let two = classify_ai_related(&meta("fast tensor ops", &[]), &l, Some("GPU kernels"));
        assert!(two.ai_related);
        assert!((two.score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let mut l = lex();
        l.weak_terms.push("Deep Learning".into());
        assert!(l.check().is_err());
    }
}
