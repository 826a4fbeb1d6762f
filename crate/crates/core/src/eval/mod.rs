//! Evaluation: coverage@k, overlap with baseline recommenders,
//! precision/recall/F1 for pipeline experiments and corpus statistics.

mod experiment;
mod matcher;
mod stats;

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use experiment::{run_experiment, score_experiment, ExperimentConfig, ExperimentRow, ExperimentTable, GoldRow, PredictionRow};
pub use matcher::{normalize_name, NameMatcher};
pub use stats::{corpus_stats, CorpusStats, Totals};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub case_id: String,
    pub domain: String,
    pub rationale: String,
    pub gold_models: Vec<String>,
    #[serde(default)]
    pub gold_libraries: Vec<String>,
    #[serde(default)]
    pub source_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub case_id: String,
    pub system: String,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default)]
    pub libraries: Vec<String>,
}

/// Reads one JSON object per non-blank line, reporting `path:line` on error.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(path, &text)
}

pub fn parse_jsonl<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, i + 1, e.to_string())))
        .collect()
}

pub fn load_cases(path: &Path) -> Result<Vec<CaseStudy>> {
    let cases: Vec<CaseStudy> = read_jsonl(path)?;
    for (i, c) in cases.iter().enumerate() {
        if c.rationale.trim().is_empty() || c.gold_models.is_empty() {
            return Err(Error::parse(path, i + 1, format!("case {} needs a rationale and gold models", c.case_id)));
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDetail {
    pub case_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub numerator: Option<u64>,
    pub denominator: Option<u64>,
    pub per_case: Vec<CaseDetail>,
    #[serde(default)]
    pub notices: Vec<String>,
}

impl MetricReport {
    pub fn percent(&self) -> f64 {
        self.value * 100.0
    }

    /// `name  value%  (num/den)`.
    pub fn line(&self) -> String {
        match (self.numerator, self.denominator) {
            (Some(n), Some(d)) => format!("{:<24} {:>7.2}%  ({n}/{d})", self.metric, self.percent()),
            _ => format!("{:<24} {:>7.2}%  (mean of {} cases)", self.metric, self.percent(), self.per_case.len()),
        }
    }
}

/// Hits over cases as a fraction.
pub fn coverage(hits: u64, cases: u64) -> f64 {
    if cases == 0 {
        0.0
    } else {
        hits as f64 / cases as f64
    }
}

/// Which gold list a metric looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Models,
    Libraries,
}

impl CaseStudy {
    pub fn gold(&self, t: Target) -> &[String] {
        match t {
            Target::Models => &self.gold_models,
            Target::Libraries => &self.gold_libraries,
        }
    }
}

/// Fraction of cases where a gold name appears in the first `k`
/// recommendations. Cases without recommendations are misses.
pub fn coverage_at_k(
    system: &BTreeMap<String, Vec<String>>,
    cases: &[CaseStudy],
    target: Target,
    k: usize,
    matcher: &NameMatcher,
) -> Result<MetricReport> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut sorted: Vec<&CaseStudy> = cases.iter().filter(|c| !c.gold(target).is_empty()).collect();
    sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let mut per_case = Vec::new();
    let mut hits = 0u64;
    for c in &sorted {
        let recs = system.get(&c.case_id).map(Vec::as_slice).unwrap_or(&[]);
        let top: Vec<String> = recs.iter().take(k).cloned().collect();
        let hit = c.gold(target).iter().any(|g| matcher.any_match(g, &top));
        hits += hit as u64;
        per_case.push(CaseDetail { case_id: c.case_id.clone(), value: hit as u8 as f64 });
    }
    let n = sorted.len() as u64;
    let mut notices = Vec::new();
    if n < cases.len() as u64 {
        notices.push(format!("{} cases without gold {target:?} excluded", cases.len() as u64 - n));
    }
    Ok(MetricReport {
        metric: format!("coverage@{k}"),
        value: coverage(hits, n),
        numerator: Some(hits),
        denominator: Some(n),
        per_case,
        notices,
    })
}

/// Mean over aligned cases of the share of baseline items that the system
/// also recommends.
pub fn overlap_percent(
    baseline: &BTreeMap<String, Vec<String>>,
    system: &BTreeMap<String, Vec<String>>,
    matcher: &NameMatcher,
) -> Result<MetricReport> {
    let mut per_case = Vec::new();
    let mut notices = Vec::new();
    for (case_id, base) in baseline {
        let Some(sys) = system.get(case_id) else {
            notices.push(format!("case {case_id}: no system output, excluded"));
            continue;
        };
        let base = matcher.dedup(base);
        if base.is_empty() {
            notices.push(format!("case {case_id}: empty baseline, excluded"));
            continue;
        }
        let shared = base.iter().filter(|b| matcher.any_match(b, sys)).count();
        per_case.push(CaseDetail { case_id: case_id.clone(), value: shared as f64 / base.len() as f64 });
    }
    if per_case.is_empty() {
        return Err(Error::InvalidArgument("no aligned cases between baseline and system".into()));
    }
    let value = per_case.iter().map(|c| c.value).sum::<f64>() / per_case.len() as f64;
    Ok(MetricReport {
        metric: "overlap".into(),
        value,
        numerator: None,
        denominator: None,
        per_case,
        notices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when nothing was predicted; precision is then reported as 0.
    pub precision_undefined: bool,
}

/// Harmonic mean of precision and recall (0 when both are 0).
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

impl Prf1 {
    pub fn from_counts(matched_predicted: usize, predicted: usize, matched_gold: usize, gold: usize) -> Self {
        let precision_undefined = predicted == 0;
        let precision = if predicted == 0 { 0.0 } else { matched_predicted as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { matched_gold as f64 / gold as f64 };
        Prf1 { precision, recall, f1: f1_score(precision, recall), precision_undefined }
    }

    /// Values rounded to 4 decimals for reports.
    pub fn rounded(&self) -> Self {
        Prf1 {
            precision: round4(self.precision),
            recall: round4(self.recall),
            f1: round4(self.f1),
            precision_undefined: self.precision_undefined,
        }
    }
}

/// Counts for one predicted/gold pair: (predicted items matching gold,
/// predicted size, gold items matched, gold size), after deduplication.
pub fn match_counts(predicted: &[String], gold: &[String], matcher: &NameMatcher) -> (usize, usize, usize, usize) {
    let p = matcher.dedup(predicted);
    let g = matcher.dedup(gold);
    let tp_p = p.iter().filter(|x| matcher.any_match(x, &g)).count();
    let tp_g = g.iter().filter(|x| matcher.any_match(x, &p)).count();
    (tp_p, p.len(), tp_g, g.len())
}

pub fn prf1(predicted: &[String], gold: &[String], matcher: &NameMatcher) -> Result<Prf1> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument("gold set must be non-empty".into()));
    }
    let (a, b, c, d) = match_counts(predicted, gold, matcher);
    Ok(Prf1::from_counts(a, b, c, d))
}
