use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{match_counts, read_jsonl, NameMatcher, Prf1};
use crate::error::{Error, Result};
use crate::provider::{fuse, FusePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub row_id: String,
    pub system: String,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRow {
    pub row_id: String,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: String,
    pub predictions: Vec<PathBuf>,
    pub gold: PathBuf,
    #[serde(default)]
    pub fusion: Option<FusePolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub system: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub rows: usize,
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub task: String,
    pub gold_rows: usize,
    pub results: Vec<ExperimentRow>,
    pub notices: Vec<String>,
}

fn policy_name(p: FusePolicy) -> &'static str {
    match p {
        FusePolicy::Union => "union",
        FusePolicy::Intersection => "intersection",
        FusePolicy::Majority => "majority",
    }
}

/// Micro-averaged scores of one system over all gold rows.
fn score_system(
    preds: &BTreeMap<String, Vec<String>>,
    gold: &BTreeMap<String, Vec<String>>,
    matcher: &NameMatcher,
) -> (Prf1, usize) {
    let (mut tp_p, mut n_p, mut tp_g, mut n_g) = (0, 0, 0, 0);
    for (row, g) in gold {
        let p = preds.get(row).map(Vec::as_slice).unwrap_or(&[]);
        let (a, b, c, d) = match_counts(p, g, matcher);
        tp_p += a;
        n_p += b;
        tp_g += c;
        n_g += d;
    }
    (Prf1::from_counts(tp_p, n_p, tp_g, n_g), gold.len())
}

/// Scores rows already in memory. Systems come out sorted by name, then the
/// fused row when a policy is given and at least two systems exist.
pub fn score_experiment(
    task: &str,
    predictions: &[PredictionRow],
    gold: &[GoldRow],
    fusion: Option<FusePolicy>,
    matcher: &NameMatcher,
) -> Result<ExperimentTable> {
    let mut notices = Vec::new();
    let mut gold_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for g in gold {
        gold_map.entry(g.row_id.clone()).or_default().extend(g.items.iter().cloned());
    }
    gold_map.retain(|row, items| {
        let keep = !items.is_empty();
        if !keep {
            notices.push(format!("row {row}: empty gold, excluded"));
        }
        keep
    });
    if gold_map.is_empty() {
        return Err(Error::InvalidArgument("gold file has no usable rows".into()));
    }
    let mut by_system: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    for p in predictions {
        if !gold_map.contains_key(&p.row_id) {
            notices.push(format!("{} row {}: not in gold, ignored", p.system, p.row_id));
            continue;
        }
        by_system
            .entry(p.system.clone())
            .or_default()
            .entry(p.row_id.clone())
            .or_default()
            .extend(p.items.iter().cloned());
    }
    let mut results = Vec::new();
    for (system, preds) in &by_system {
        let (s, rows) = score_system(preds, &gold_map, matcher);
        results.push(row(system, s, rows));
    }
    if let Some(policy) = fusion {
        let systems: Vec<&BTreeMap<String, Vec<String>>> = by_system.values().collect();
        let mut fused: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for row_id in gold_map.keys() {
            let sets: Vec<BTreeSet<String>> = systems
                .iter()
                .map(|s| {
                    s.get(row_id)
                        .map(|items| items.iter().map(|i| matcher.canonical(i)).filter(|c| !c.is_empty()).collect())
                        .unwrap_or_default()
                })
                .collect();
            let out = fuse(&sets, policy).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            fused.insert(row_id.clone(), out.into_iter().collect());
        }
        let (s, rows) = score_system(&fused, &gold_map, matcher);
        results.push(row(&format!("fused-{}", policy_name(policy)), s, rows));
    }
    Ok(ExperimentTable { task: task.to_string(), gold_rows: gold_map.len(), results, notices })
}

fn row(system: &str, s: Prf1, rows: usize) -> ExperimentRow {
    let s = s.rounded();
    ExperimentRow {
        system: system.to_string(),
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        rows,
        precision_undefined: s.precision_undefined,
    }
}

/// Loads the configured files and scores them.
pub fn run_experiment(cfg: &ExperimentConfig, matcher: &NameMatcher) -> Result<ExperimentTable> {
    let mut predictions = Vec::new();
    for p in &cfg.predictions {
        predictions.extend(read_jsonl::<PredictionRow>(p)?);
    }
    let gold: Vec<GoldRow> = read_jsonl(&cfg.gold)?;
    score_experiment(&cfg.task, &predictions, &gold, cfg.fusion, matcher)
}

impl ExperimentConfig {
    /// Paths relative to `base` are resolved against it.
    pub fn resolve_paths(mut self, base: &Path) -> Self {
        self.predictions = self.predictions.into_iter().map(|p| base.join(p)).collect();
        self.gold = base.join(&self.gold);
        self
    }
}

impl ExperimentTable {
    pub fn to_text(&self) -> String {
        let width = self.results.iter().map(|r| r.system.len()).max().unwrap_or(6).max(6);
        let mut out = format!("task: {}  (gold rows: {})\n", self.task, self.gold_rows);
        out.push_str(&format!("{:<width$}  {:>9}  {:>9}  {:>9}\n", "system", "precision", "recall", "f1"));
        for r in &self.results {
            let flag = if r.precision_undefined { " *" } else { "" };
            out.push_str(&format!(
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}{flag}\n",
                r.system, r.precision, r.recall, r.f1
            ));
        }
        for n in &self.notices {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}
