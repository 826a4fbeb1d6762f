//! Per-(variation, library) field documents and BM25-style scoring.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{EdgeKind, EvidenceRef, KnowledgeGraph, Library, ModelVariation};
use crate::text::term_tokens;

use super::{Boosts, KeywordSet};

/// Scored fields, in the (alphabetical) order their partial scores are
/// summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    BaseNames,
    Definitions,
    Features,
    LibraryText,
    VariationName,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::BaseNames, Field::Definitions, Field::Features, Field::LibraryText, Field::VariationName];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::BaseNames => "base_names",
            Field::Definitions => "definitions",
            Field::Features => "features",
            Field::LibraryText => "library_text",
            Field::VariationName => "variation_name",
        }
    }

    pub fn boost(self, b: &Boosts) -> f64 {
        match self {
            Field::BaseNames => b.base_names,
            Field::Definitions => b.definitions,
            Field::Features => b.features,
            Field::LibraryText => b.library_text,
            Field::VariationName => b.variation_name,
        }
    }
}

/// Tokenized fields of one recommendable pair.
#[derive(Debug, Clone)]
pub struct PairDoc<'g> {
    pub variation: &'g ModelVariation,
    pub library: &'g Library,
    pub fields: [Vec<String>; 5],
    /// Feature phrase tokens with the evidence of their edge.
    pub features: Vec<(Vec<String>, &'g [EvidenceRef])>,
}

/// One document per library→variation edge.
///
/// * base names: base name, then aliases in sorted order
/// * definitions: variation definition, then base definition
/// * features: feature phrases in feature-id order
/// * library text: keywords in order, then the summary
pub fn pair_documents(graph: &KnowledgeGraph) -> Vec<PairDoc<'_>> {
    graph
        .variation_library_pairs()
        .into_iter()
        .map(|(v, l)| {
            let base = graph.base_model(&v.base_id);
            let mut base_names = Vec::new();
            let mut definitions = term_tokens(&v.definition);
            if let Some(b) = base {
                base_names.extend(term_tokens(&b.name));
                for a in &b.aliases {
                    base_names.extend(term_tokens(a));
                }
                definitions.extend(term_tokens(&b.definition));
            }
            let mut features = Vec::new();
            let mut feature_tokens = Vec::new();
            for fid in &v.feature_ids {
                if let Some(f) = graph.feature(fid) {
                    let toks = term_tokens(&f.phrase);
                    feature_tokens.extend(toks.iter().cloned());
                    let ev = graph
                        .edge(EdgeKind::VariationFeature, &v.id, fid)
                        .map(|e| e.evidence.as_slice())
                        .unwrap_or(&[]);
                    features.push((toks, ev));
                }
            }
            let mut library_text = Vec::new();
            for k in &l.keywords {
                library_text.extend(term_tokens(k));
            }
            library_text.extend(term_tokens(&l.summary));
            PairDoc {
                variation: v,
                library: l,
                fields: [base_names, definitions, feature_tokens, library_text, term_tokens(&v.name)],
                features,
            }
        })
        .collect()
}

/// Conjunctive term frequency: the smallest count among the term's tokens.
pub fn term_frequency(field: &[String], term: &[String]) -> usize {
    term.iter()
        .map(|t| field.iter().filter(|f| *f == t).count())
        .min()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub variation_id: crate::graph::EntityId,
    pub library_id: crate::graph::EntityId,
    pub variation_name: String,
    pub library_name: String,
    pub relevance: f64,
    pub field_breakdown: BTreeMap<String, f64>,
    pub quality_bonus: f64,
    pub final_score: f64,
    pub evidence: Vec<EvidenceRef>,
}

/// BM25 parameters.
#[derive(Debug, Clone, Copy)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

/// Relevance of every pair with at least one match. The quality fields are
/// left at `bonus = 0`, `final = relevance`.
///
/// For field `f` and term `t` (weight `w`):
/// `idf = ln(1 + (N - df + 0.5) / (df + 0.5))` over the N pair documents,
/// `part = idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len))`.
/// The field score is `boost * Σ_t w * part` with terms in sorted order;
/// relevance sums field scores in [`Field::ALL`] order.
pub fn score_candidates(keywords: &KeywordSet, docs: &[PairDoc<'_>], bm25: Bm25, boosts: &Boosts) -> Vec<ScoredCandidate> {
    let terms: Vec<(Vec<String>, f64)> = keywords
        .term_weights()
        .into_iter()
        .map(|(t, w)| (term_tokens(t), w))
        .filter(|(t, _)| !t.is_empty())
        .collect();
    if terms.is_empty() || docs.is_empty() {
        return Vec::new();
    }
    let n = docs.len() as f64;
    // Per field: average length and per-term document frequency.
    let mut avg_len = [0.0f64; 5];
    let mut df = vec![[0usize; 5]; terms.len()];
    for (fi, avg) in avg_len.iter_mut().enumerate() {
        let total: usize = docs.iter().map(|d| d.fields[fi].len()).sum();
        *avg = total as f64 / n;
        for (ti, (t, _)) in terms.iter().enumerate() {
            df[ti][fi] = docs.iter().filter(|d| term_frequency(&d.fields[fi], t) > 0).count();
        }
    }
    let mut out = Vec::new();
    for d in docs {
        let mut breakdown = BTreeMap::new();
        let mut relevance = 0.0;
        let mut evidence: Vec<EvidenceRef> = Vec::new();
        let mut add_ev = |ev: &[EvidenceRef]| {
            for e in ev {
                if !evidence.contains(e) {
                    evidence.push(e.clone());
                }
            }
        };
        for (fi, field) in Field::ALL.iter().enumerate() {
            let toks = &d.fields[fi];
            let mut sum = 0.0;
            let mut matched = false;
            for (ti, (t, w)) in terms.iter().enumerate() {
                let tf = term_frequency(toks, t);
                if tf == 0 {
                    continue;
                }
                matched = true;
                let tf = tf as f64;
                let dff = df[ti][fi] as f64;
                let idf = (1.0 + (n - dff + 0.5) / (dff + 0.5)).ln();
                let norm = 1.0 - bm25.b + bm25.b * toks.len() as f64 / avg_len[fi];
                sum += w * idf * tf * (bm25.k1 + 1.0) / (tf + bm25.k1 * norm);
                match field {
                    Field::LibraryText => add_ev(&d.library.evidence),
                    Field::Features => {
                        for (ft, ev) in &d.features {
                            if t.iter().any(|x| ft.contains(x)) {
                                add_ev(ev);
                            }
                        }
                    }
                    _ => add_ev(&d.variation.evidence),
                }
            }
            if matched {
                let score = field.boost(boosts) * sum;
                relevance += score;
                breakdown.insert(field.as_str().to_string(), score);
            }
        }
        if breakdown.is_empty() {
            continue;
        }
        out.push(ScoredCandidate {
            variation_id: d.variation.id.clone(),
            library_id: d.library.id.clone(),
            variation_name: d.variation.name.clone(),
            library_name: d.library.distribution_name.clone(),
            relevance,
            field_breakdown: breakdown,
            quality_bonus: 0.0,
            final_score: relevance,
            evidence,
        });
    }
    out
}
