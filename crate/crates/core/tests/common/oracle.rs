//! Exhaustive reference ranker, written from the documented scoring rules
//! and reading the graph through its tables only.

use std::collections::{BTreeMap, BTreeSet};

use modelselect::graph::{EdgeKind, EntityId};
use modelselect::inference::{IntentQuery, KeywordSet, RankingConfig};
use modelselect::text::{normalize_phrase, term_tokens};
use modelselect::KnowledgeGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub variation_id: EntityId,
    pub library_id: EntityId,
    pub variation_name: String,
    pub library_name: String,
    pub relevance: f64,
    pub breakdown: BTreeMap<String, f64>,
    pub bonus: f64,
    pub final_score: f64,
}

const FIELDS: [&str; 5] = ["base_names", "definitions", "features", "library_text", "variation_name"];

fn tf(field: &[String], term: &[String]) -> usize {
    let mut best = usize::MAX;
    for t in term {
        let mut n = 0;
        for f in field {
            if f == t {
                n += 1;
            }
        }
        best = best.min(n);
    }
    if term.is_empty() {
        0
    } else {
        best
    }
}

fn phrases_of_variation(g: &KnowledgeGraph, v: &EntityId) -> BTreeSet<String> {
    g.tables()
        .edges
        .values()
        .filter(|e| e.kind == EdgeKind::VariationFeature && &e.from == v)
        .filter_map(|e| g.tables().features.get(&e.to))
        .map(|f| f.phrase.clone())
        .collect()
}

pub fn brute_force(g: &KnowledgeGraph, keywords: &KeywordSet, query: &IntentQuery, cfg: &RankingConfig) -> Vec<OracleRow> {
    let t = g.tables();
    // Pair documents.
    let mut docs: Vec<(EntityId, EntityId, [Vec<String>; 5])> = Vec::new();
    for e in t.edges.values().filter(|e| e.kind == EdgeKind::LibraryVariation) {
        let (Some(v), Some(l)) = (t.variations.get(&e.to), t.libraries.get(&e.from)) else { continue };
        let mut base_names = Vec::new();
        let mut defs = term_tokens(&v.definition);
        if let Some(b) = t.base_models.get(&v.base_id) {
            base_names.extend(term_tokens(&b.name));
            for a in &b.aliases {
                base_names.extend(term_tokens(a));
            }
            defs.extend(term_tokens(&b.definition));
        }
        let mut feats = Vec::new();
        for fe in t.edges.values().filter(|x| x.kind == EdgeKind::VariationFeature && x.from == v.id) {
            if let Some(f) = t.features.get(&fe.to) {
                feats.extend(term_tokens(&f.phrase));
            }
        }
        let mut lib_text = Vec::new();
        for k in &l.keywords {
            lib_text.extend(term_tokens(k));
        }
        lib_text.extend(term_tokens(&l.summary));
        docs.push((v.id.clone(), l.id.clone(), [base_names, defs, feats, lib_text, term_tokens(&v.name)]));
    }
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for w in &keywords.enriched {
        let e = weights.entry(w.term.clone()).or_insert(0.0);
        if w.weight > *e {
            *e = w.weight;
        }
    }
    let terms: Vec<(Vec<String>, f64)> =
        weights.into_iter().map(|(t, w)| (term_tokens(&t), w)).filter(|(t, _)| !t.is_empty()).collect();
    let n = docs.len() as f64;
    let boosts = [
        cfg.boosts.base_names,
        cfg.boosts.definitions,
        cfg.boosts.features,
        cfg.boosts.library_text,
        cfg.boosts.variation_name,
    ];
    let required: BTreeSet<String> = query.required_features.iter().map(|f| normalize_phrase(f)).collect();
    let mut rows = Vec::new();
    if terms.is_empty() {
        return rows;
    }
    for (vid, lid, fields) in &docs {
        let mut relevance = 0.0;
        let mut breakdown = BTreeMap::new();
        for fi in 0..5 {
            let avg = docs.iter().map(|d| d.2[fi].len()).sum::<usize>() as f64 / n;
            let mut sum = 0.0;
            let mut hit = false;
            for (term, w) in &terms {
                let f = tf(&fields[fi], term);
                if f == 0 {
                    continue;
                }
                hit = true;
                let df = docs.iter().filter(|d| tf(&d.2[fi], term) > 0).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let f = f as f64;
                let norm = 1.0 - cfg.b + cfg.b * fields[fi].len() as f64 / avg;
                sum += w * idf * f * (cfg.k1 + 1.0) / (f + cfg.k1 * norm);
            }
            if hit {
                let s = boosts[fi] * sum;
                relevance += s;
                breakdown.insert(FIELDS[fi].to_string(), s);
            }
        }
        if breakdown.is_empty() {
            continue;
        }
        let have = phrases_of_variation(g, vid);
        if !required.iter().all(|r| have.contains(r)) {
            continue;
        }
        let total: f64 = query.quality_weights.values().sum();
        let bonus = if total <= 0.0 {
            0.0
        } else {
            let mut acc = 0.0;
            for (attr, w) in &query.quality_weights {
                if let Some(q) = t
                    .quality
                    .values()
                    .find(|q| &q.variation_id == vid && &q.library_id == lid && &q.attribute == attr)
                {
                    acc += w * q.score;
                }
            }
            acc / total
        };
        rows.push(OracleRow {
            variation_id: vid.clone(),
            library_id: lid.clone(),
            variation_name: t.variations[vid].name.clone(),
            library_name: t.libraries[lid].distribution_name.clone(),
            relevance,
            breakdown,
            bonus,
            final_score: relevance * (1.0 + cfg.quality_lambda * bonus),
        });
    }
    // Position of each row = number of rows that beat it.
    let beats = |a: &OracleRow, b: &OracleRow| {
        if a.final_score != b.final_score {
            return a.final_score > b.final_score;
        }
        (&a.variation_name, &a.library_name, &a.variation_id, &a.library_id)
            < (&b.variation_name, &b.library_name, &b.variation_id, &b.library_id)
    };
    let mut placed: Vec<(usize, OracleRow)> = rows
        .iter()
        .map(|r| (rows.iter().filter(|o| beats(o, r)).count(), r.clone()))
        .filter(|(pos, _)| *pos < query.k)
        .collect();
    placed.sort_by_key(|(pos, _)| *pos);
    placed.into_iter().map(|(_, r)| r).collect()
}

/// Results whose variation lacks a required feature, checked through the
/// feature edges rather than the variation record.
pub fn constraint_violations(g: &KnowledgeGraph, results: &[(EntityId, EntityId)], query: &IntentQuery) -> usize {
    let required: BTreeSet<String> = query.required_features.iter().map(|f| normalize_phrase(f)).collect();
    results
        .iter()
        .filter(|(v, _)| {
            let have = phrases_of_variation(g, v);
            !required.iter().all(|r| have.contains(r))
        })
        .count()
}
