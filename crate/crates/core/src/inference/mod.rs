//! Intent queries: keyword interpretation, multi-field scoring, hard
//! feature constraints and quality-weighted ranking over
//! (variation, library) pairs.

mod intent;
mod score;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use intent::{interpret_intent, KeywordSet, SynonymTable, TermOrigin, WeightedTerm};
pub use score::{pair_documents, score_candidates, term_frequency, Bm25, Field, PairDoc, ScoredCandidate};

use crate::config::Resources;
use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::text::normalize_phrase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosts {
    pub variation_name: f64,
    pub base_names: f64,
    pub definitions: f64,
    pub features: f64,
    pub library_text: f64,
}

/// `ranking.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    pub k1: f64,
    pub b: f64,
    pub quality_lambda: f64,
    pub default_k: usize,
    #[serde(default = "default_floor")]
    pub rarity_floor: usize,
    pub boosts: Boosts,
}

fn default_floor() -> usize {
    1
}

impl RankingConfig {
    pub fn bm25(&self) -> Bm25 {
        Bm25 { k1: self.k1, b: self.b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentQuery {
    pub text: String,
    pub k: usize,
    #[serde(default)]
    pub required_features: BTreeSet<String>,
    #[serde(default)]
    pub quality_weights: BTreeMap<String, f64>,
}

impl IntentQuery {
    pub fn new(text: &str, k: usize) -> Self {
        IntentQuery {
            text: text.to_string(),
            k,
            required_features: BTreeSet::new(),
            quality_weights: BTreeMap::new(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if let Some((a, w)) = self.quality_weights.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!("quality weight for {a:?} must be finite and >= 0, got {w}")));
        }
        Ok(())
    }
}

/// Inputs of the ranker besides the graph.
#[derive(Debug, Clone)]
pub struct RankingContext {
    pub ranking: RankingConfig,
    pub stoplist: Vec<String>,
    pub synonyms: SynonymTable,
}

impl RankingContext {
    pub fn from_resources(r: &Resources) -> Self {
        RankingContext {
            ranking: r.ranking.clone(),
            stoplist: r.stoplist.clone(),
            synonyms: r.synonyms.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub keywords: KeywordSet,
    pub results: Vec<ScoredCandidate>,
}

/// Weighted mean of the pair's aggregate scores; weights of attributes
/// without an aggregate still count in the denominator.
pub fn quality_bonus(graph: &KnowledgeGraph, c: &ScoredCandidate, weights: &BTreeMap<String, f64>) -> f64 {
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let aggs = graph.quality_for(&c.variation_id, &c.library_id);
    let mut acc = 0.0;
    for (attr, w) in weights {
        if let Some(q) = aggs.iter().find(|q| &q.attribute == attr) {
            acc += w * q.score;
        }
    }
    acc / total
}

/// Score, filter, re-weight and rank. Ties go to the lexicographically
/// smaller (variation name, library name), then ids.
pub fn rank(
    graph: &KnowledgeGraph,
    keywords: &KeywordSet,
    query: &IntentQuery,
    cfg: &RankingConfig,
) -> Result<Vec<ScoredCandidate>> {
    query.check()?;
    let docs = pair_documents(graph);
    let required: BTreeSet<String> = query.required_features.iter().map(|f| normalize_phrase(f)).collect();
    let mut cands = score_candidates(keywords, &docs, cfg.bm25(), &cfg.boosts);
    cands.retain(|c| {
        let Some(v) = graph.variation(&c.variation_id) else { return false };
        let have: BTreeSet<&str> = v
            .feature_ids
            .iter()
            .filter_map(|f| graph.feature(f))
            .map(|f| f.phrase.as_str())
            .collect();
        required.iter().all(|r| have.contains(r.as_str()))
    });
    for c in &mut cands {
        c.quality_bonus = quality_bonus(graph, c, &query.quality_weights);
        c.final_score = c.relevance * (1.0 + cfg.quality_lambda * c.quality_bonus);
    }
    cands.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then_with(|| a.variation_name.cmp(&b.variation_name))
            .then_with(|| a.library_name.cmp(&b.library_name))
            .then_with(|| a.variation_id.cmp(&b.variation_id))
            .then_with(|| a.library_id.cmp(&b.library_id))
    });
    cands.truncate(query.k);
    Ok(cands)
}

/// Interprets the intent text and ranks the graph's pairs against it.
pub fn recommend(graph: &KnowledgeGraph, query: &IntentQuery, ctx: &RankingContext) -> Result<Recommendation> {
    query.check()?;
    let keywords = interpret_intent(&query.text, &ctx.stoplist, &ctx.synonyms, graph.index(), ctx.ranking.rarity_floor)?;
    let results = rank(graph, &keywords, query, &ctx.ranking)?;
    Ok(Recommendation { keywords, results })
}
