//! HTTP API over an immutable graph snapshot.
//!
//! Handlers are plain functions from a loaded snapshot and request data to
//! an [`ApiResponse`]; [`server`] only adapts them to axum. The CLI `query`
//! command and [`recommend_response`] produce the same JSON as
//! `POST /api/recommend`.

pub mod server;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::eval::corpus_stats;
use crate::graph::{snapshot, EntityId, KnowledgeGraph};
use crate::inference::{recommend, IntentQuery, KeywordSet, RankingContext, ScoredCandidate};

pub const VERSION_HEADER: &str = "x-snapshot-version";
pub const MAX_DEPTH: usize = 6;
pub const OPENAPI: &str = include_str!("openapi.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiVariation {
    pub id: EntityId,
    pub name: String,
    pub base: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiLibrary {
    pub id: EntityId,
    pub name: String,
    pub version: String,
    pub cve_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiQuality {
    pub attribute: String,
    pub score: f64,
    pub review_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEvidence {
    pub url: String,
    pub fragment: String,
    pub retrieved_at: chrono::DateTime<chrono::Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiRecommendation {
    pub rank: usize,
    pub variation: ApiVariation,
    pub library: ApiLibrary,
    pub relevance: f64,
    pub quality_bonus: f64,
    pub final_score: f64,
    pub field_breakdown: BTreeMap<String, f64>,
    pub quality: Vec<ApiQuality>,
    pub evidence: Vec<ApiEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub results: Vec<ApiRecommendation>,
    pub keywords: KeywordSet,
}

/// Body of `POST /api/recommend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    pub intent: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub required_features: BTreeSet<String>,
    #[serde(default)]
    pub quality_weights: BTreeMap<String, f64>,
}

impl RecommendRequest {
    pub fn to_query(&self, default_k: usize) -> IntentQuery {
        IntentQuery {
            text: self.intent.clone(),
            k: self.k.unwrap_or(default_k),
            required_features: self.required_features.clone(),
            quality_weights: self.quality_weights.clone(),
        }
    }
}

pub fn api_recommendation(graph: &KnowledgeGraph, rank: usize, c: &ScoredCandidate) -> ApiRecommendation {
    let v = graph.variation(&c.variation_id);
    let l = graph.library(&c.library_id);
    ApiRecommendation {
        rank,
        variation: ApiVariation {
            id: c.variation_id.clone(),
            name: c.variation_name.clone(),
            base: v.and_then(|v| graph.base_model(&v.base_id)).map(|b| b.name.clone()).unwrap_or_default(),
            definition: v.map(|v| v.definition.clone()).unwrap_or_default(),
        },
        library: ApiLibrary {
            id: c.library_id.clone(),
            name: c.library_name.clone(),
            version: l.map(|l| l.version.clone()).unwrap_or_default(),
            cve_count: l.map(|l| l.cve_ids.len()).unwrap_or(0),
        },
        relevance: c.relevance,
        quality_bonus: c.quality_bonus,
        final_score: c.final_score,
        field_breakdown: c.field_breakdown.clone(),
        quality: graph
            .quality_for(&c.variation_id, &c.library_id)
            .into_iter()
            .map(|q| ApiQuality { attribute: q.attribute.clone(), score: q.score, review_count: q.review_count })
            .collect(),
        evidence: c
            .evidence
            .iter()
            .map(|e| ApiEvidence { url: e.source_url.clone(), fragment: e.fragment.clone(), retrieved_at: e.retrieved_at })
            .collect(),
    }
}

/// The recommend path shared by the library, the CLI and the API.
pub fn recommend_response(graph: &KnowledgeGraph, query: &IntentQuery, ctx: &RankingContext) -> Result<RecommendResponse> {
    let rec = recommend(graph, query, ctx)?;
    Ok(RecommendResponse {
        results: rec.results.iter().enumerate().map(|(i, c)| api_recommendation(graph, i + 1, c)).collect(),
        keywords: rec.keywords,
    })
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's Map is ordered by key unless `preserve_order` is on.
    let v = serde_json::to_value(value).expect("serializable");
    serde_json::to_string(&v).expect("value serializes")
}

/// A loaded snapshot and its version string.
#[derive(Debug)]
pub struct Loaded {
    pub graph: Arc<KnowledgeGraph>,
    pub version: String,
}

impl Loaded {
    pub fn new(graph: KnowledgeGraph) -> Self {
        let version = snapshot::version_of(&graph);
        Loaded { graph: Arc::new(graph), version }
    }
}

/// Shared service state: the current snapshot, swapped atomically.
pub struct AppState {
    current: RwLock<Option<Arc<Loaded>>>,
    pub ctx: RankingContext,
}

impl AppState {
    pub fn new(graph: Option<KnowledgeGraph>, ctx: RankingContext) -> Self {
        AppState { current: RwLock::new(graph.map(|g| Arc::new(Loaded::new(g)))), ctx }
    }

    pub fn loaded(&self) -> Option<Arc<Loaded>> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Readers holding the old snapshot finish on it.
    pub fn swap(&self, graph: KnowledgeGraph) {
        let next = Arc::new(Loaded::new(graph));
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Some(next);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
    pub version: Option<String>,
}

impl ApiResponse {
    fn ok(body: Value, l: &Loaded) -> Self {
        ApiResponse { status: 200, body, version: Some(l.version.clone()) }
    }

    fn error(status: u16, message: impl Into<String>, version: Option<&Loaded>) -> Self {
        ApiResponse { status, body: json!({"error": message.into()}), version: version.map(|l| l.version.clone()) }
    }

    fn from_error(e: &Error, l: &Loaded) -> Self {
        let status = match e {
            Error::NotFound(_) => 404,
            Error::InvalidArgument(_) => 400,
            _ => 500,
        };
        Self::error(status, e.to_string(), Some(l))
    }
}

fn no_graph() -> ApiResponse {
    ApiResponse::error(503, "no knowledge graph loaded", None)
}

/// `POST /api/recommend`.
pub fn handle_recommend(state: &AppState, body: &[u8]) -> ApiResponse {
    let Some(l) = state.loaded() else {
        return no_graph();
    };
    let req: RecommendRequest = match serde_json::from_slice(body) {
        Ok(r) => r,
        Err(e) => return ApiResponse::error(400, format!("invalid request body: {e}"), Some(&l)),
    };
    let query = req.to_query(state.ctx.ranking.default_k);
    match recommend_response(&l.graph, &query, &state.ctx) {
        Ok(r) => ApiResponse::ok(serde_json::to_value(r).expect("serializable"), &l),
        Err(e) => ApiResponse::from_error(&e, &l),
    }
}

/// A parsed read route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadRoute {
    Search { q: String, k: Option<String> },
    Model(String),
    Library(String),
    Graph { id: String, depth: Option<String> },
    Stats,
}

fn model_view(g: &KnowledgeGraph, id: &EntityId) -> Option<Value> {
    let t = g.tables();
    if let Some(v) = g.variation(id) {
        let features: Vec<&String> = v.feature_ids.iter().filter_map(|f| g.feature(f)).map(|f| &f.phrase).collect();
        let libraries: Vec<Value> = t
            .libraries
            .values()
            .filter(|l| l.supported_variation_ids.contains(id))
            .map(|l| {
                json!({
                    "id": l.id, "name": l.distribution_name, "version": l.version,
                    "quality": g.quality_for(id, &l.id).iter()
                        .map(|q| json!({"attribute": q.attribute, "score": q.score, "review_count": q.review_count}))
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        return Some(json!({
            "kind": "variation", "variation": v, "base": g.base_model(&v.base_id),
            "features": features, "libraries": libraries,
        }));
    }
    g.base_model(id).map(|b| {
        let variations: Vec<Value> = t
            .variations
            .values()
            .filter(|v| &v.base_id == id)
            .map(|v| json!({"id": v.id, "name": v.name}))
            .collect();
        json!({"kind": "base_model", "base": b, "variations": variations})
    })
}

fn library_view(g: &KnowledgeGraph, name: &str) -> Option<Value> {
    let l = g.library_by_name(name)?;
    let t = g.tables();
    let cves: Vec<_> = l.cve_ids.iter().filter_map(|c| t.cves.get(c)).collect();
    let variations: Vec<Value> = l
        .supported_variation_ids
        .iter()
        .filter_map(|v| g.variation(v))
        .map(|v| json!({"id": v.id, "name": v.name}))
        .collect();
    Some(json!({"library": l, "cves": cves, "variations": variations}))
}

fn parse_usize(raw: &Option<String>, what: &str) -> std::result::Result<Option<usize>, String> {
    match raw {
        None => Ok(None),
        Some(s) => s.trim().parse().map(Some).map_err(|_| format!("{what} must be a non-negative integer, got {s:?}")),
    }
}

/// Read-only GET endpoints.
pub fn handle_read(state: &AppState, route: &ReadRoute) -> ApiResponse {
    let Some(l) = state.loaded() else {
        return no_graph();
    };
    let g = &l.graph;
    match route {
        ReadRoute::Search { q, k } => {
            let k = match parse_usize(k, "k") {
                Ok(k) => k.unwrap_or(state.ctx.ranking.default_k),
                Err(m) => return ApiResponse::error(400, m, Some(&l)),
            };
            ApiResponse::ok(json!({"query": q, "hits": g.index().search(q, k)}), &l)
        }
        ReadRoute::Model(id) => match model_view(g, &EntityId::from(id.as_str())) {
            Some(v) => ApiResponse::ok(v, &l),
            None => ApiResponse::error(404, format!("no model with id {id}"), Some(&l)),
        },
        ReadRoute::Library(name) => match library_view(g, name) {
            Some(v) => ApiResponse::ok(v, &l),
            None => ApiResponse::error(404, format!("no library named {name}"), Some(&l)),
        },
        ReadRoute::Graph { id, depth } => {
            let depth = match parse_usize(depth, "depth") {
                Ok(d) if d.unwrap_or(1) <= MAX_DEPTH => d.unwrap_or(1),
                Ok(_) => return ApiResponse::error(422, format!("depth must be at most {MAX_DEPTH}"), Some(&l)),
                Err(m) => return ApiResponse::error(422, m, Some(&l)),
            };
            match g.get_subgraph(&EntityId::from(id.as_str()), depth) {
                Ok(s) => ApiResponse::ok(serde_json::to_value(s).expect("serializable"), &l),
                Err(e) => ApiResponse::from_error(&e, &l),
            }
        }
        ReadRoute::Stats => ApiResponse::ok(serde_json::to_value(corpus_stats(g)).expect("serializable"), &l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Resources;
    use crate::fixtures;

    fn state(g: Option<KnowledgeGraph>) -> AppState {
        AppState::new(g, RankingContext::from_resources(&Resources::bundled()))
    }

    #[test]
    fn recommend_matches_library_call() {
        let s = state(Some(fixtures::regression_graph()));
        let r = handle_recommend(&s, br#"{"intent":"robust regression for outliers","k":2}"#);
        assert_eq!(r.status, 200);
        let direct = recommend_response(&fixtures::regression_graph(), &IntentQuery::new("robust regression for outliers", 2), &s.ctx).unwrap();
        assert_eq!(canonical_json(&r.body), canonical_json(&direct));
        assert_eq!(direct.results[0].variation.name, "Robust Multivariate Regression");
        assert_eq!(direct.results[0].rank, 1);
        assert_eq!(direct.results[0].variation.base, "Regression");
    }

    #[test]
    fn errors() {
        let s = state(Some(fixtures::regression_graph()));
        let r = handle_recommend(&s, b"{}");
        assert_eq!(r.status, 400);
        assert!(r.body["error"].as_str().unwrap().contains("intent"));
        assert_eq!(handle_recommend(&s, br#"{"intent":"the of and"}"#).status, 400);
        assert_eq!(handle_recommend(&s, br#"{"intent":"regression","k":0}"#).status, 400);
        assert_eq!(handle_recommend(&state(None), br#"{"intent":"x"}"#).status, 503);
        assert_eq!(handle_read(&s, &ReadRoute::Model("unknown".into())).status, 404);
        let bad = handle_read(&s, &ReadRoute::Graph { id: "x".into(), depth: Some("-1".into()) });
        assert_eq!(bad.status, 422);
        assert!(bad.version.is_some());
    }

    #[test]
    fn reads() {
        let g = fixtures::regression_graph();
        let base = g.tables().base_models.keys().next().unwrap().clone();
        let s = state(Some(g));
        let sub = handle_read(&s, &ReadRoute::Graph { id: base.to_string(), depth: Some("2".into()) });
        assert_eq!(sub.status, 200);
        assert_eq!(sub.body["entities"].as_array().unwrap().len(), 10);
        let stats = handle_read(&s, &ReadRoute::Stats);
        assert_eq!(stats.body["totals"]["variations"], 2);
        let lib = handle_read(&s, &ReadRoute::Library("scikit-learn".into()));
        assert_eq!(lib.body["variations"].as_array().unwrap().len(), 2);
        let m = handle_read(&s, &ReadRoute::Model(base.to_string()));
        assert_eq!(m.body["kind"], "base_model");
    }
}
