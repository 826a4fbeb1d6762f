mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use modelselect::api::server::{router, ServerOptions};
use modelselect::api::{canonical_json, recommend_response, AppState, VERSION_HEADER};
use modelselect::config::Resources;
use modelselect::eval::corpus_stats;
use modelselect::graph::snapshot;
use modelselect::inference::{IntentQuery, RankingContext};
use modelselect::KnowledgeGraph;

fn ctx() -> RankingContext {
    RankingContext::from_resources(&Resources::bundled())
}

fn app_with(graph: Option<KnowledgeGraph>, opts: &ServerOptions) -> (Arc<AppState>, Router) {
    let state = Arc::new(AppState::new(graph, ctx()));
    let app = router(state.clone(), opts);
    (state, app)
}

fn app() -> Router {
    app_with(Some(common::golden_graph()), &ServerOptions::default()).1
}

struct Reply {
    status: StatusCode,
    version: Option<String>,
    headers: axum::http::HeaderMap,
    body: Value,
}

async fn send(app: &Router, req: Request<Body>) -> Reply {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let version = headers.get(VERSION_HEADER).map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    Reply { status, version, headers, body }
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, body: &str) -> Reply {
    let req = Request::post("/api/recommend")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

fn golden_version() -> String {
    let m: Value = serde_json::from_slice(&std::fs::read(common::golden_dir().join(snapshot::MANIFEST)).unwrap()).unwrap();
    m["version"].as_str().unwrap().to_string()
}

fn base_id(g: &KnowledgeGraph, name: &str) -> String {
    g.tables().base_models.values().find(|b| b.name == name).unwrap().id.to_string()
}

#[tokio::test]
async fn recommend_matches_library_and_carries_version() {
    let app = app();
    let r = post(&app, r#"{"intent":"robust regression for outliers","k":2}"#).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.version.as_deref(), Some(golden_version().as_str()));
    let results = r.body["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["rank"], 1);
    assert_eq!(results[0]["variation"]["name"], "Robust Multivariate Regression");
    assert_eq!(results[0]["library"]["name"], "scikit-learn");
    let direct = recommend_response(&common::golden_graph(), &IntentQuery::new("robust regression for outliers", 2), &ctx()).unwrap();
    assert_eq!(canonical_json(&r.body), canonical_json(&direct));
}

#[tokio::test]
async fn quality_weights_follow_the_library() {
    let app = app();
    let g = common::golden_graph();
    let mut q = IntentQuery::new("regression", 6);
    q.quality_weights.insert("performance efficiency".into(), 1.0);
    let r = post(&app, r#"{"intent":"regression","k":6,"quality_weights":{"performance efficiency":1}}"#).await;
    assert_eq!(r.status, StatusCode::OK);
    let direct = recommend_response(&g, &q, &ctx()).unwrap();
    assert_eq!(canonical_json(&r.body), canonical_json(&direct));
    let plain = post(&app, r#"{"intent":"regression","k":6}"#).await;
    let names = |v: &Value| -> Vec<String> {
        v["results"].as_array().unwrap().iter().map(|r| r["variation"]["name"].as_str().unwrap().to_string()).collect()
    };
    assert_eq!(names(&plain.body).len(), names(&r.body).len());
}

#[tokio::test]
async fn recommend_rejects_bad_bodies() {
    let app = app();
    for body in ["{}", "not json", r#"{"intent":5}"#, r#"{"intent":"regression","k":0}"#, r#"{"intent":"the of and"}"#] {
        let r = post(&app, body).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body}");
        assert!(r.body["error"].is_string(), "{body}");
        assert!(r.version.is_some());
    }
    let r = post(&app, "{}").await;
    assert!(r.body["error"].as_str().unwrap().contains("intent"));
}

#[tokio::test]
async fn every_route_is_unavailable_without_a_graph() {
    let (_, app) = app_with(None, &ServerOptions::default());
    assert_eq!(post(&app, r#"{"intent":"regression"}"#).await.status, StatusCode::SERVICE_UNAVAILABLE);
    for uri in ["/api/search?q=ridge", "/api/models/x", "/api/libraries/numpy", "/api/graph/x", "/api/stats"] {
        let r = get(&app, uri).await;
        assert_eq!(r.status, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
        assert_eq!(r.version, None);
    }
    // The description does not need a graph.
    assert_eq!(get(&app, "/api/spec").await.status, StatusCode::OK);
}

#[tokio::test]
async fn search_finds_variations() {
    let app = app();
    let r = get(&app, "/api/search?q=ridge&k=3").await;
    assert_eq!(r.status, StatusCode::OK);
    let hits = r.body["hits"].as_array().unwrap();
    assert!(!hits.is_empty() && hits.len() <= 3);
    assert_eq!(get(&app, "/api/search?q=ridge&k=lots").await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn model_views() {
    let app = app();
    let g = common::golden_graph();
    let ridge = g.tables().variations.values().find(|v| v.name == "Ridge Regression").unwrap();
    let r = get(&app, &format!("/api/models/{}", ridge.id)).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["kind"], "variation");
    assert_eq!(r.body["base"]["name"], "Regression");
    assert_eq!(r.body["libraries"][0]["name"], "scikit-learn");

    let r = get(&app, &format!("/api/models/{}", base_id(&g, "Regression"))).await;
    assert_eq!(r.body["kind"], "base_model");
    assert_eq!(r.body["variations"].as_array().unwrap().len(), 6);

    let r = get(&app, "/api/models/unknown").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert!(r.version.is_some());
}

#[tokio::test]
async fn library_views() {
    let app = app();
    let r = get(&app, "/api/libraries/scikit-learn").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["library"]["distribution_name"], "scikit-learn");
    assert_eq!(r.body["variations"].as_array().unwrap().len(), 9);
    assert_eq!(r.body["cves"].as_array().unwrap().len(), 1);
    assert_eq!(get(&app, "/api/libraries/left-pad").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn subgraph_depths() {
    let app = app();
    let g = common::golden_graph();
    let id = base_id(&g, "Regression");
    let names = |v: &Value| -> Vec<String> {
        v["entities"].as_array().unwrap().iter().filter_map(|e| e["name"].as_str().map(String::from)).collect()
    };
    let one = get(&app, &format!("/api/graph/{id}")).await;
    assert_eq!(one.status, StatusCode::OK);
    assert_eq!(one.body["depth"], 1);
    let two = get(&app, &format!("/api/graph/{id}?depth=2")).await;
    for n in ["Regression", "Ridge Regression", "Robust Multivariate Regression"] {
        assert!(names(&two.body).iter().any(|x| x == n), "{n} missing at depth 2");
    }
    assert!(two.body["entities"].as_array().unwrap().len() > one.body["entities"].as_array().unwrap().len());
    for bad in ["7", "-1", "deep"] {
        let r = get(&app, &format!("/api/graph/{id}?depth={bad}")).await;
        assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "depth={bad}");
    }
    assert_eq!(get(&app, "/api/graph/nothing-here").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn stats_and_spec() {
    let app = app();
    let r = get(&app, "/api/stats").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body, serde_json::to_value(corpus_stats(&common::golden_graph())).unwrap());
    let r = get(&app, "/api/spec").await;
    assert_eq!(r.status, StatusCode::OK);
    for path in ["/api/recommend", "/api/search", "/api/models/{id}", "/api/libraries/{name}", "/api/graph/{id}", "/api/stats"] {
        assert!(r.body["paths"].get(path).is_some(), "spec lacks {path}");
    }
}

#[tokio::test]
async fn reads_leave_the_snapshot_untouched() {
    let (state, app) = app_with(Some(common::golden_graph()), &ServerOptions::default());
    let before = snapshot::encode(&state.loaded().unwrap().graph);
    let g = common::golden_graph();
    let id = base_id(&g, "Regression");
    for uri in [
        "/api/search?q=regression".to_string(),
        format!("/api/models/{id}"),
        "/api/libraries/scikit-learn".into(),
        format!("/api/graph/{id}?depth=6"),
        "/api/stats".into(),
    ] {
        assert_eq!(get(&app, &uri).await.status, StatusCode::OK, "{uri}");
    }
    post(&app, r#"{"intent":"kernel classifier"}"#).await;
    assert_eq!(snapshot::encode(&state.loaded().unwrap().graph), before);
}

#[tokio::test]
async fn swap_changes_the_version_header() {
    let (state, app) = app_with(Some(modelselect::fixtures::regression_graph()), &ServerOptions::default());
    let old = get(&app, "/api/stats").await.version.unwrap();
    state.swap(common::golden_graph());
    let new = get(&app, "/api/stats").await.version.unwrap();
    assert_ne!(old, new);
    assert_eq!(new, golden_version());
}

#[tokio::test]
async fn concurrent_queries_agree() {
    let app = app();
    let body = json!({"intent": "classifier with kernel trick", "k": 5}).to_string();
    let first = post(&app, &body).await.body;
    let mut tasks = Vec::new();
    for _ in 0..16 {
        let (app, body) = (app.clone(), body.clone());
        tasks.push(tokio::spawn(async move { post(&app, &body).await.body }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), first);
    }
}

#[tokio::test]
async fn cors_origin_is_configurable() {
    let opts = ServerOptions { cors_origin: Some("http://localhost:5173".into()), ui_dir: None };
    let (_, app) = app_with(Some(common::golden_graph()), &opts);
    let req = Request::get("/api/stats").header("origin", "http://localhost:5173").body(Body::empty()).unwrap();
    let r = send(&app, req).await;
    assert_eq!(r.headers.get("access-control-allow-origin").unwrap(), "http://localhost:5173");
    let r = get(&self::app(), "/api/stats").await;
    assert!(r.headers.get("access-control-allow-origin").is_none());
}
