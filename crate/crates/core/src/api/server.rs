use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use super::{handle_read, handle_recommend, ApiResponse, AppState, ReadRoute, OPENAPI, VERSION_HEADER};

pub const PORT_ENV: &str = "MODELSELECT_PORT";
pub const DATA_DIR_ENV: &str = "MODELSELECT_DATA_DIR";
pub const CORS_ENV: &str = "MODELSELECT_CORS_ORIGIN";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    /// Allowed browser origin; `*` allows any.
    pub cors_origin: Option<String>,
    /// Static UI assets served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
}

impl IntoResponse for ApiResponse {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut resp = (status, axum::Json(self.body)).into_response();
        if let Some(v) = self.version.and_then(|v| HeaderValue::from_str(&v).ok()) {
            resp.headers_mut().insert(VERSION_HEADER, v);
        }
        resp
    }
}

type Shared = State<Arc<AppState>>;

async fn recommend(State(s): Shared, body: Bytes) -> ApiResponse {
    handle_recommend(&s, &body)
}

async fn search(State(s): Shared, Query(q): Query<HashMap<String, String>>) -> ApiResponse {
    let route = ReadRoute::Search { q: q.get("q").cloned().unwrap_or_default(), k: q.get("k").cloned() };
    handle_read(&s, &route)
}

async fn model(State(s): Shared, Path(id): Path<String>) -> ApiResponse {
    handle_read(&s, &ReadRoute::Model(id))
}

async fn library(State(s): Shared, Path(name): Path<String>) -> ApiResponse {
    handle_read(&s, &ReadRoute::Library(name))
}

async fn subgraph(State(s): Shared, Path(id): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResponse {
    handle_read(&s, &ReadRoute::Graph { id, depth: q.get("depth").cloned() })
}

async fn stats(State(s): Shared) -> ApiResponse {
    handle_read(&s, &ReadRoute::Stats)
}

async fn spec() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI)
}

pub fn router(state: Arc<AppState>, opts: &ServerOptions) -> Router {
    let mut app = Router::new()
        .route("/api/recommend", post(recommend))
        .route("/api/search", get(search))
        .route("/api/models/{id}", get(model))
        .route("/api/libraries/{name}", get(library))
        .route("/api/graph/{id}", get(subgraph))
        .route("/api/stats", get(stats))
        .route("/api/spec", get(spec))
        .with_state(state);
    if let Some(dir) = &opts.ui_dir {
        app = app.nest_service("/ui", ServeDir::new(dir));
    }
    if let Some(origin) = &opts.cors_origin {
        let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any).expose_headers([header::HeaderName::from_static(VERSION_HEADER)]);
        let cors = if origin == "*" {
            cors.allow_origin(Any)
        } else {
            match HeaderValue::from_str(origin) {
                Ok(v) => cors.allow_origin(v),
                Err(_) => {
                    tracing::warn!(%origin, "ignoring invalid CORS origin");
                    cors
                }
            }
        };
        app = app.layer(cors);
    }
    app
}

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr, opts: ServerOptions) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state, &opts))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
