use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use finembed::corpus::Passage;
use finembed::encoder::Role;
use finembed::index::{RankedHit, SearchFilter, SearchMode};
use finembed::store::{DocumentInfo, PassageMeta};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::highlight::{highlight, Highlight};
use crate::state::{AppState, Snapshot};

pub const MAX_K: usize = 100;
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Vector,
    Lexical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub filter: SearchFilter,
    #[serde(default)]
    pub highlight: bool,
}

fn default_k() -> usize {
    DEFAULT_K
}

impl SearchRequest {
    pub fn new(query: impl Into<String>, mode: Mode) -> Self {
        Self { query: query.into(), mode, k: DEFAULT_K, filter: SearchFilter::default(), highlight: false }
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        if self.query.trim().is_empty() {
            return Err(ApiError::BadRequest("query must be non-empty".into()));
        }
        if !(1..=MAX_K).contains(&self.k) {
            return Err(ApiError::BadRequest(format!("k must be in 1..={MAX_K}, got {}", self.k)));
        }
        self.filter.validate().map_err(|e| ApiError::BadRequest(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub passage_id: String,
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
    pub context_line: String,
    pub body: String,
    pub highlights: Vec<Highlight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<SearchHit>,
    pub latency_ms: f64,
    pub index_version: String,
}

/// A passage together with the metadata it inherits from its document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    #[serde(flatten)]
    pub passage: Passage,
    pub meta: PassageMeta,
    pub document: DocumentInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_version: String,
    pub vector_index_version: String,
    pub lexical_index_version: String,
    pub passages: usize,
}

#[derive(Debug, Deserialize)]
pub struct AutocompleteParams {
    #[serde(default)]
    pub prefix: String,
    #[serde(default = "default_k")]
    pub k: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("index not loaded")]
    NotReady,
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::NotReady => StatusCode::SERVICE_UNAVAILABLE,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

fn loaded(state: &AppState) -> Result<Arc<Snapshot>, ApiError> {
    state.snapshot().ok_or(ApiError::NotReady)
}

/// Runs a validated request against a snapshot. Hit order and scores are the
/// index's own; the service only attaches passage text and highlights.
pub fn execute(snap: &Snapshot, req: &SearchRequest) -> Result<Vec<SearchHit>, ApiError> {
    req.validate()?;
    let query_emb = (req.mode == Mode::Vector || req.highlight).then(|| snap.model.encode(&req.query, Role::Query));
    let hits: Vec<RankedHit> = match req.mode {
        Mode::Vector => snap.vector.knn(
            query_emb.as_ref().expect("encoded for vector mode"),
            req.k,
            &req.filter,
            SearchMode::Approximate,
        ),
        Mode::Lexical => snap.lexical.search(&req.query, req.k, &req.filter, snap.bm25),
    }
    .map_err(|e| ApiError::Internal(e.to_string()))?;

    hits.into_iter()
        .map(|h| {
            let p = snap
                .store
                .get(&h.passage_id)
                .ok_or_else(|| ApiError::Internal(format!("index refers to missing passage {}", h.passage_id)))?;
            let highlights = match &query_emb {
                Some(q) if req.highlight => highlight(&snap.model, q, p, snap.highlight),
                _ => Vec::new(),
            };
            Ok(SearchHit {
                passage_id: h.passage_id,
                doc_id: h.doc_id,
                score: h.score,
                rank: h.rank,
                context_line: p.context_line.clone(),
                body: p.body.clone(),
                highlights,
            })
        })
        .collect()
}

async fn search(
    State(state): State<AppState>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    req.validate()?;
    let snap = loaded(&state)?;
    let started = Instant::now();
    let hits = execute(&snap, &req)?;
    Ok(Json(SearchResponse {
        hits,
        latency_ms: started.elapsed().as_secs_f64() * 1e3,
        index_version: snap.index_version(),
    }))
}

async fn autocomplete(
    State(state): State<AppState>,
    Query(params): Query<AutocompleteParams>,
) -> Result<Json<Vec<String>>, ApiError> {
    let snap = loaded(&state)?;
    Ok(Json(snap.autocomplete.complete(&params.prefix, params.k.min(MAX_K))))
}

async fn passage(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<PassageRecord>, ApiError> {
    let snap = loaded(&state)?;
    let passage = snap.store.get(&id).ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let meta = snap.store.meta(&id).ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let document = snap
        .store
        .document(&passage.doc_id)
        .ok_or_else(|| ApiError::NotFound(passage.doc_id.clone()))?;
    Ok(Json(PassageRecord { passage: passage.clone(), meta, document: document.clone() }))
}

async fn health(State(state): State<AppState>) -> Result<Json<Health>, ApiError> {
    let snap = loaded(&state)?;
    Ok(Json(Health {
        status: "ok".into(),
        model_version: snap.model.version.clone(),
        vector_index_version: snap.vector.version().to_owned(),
        lexical_index_version: snap.lexical.version().to_owned(),
        passages: snap.store.len(),
    }))
}

/// One JSON object per handled request, appended to a file.
#[derive(Debug, Clone)]
pub struct RequestLog {
    file: Arc<Mutex<File>>,
}

impl RequestLog {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file: Arc::new(Mutex::new(file)) })
    }

    fn write(&self, entry: &serde_json::Value) {
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(f, "{entry}") {
            log::warn!("request log write failed: {e}");
        }
    }
}

async fn log_request(State(log): State<RequestLog>, req: Request, next: Next) -> Response {
    let method = req.method().to_string();
    let path = req.uri().path().to_owned();
    let query = req.uri().query().map(str::to_owned);
    let started = Instant::now();
    let response = next.run(req).await;
    log.write(&json!({
        "ts": chrono::Utc::now().to_rfc3339(),
        "method": method,
        "path": path,
        "query": query,
        "status": response.status().as_u16(),
        "latency_ms": started.elapsed().as_secs_f64() * 1e3,
    }));
    response
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(tower_http::cors::Any).allow_headers(tower_http::cors::Any);
    if origins.is_empty() {
        return layer.allow_origin(tower_http::cors::Any);
    }
    let list: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    layer.allow_origin(AllowOrigin::list(list))
}

/// The full HTTP API. `cors_origins` empty allows any origin.
pub fn router(state: AppState, cors_origins: &[String], request_log: Option<RequestLog>) -> Router {
    let mut app = Router::new()
        .route("/search", post(search))
        .route("/autocomplete", get(autocomplete))
        .route("/passages/{id}", get(passage))
        .route("/health", get(health))
        .with_state(state);
    if let Some(log) = request_log {
        app = app.layer(middleware::from_fn_with_state(log, log_request));
    }
    app.layer(cors(cors_origins))
}
