//! HTTP scoring and moderation service.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tripwire_core::{Label, LinearModel};

use crate::config::ServiceConfig;
use crate::highlight::{score_text, Feature};
use crate::model_file::load_model;
use crate::queue::{FlaggedItem, ListQuery, ModerationQueue, QueueError, Status};

pub const BODY_LIMIT: usize = 64 * 1024;
pub const BATCH_BODY_LIMIT: usize = 4 * 1024 * 1024;
pub const TOKEN_HEADER: &str = "x-tripwire-token";

pub struct AppState {
    model: RwLock<Arc<LinearModel>>,
    model_path: Option<PathBuf>,
    queue: Mutex<ModerationQueue>,
    threshold: f64,
    token: Option<String>,
    top_k: usize,
}

impl AppState {
    pub fn new(model: LinearModel, queue: ModerationQueue, config: &ServiceConfig) -> Self {
        AppState {
            model: RwLock::new(Arc::new(model)),
            model_path: config.model.clone(),
            queue: Mutex::new(queue),
            threshold: config.threshold,
            token: config.token.clone(),
            top_k: config.top_k,
        }
    }

    pub fn model(&self) -> Arc<LinearModel> {
        self.model.read().expect("model lock").clone()
    }

    /// Swaps in a new model; requests already running keep the old one.
    pub fn replace_model(&self, model: LinearModel) {
        *self.model.write().expect("model lock") = Arc::new(model);
    }

    fn queue(&self) -> std::sync::MutexGuard<'_, ModerationQueue> {
        self.queue.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<QueueError> for ApiError {
    fn from(e: QueueError) -> Self {
        match e {
            QueueError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            QueueError::Conflict(item) => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": format!("item {} is already {}", item.item_id, item.status), "item": item }),
            },
            QueueError::Invalid(_) => ApiError::new(StatusCode::BAD_REQUEST, e.to_string()),
            QueueError::Corrupt { .. } | QueueError::Io(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
        }
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}")))
}

#[derive(Deserialize)]
struct ScoreRequest {
    text: Option<String>,
    author: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ScoreResponse {
    pub label: Label,
    pub score: f64,
    pub low_confidence: bool,
    pub normalized: String,
    pub top_features: Vec<Feature>,
    pub flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
}

fn score_one(state: &AppState, model: &LinearModel, text: &str, author: Option<&str>) -> Result<ScoreResponse, ApiError> {
    let scored = score_text(model, text, state.top_k);
    let flagged = scored.prediction.score > state.threshold;
    let item_id = if flagged {
        Some(state.queue().enqueue(text, author, &scored)?.item_id)
    } else {
        None
    };
    let prediction = scored.prediction;
    Ok(ScoreResponse {
        label: prediction.label,
        score: prediction.score,
        low_confidence: prediction.low_confidence,
        normalized: scored.normalized,
        top_features: scored.top_features,
        flagged,
        item_id,
    })
}

async fn score(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<ScoreResponse>, ApiError> {
    let req: ScoreRequest = parse_body(&body)?;
    let text = req.text.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing field \"text\""))?;
    let model = state.model();
    Ok(Json(score_one(&state, &model, &text, req.author.as_deref())?))
}

#[derive(Deserialize)]
struct BatchRequest {
    texts: Option<Vec<String>>,
}

async fn score_batch(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let req: BatchRequest = parse_body(&body)?;
    let texts = req.texts.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing field \"texts\""))?;
    let model = state.model();
    let results = texts
        .iter()
        .map(|t| score_one(&state, &model, t, None))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(json!({ "results": results })))
}

#[derive(Deserialize)]
struct QueueParams {
    status: Option<String>,
    min_score: Option<f64>,
    page: Option<usize>,
    page_size: Option<usize>,
}

async fn list_queue(
    State(state): State<Arc<AppState>>,
    Query(params): Query<QueueParams>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let status = match params.status.as_deref() {
        None => Some(Status::Pending),
        Some("all") => None,
        Some(s) => Some(s.parse::<Status>()?),
    };
    let defaults = ListQuery::default();
    let query = ListQuery {
        status,
        min_score: params.min_score,
        page: params.page.unwrap_or(defaults.page),
        page_size: params.page_size.unwrap_or(defaults.page_size).min(1000),
    };
    let queue = state.queue();
    let page = queue.list(&query);
    Ok(Json(json!({
        "items": page.items,
        "page": page.page,
        "page_size": page.page_size,
        "total": page.total,
        "pending": queue.pending(),
    })))
}

async fn get_item(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<FlaggedItem>, ApiError> {
    let queue = state.queue();
    let item = queue.get(&id).ok_or(QueueError::NotFound(id))?;
    Ok(Json(item.clone()))
}

#[derive(Deserialize)]
struct ReviewRequest {
    decision: Option<String>,
    reviewer: Option<String>,
}

async fn review(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FlaggedItem>, ApiError> {
    let req: ReviewRequest = parse_body(&body)?;
    let decision = req.decision.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing field \"decision\""))?;
    let reviewer = req.reviewer.unwrap_or_default();
    Ok(Json(state.queue().review(&id, &decision, &reviewer)?))
}

async fn export(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let csv = state.queue().export_csv();
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv)
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let features = state.model().vocabulary().len();
    let queue = state.queue();
    Json(json!({ "status": "ok", "features": features, "queued": queue.len(), "pending": queue.pending() }))
}

async fn reload(State(state): State<Arc<AppState>>) -> Result<Json<serde_json::Value>, ApiError> {
    let path = state
        .model_path
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "service was started without a model path"))?;
    let model = tokio::task::spawn_blocking(move || load_model(path))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let features = model.vocabulary().len();
    state.replace_model(model);
    Ok(Json(json!({ "status": "reloaded", "features": features })))
}

fn same_secret(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn presented_token(headers: &HeaderMap) -> Option<&str> {
    if let Some(v) = headers.get(TOKEN_HEADER) {
        return v.to_str().ok();
    }
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

async fn require_token(State(state): State<Arc<AppState>>, request: Request, next: Next) -> Response {
    if let Some(expected) = &state.token {
        let ok = presented_token(request.headers()).is_some_and(|t| same_secret(t.as_bytes(), expected.as_bytes()));
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "missing or wrong token").into_response();
        }
    }
    next.run(request).await
}

pub fn router(state: Arc<AppState>) -> Router {
    let protected = Router::new()
        .route("/score", post(score))
        .route("/score/batch", post(score_batch).layer(DefaultBodyLimit::max(BATCH_BODY_LIMIT)))
        .route("/queue", get(list_queue))
        .route("/queue/{id}", get(get_item))
        .route("/queue/{id}/review", post(review))
        .route("/export", get(export))
        .route("/reload", post(reload))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/healthz", get(healthz))
        .merge(protected)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
}

/// Loads the model, replays the queue log and serves until interrupted.
/// Prints `listening on <addr>` once the socket is bound.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let path = config.model.clone().context("no model configured (use --model or the model key)")?;
    let model = load_model(&path).with_context(|| format!("loading model {}", path.display()))?;
    let queue = ModerationQueue::open(&config.log).with_context(|| format!("opening queue log {}", config.log.display()))?;
    let state = Arc::new(AppState::new(model, queue, &config));
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .with_context(|| format!("binding {}", config.bind))?;
    let addr: SocketAddr = listener.local_addr()?;
    println!("listening on {addr}");
    use std::io::Write as _;
    std::io::stdout().flush()?;
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown_signal()).await?;
    Ok(())
}
