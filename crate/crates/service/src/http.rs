use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::store::{StoreError, VoteStore};

#[derive(Debug, Deserialize)]
pub struct WorkerQuery {
    pub worker_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoteRequest {
    pub assignment_id: String,
    pub worker_id: String,
    /// Kept as a plain integer so out-of-range values reach the store and
    /// come back as `BadChoice`.
    pub choice: i64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

struct ApiError(StoreError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            StoreError::UnknownWorker(_) | StoreError::UnknownAssignment(_) => StatusCode::NOT_FOUND,
            StoreError::AlreadyVoted(_) => StatusCode::CONFLICT,
            StoreError::NotYourAssignment { .. } => StatusCode::FORBIDDEN,
            StoreError::BadChoice(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody {
            error: self.0.code().to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError(e)
    }
}

type Shared = Arc<VoteStore>;

async fn task(State(store): State<Shared>, Query(q): Query<WorkerQuery>) -> Result<Response, ApiError> {
    Ok(Json(store.next_task(&q.worker_id)?).into_response())
}

async fn progress(State(store): State<Shared>, Query(q): Query<WorkerQuery>) -> Result<Response, ApiError> {
    Ok(Json(store.progress(&q.worker_id)?).into_response())
}

async fn vote(State(store): State<Shared>, Json(req): Json<VoteRequest>) -> Result<Response, ApiError> {
    // the append syncs to disk, keep it off the async workers
    let ack = tokio::task::spawn_blocking(move || store.submit_vote(&req.assignment_id, &req.worker_id, req.choice))
        .await
        .map_err(|e| {
            ApiError(StoreError::Io {
                path: PathBuf::new(),
                source: std::io::Error::other(e.to_string()),
            })
        })??;
    Ok(Json(ack).into_response())
}

async fn healthz() -> &'static str {
    "ok"
}

/// API routes, plus static files from `static_dir` for everything else.
pub fn router(store: Arc<VoteStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/task", get(task))
        .route("/api/progress", get(progress))
        .route("/api/vote", post(vote))
        .route("/healthz", get(healthz))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until the process is stopped. `on_bound` receives the actual
/// address (useful with port 0).
pub async fn serve(
    store: Arc<VoteStore>,
    static_dir: Option<PathBuf>,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(store, static_dir)).await
}
