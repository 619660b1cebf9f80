//! HTTP JSON routes and the server-sent event stream.

use std::convert::Infallible;
use std::net::SocketAddr;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::config::SessionConfig;
use crate::manager::{SavedRecording, ServiceError, SessionManager, StreamFrame};
use crate::session::SessionSnapshot;

/// Error body shared by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.to_owned(), message: message.into() } }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::InvalidConfig(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::SourceUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidPhase(_) => StatusCode::CONFLICT,
            ServiceError::Io(_) | ServiceError::SessionGone(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyRequest {
    pub key: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyAccepted {
    pub t_ms: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AbortRequest {
    #[serde(default)]
    pub reason: Option<String>,
}

pub fn router(manager: SessionManager) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(snapshot))
        .route("/sessions/{id}/start", post(start))
        .route("/sessions/{id}/keys", post(key))
        .route("/sessions/{id}/finish", post(finish))
        .route("/sessions/{id}/abort", post(abort))
        .route("/sessions/{id}/stream", get(stream))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(manager)
}

/// Serves the API on `addr` until Ctrl-C.
pub async fn serve(addr: SocketAddr, manager: SessionManager) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(manager))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn create(
    State(m): State<SessionManager>,
    body: Result<Json<serde_json::Value>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(mut body) = body?;
    if let (Some(obj), Some(source)) = (body.as_object_mut(), m.default_source()) {
        if !obj.contains_key("source") {
            obj.insert("source".into(), serde_json::to_value(source).expect("source serializes"));
        }
    }
    let config: SessionConfig = serde_json::from_value(body).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", format!("invalid session config: {e}"))
    })?;
    let id = m.create(config).await?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn list(State(m): State<SessionManager>) -> Json<Vec<String>> {
    Json(m.session_ids())
}

async fn snapshot(State(m): State<SessionManager>, Path(id): Path<String>) -> ApiResult<SessionSnapshot> {
    Ok(Json(m.snapshot(&id).await?))
}

async fn start(State(m): State<SessionManager>, Path(id): Path<String>) -> ApiResult<SessionSnapshot> {
    Ok(Json(m.start(&id).await?))
}

async fn key(
    State(m): State<SessionManager>,
    Path(id): Path<String>,
    body: Result<Json<KeyRequest>, JsonRejection>,
) -> ApiResult<KeyAccepted> {
    let Json(req) = body?;
    Ok(Json(KeyAccepted { t_ms: m.key(&id, req.key).await? }))
}

async fn finish(State(m): State<SessionManager>, Path(id): Path<String>) -> ApiResult<SavedRecording> {
    Ok(Json(m.finish(&id).await?))
}

async fn abort(
    State(m): State<SessionManager>,
    Path(id): Path<String>,
    body: Option<Json<AbortRequest>>,
) -> ApiResult<SessionSnapshot> {
    let reason = body.and_then(|Json(b)| b.reason).unwrap_or_else(|| "aborted by client".into());
    Ok(Json(m.abort(&id, reason).await?))
}

async fn stream(
    State(m): State<SessionManager>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = m.subscribe(&id).await?;
    Ok(Sse::new(frames(rx)).keep_alive(KeepAlive::default()))
}

fn frames(rx: broadcast::Receiver<StreamFrame>) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(frame) => {
                    let event = Event::default().event("frame").json_data(&frame).expect("frames serialize");
                    return Some((Ok(event), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
}
