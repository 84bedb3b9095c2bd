use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use super::MonitorService;
use crate::domain::{parse_readings, Demographics};
use crate::error::Error;
use crate::kv::{KvMap, KvRecord};

type Shared = Arc<MonitorService>;

pub fn status_for(err: &Error) -> StatusCode {
    match err {
        Error::UnknownPatient(_) => StatusCode::NOT_FOUND,
        Error::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
        Error::DuplicatePatient(_) => StatusCode::CONFLICT,
        Error::Io(_) | Error::ModelFormat(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_for(&self.0), format!("error={}\n", self.0)).into_response()
    }
}

type ApiResult = Result<(StatusCode, String), ApiError>;

fn body_text(body: &Bytes) -> Result<&str, Error> {
    std::str::from_utf8(body).map_err(|_| Error::Parse("body is not UTF-8".into()))
}

async fn register(State(svc): State<Shared>, body: Bytes) -> ApiResult {
    let map = KvMap::parse(body_text(&body)?)?;
    let id: String = map.get("patient_id")?;
    let d = Demographics::read_kv(&map)?;
    svc.register(&id, d)?;
    Ok((StatusCode::CREATED, format!("patient_id={id}\n")))
}

async fn readings(State(svc): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let batch = parse_readings(body_text(&body)?)?;
    let svc2 = svc.clone();
    let accepted = tokio::task::spawn_blocking(move || svc2.ingest(&id, &batch))
        .await
        .map_err(|e| Error::Parse(format!("ingest task failed: {e}")))??;
    Ok((StatusCode::OK, format!("accepted={accepted}\n")))
}

async fn current(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult {
    Ok((StatusCode::OK, svc.query_current(&id)?.to_kv()))
}

async fn forecast(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult {
    Ok((StatusCode::OK, svc.query_forecast(&id)?.to_kv()))
}

async fn activity(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult {
    Ok((StatusCode::OK, svc.query_activity(&id)?.to_kv()))
}

fn range_param(q: &HashMap<String, String>, key: &str, default: usize) -> Result<usize, Error> {
    match q.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Parse(format!("{key} must be a non-negative integer, got {v:?}"))),
    }
}

async fn history(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let snap = svc.snapshot(&id)?;
    let from = range_param(&q, "from", 0)?;
    let to = range_param(&q, "to", snap.timeline.len())?;
    Ok((StatusCode::OK, snap.timeline.slice(from, to)?.to_csv()))
}

pub fn router(service: Arc<MonitorService>) -> Router {
    Router::new()
        .route("/api/v1/patients", post(register))
        .route("/api/v1/patients/{id}/readings", post(readings))
        .route("/api/v1/patients/{id}/vitals/current", get(current))
        .route("/api/v1/patients/{id}/forecast", get(forecast))
        .route("/api/v1/patients/{id}/activity", get(activity))
        .route("/api/v1/patients/{id}/history", get(history))
        .with_state(service)
}

/// Serves until the future returned by `shutdown` resolves.
pub async fn serve(
    service: Arc<MonitorService>,
    addr: SocketAddr,
    ready: impl FnOnce(SocketAddr),
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    ready(listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}
