//! HTTP/JSON service over [`decremental`]: one-shot workload runs, instance
//! generation, and long-lived sessions that take deletions and queries.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use decremental::api::*;
use decremental::graph::{Edge, INF};
use decremental::io::{parse_graph, parse_trace, ParseError};
use decremental::workload::{self, Session, WorkloadError};
use serde::Deserialize;
use tokio::net::TcpListener;

#[derive(Default)]
pub struct AppState {
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), line: None } }
    }

    fn parse(what: &str, e: ParseError) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, body: ErrorBody { error: format!("{what} {e}"), line: Some(e.line) } }
    }
}

impl From<WorkloadError> for ApiError {
    fn from(e: WorkloadError) -> Self {
        match e {
            WorkloadError::Script(p) => ApiError::parse("script", p),
            WorkloadError::Violation { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
            e => ApiError::new(StatusCode::BAD_REQUEST, e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router() -> Router {
    router_with(Arc::new(AppState::default()))
}

pub fn router_with(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/run", post(run))
        .route("/generate", post(generate))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(stats).delete(drop_session))
        .route("/sessions/{id}/delete", post(delete_edge))
        .route("/sessions/{id}/apsp", get(apsp))
        .route("/sessions/{id}/path", get(path))
        .route("/sessions/{id}/sssp", get(sssp))
        .route("/sessions/{id}/check", post(check))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}

/// Serves on an ephemeral local port in the background.
pub async fn spawn_local() -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move { axum::serve(listener, router()).await });
    Ok(addr)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn run(Json(req): Json<RunRequest>) -> ApiResult<RunResponse> {
    blocking(move || {
        let graph = parse_graph(&req.graph).map_err(|e| ApiError::parse("graph", e))?;
        let trace = req.trace.as_deref().map(parse_trace).transpose().map_err(|e| ApiError::parse("trace", e))?;
        let report = workload::run(&graph, trace.as_deref(), req.script.as_deref(), &req.params)?;
        Ok(RunResponse { report })
    })
    .await
}

async fn generate(Json(req): Json<GenerateRequest>) -> ApiResult<GenerateResponse> {
    blocking(move || {
        let (graph, trace) = workload::gen(req.seed, req.n, req.m, req.trace_len)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        Ok(GenerateResponse { graph, trace })
    })
    .await
}

async fn create_session(State(st): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult<SessionInfo> {
    blocking(move || {
        let graph = parse_graph(&req.graph).map_err(|e| ApiError::parse("graph", e))?;
        let session = Session::new(&graph, req.params)?;
        let id = st.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        st.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(session)));
        Ok(SessionInfo { id, n: graph.n, m: graph.edges.len() })
    })
    .await
}

fn session(st: &AppState, id: u64) -> Result<Arc<Mutex<Session>>, ApiError> {
    st.sessions
        .lock()
        .unwrap()
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
}

async fn with_session<T: Send + 'static>(
    st: Arc<AppState>,
    id: u64,
    f: impl FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
) -> ApiResult<T> {
    let s = session(&st, id)?;
    blocking(move || f(&mut s.lock().unwrap())).await
}

async fn drop_session(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> Result<StatusCode, ApiError> {
    match st.sessions.lock().unwrap().remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}"))),
    }
}

async fn stats(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<StatsReply> {
    with_session(st, id, |s| Ok(s.aggregate())).await
}

async fn delete_edge(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    Json(req): Json<DeleteRequest>,
) -> ApiResult<DeleteResponse> {
    with_session(st, id, move |s| {
        let r = s.delete(Edge::new(req.u, req.v))?;
        Ok(DeleteResponse { stage: r.stage, applied_to_star: r.applied_to_star, skipped: r.skipped })
    })
    .await
}

#[derive(Deserialize)]
struct Pair {
    u: usize,
    v: usize,
}

#[derive(Deserialize)]
struct Target {
    v: usize,
}

async fn apsp(State(st): State<Arc<AppState>>, Path(id): Path<u64>, Query(q): Query<Pair>) -> ApiResult<ApspAnswer> {
    with_session(st, id, move |s| {
        let d = s.query_apsp(q.u, q.v)?;
        Ok(ApspAnswer { u: q.u, v: q.v, distance: (d != INF).then_some(d) })
    })
    .await
}

async fn path(State(st): State<Arc<AppState>>, Path(id): Path<u64>, Query(q): Query<Pair>) -> ApiResult<PathAnswer> {
    with_session(st, id, move |s| Ok(PathAnswer { path: s.query_path(q.u, q.v)? })).await
}

async fn sssp(State(st): State<Arc<AppState>>, Path(id): Path<u64>, Query(q): Query<Target>) -> ApiResult<SsspReply> {
    with_session(st, id, move |s| {
        let a = s.query_sssp(q.v)?;
        Ok(SsspReply { v: q.v, answer: a.to_string(), value: a.as_f64() })
    })
    .await
}

async fn check(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<CheckReply> {
    with_session(st, id, |s| {
        let c = s.check();
        Ok(CheckReply {
            stage: c.stage,
            properties: c.properties,
            violations: c.violations.into_iter().map(|(property, detail)| Violation { property, detail }).collect(),
            apsp_stretch: c.apsp_stretch,
            sssp_stretch: c.sssp_stretch,
        })
    })
    .await
}
