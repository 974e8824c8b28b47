use std::collections::VecDeque;
use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use qbench_core::scene::{builtin_scene, Scene, BUILTIN_SCENES};
use qbench_core::{Error, ErrorKind};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::watch;

use crate::session::{Command, Session, SessionState, StreamEvent};
use crate::store::{SessionHandle, SessionStore};

pub type AppState = Arc<SessionStore>;

/// Error body: `{"error": {"code", "message"}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: format!("no session {id:?}"),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "validation",
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Reference => StatusCode::NOT_FOUND,
            ErrorKind::Validation | ErrorKind::InsufficientData => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            code: e.kind().code(),
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::validation(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/api/v1/scenes", get(list_scenes))
        .route("/api/v1/scenes/{name}", get(get_scene))
        .route("/api/v1/sessions", post(create_session))
        .route(
            "/api/v1/sessions/{id}",
            get(get_state).delete(delete_session),
        )
        .route(
            "/api/v1/sessions/{id}/components/{component}",
            patch(set_param),
        )
        .route("/api/v1/sessions/{id}/fire", post(fire))
        .route("/api/v1/sessions/{id}/events", get(stream_events))
        .route("/api/v1/sessions/{id}/log", get(get_log))
        .with_state(store)
}

#[derive(Serialize)]
struct SceneEntry {
    name: &'static str,
    description: &'static str,
}

async fn list_scenes() -> Json<Vec<SceneEntry>> {
    Json(
        BUILTIN_SCENES
            .iter()
            .map(|&(name, description)| SceneEntry { name, description })
            .collect(),
    )
}

async fn get_scene(Path(name): Path<String>) -> ApiResult<Json<Scene>> {
    Ok(Json(builtin_scene(&name)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    /// Builtin scene name.
    #[serde(default)]
    pub scene: Option<String>,
    /// Full scene document, instead of a name.
    #[serde(default)]
    pub document: Option<Value>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn handle(store: &SessionStore, id: &str) -> ApiResult<Arc<SessionHandle>> {
    store.get(id).ok_or_else(|| ApiError::not_found(id))
}

/// Runs session work off the async threads; shots can take a while.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        code: "internal",
        message: e.to_string(),
    })?
}

async fn create_session(
    State(store): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionState>)> {
    let Json(req) = body?;
    let scene = match (req.scene, req.document) {
        (Some(name), None) => builtin_scene(&name)?,
        (None, Some(doc)) => {
            let text = serde_json::to_string(&doc).expect("value serializes");
            qbench_core::scene::load_scene(&text)?
        }
        _ => {
            return Err(ApiError::validation(
                "give exactly one of \"scene\" or \"document\"",
            ))
        }
    };
    let seed = req.seed.unwrap_or_else(qbench_core::rng::random_seed);
    let state = blocking(move || {
        let session = Session::new(SessionStore::new_id(), scene, seed, &store.config)?;
        let state = session.state();
        store.insert(session);
        Ok(state)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn get_state(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionState>> {
    let h = handle(&store, &id)?;
    let state = h.lock().state();
    Ok(Json(state))
}

async fn delete_session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    if store.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(&id))
    }
}

async fn get_log(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<crate::session::SessionLog>> {
    let h = handle(&store, &id)?;
    let log = h.lock().log();
    Ok(Json(log))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchRequest {
    pub param: String,
    pub value: Value,
    #[serde(default)]
    pub interactive: bool,
}

async fn set_param(
    State(store): State<AppState>,
    Path((id, component)): Path<(String, String)>,
    body: Result<Json<PatchRequest>, JsonRejection>,
) -> ApiResult<Json<SessionState>> {
    let Json(req) = body?;
    let h = handle(&store, &id)?;
    let state = blocking(move || {
        let mut s = h.lock();
        s.apply(&Command::SetParam {
            component,
            param: req.param,
            value: req.value,
            interactive: req.interactive,
        })?;
        h.publish(s.sequence());
        Ok(s.state())
    })
    .await?;
    Ok(Json(state))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FireRequest {
    #[serde(default = "one")]
    pub shots: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FireAccepted {
    pub shots: u64,
    pub first_sequence: u64,
    pub last_sequence: u64,
}

async fn fire(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FireRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<FireAccepted>)> {
    let Json(req) = body?;
    let h = handle(&store, &id)?;
    let accepted = blocking(move || {
        let mut s = h.lock();
        let range = s.apply(&Command::Fire { shots: req.shots })?;
        h.publish(s.sequence());
        Ok(FireAccepted {
            shots: req.shots,
            first_sequence: range.start,
            last_sequence: range.end - 1,
        })
    })
    .await?;
    Ok((StatusCode::ACCEPTED, Json(accepted)))
}

#[derive(Debug, Deserialize)]
pub struct StreamQuery {
    /// Last sequence number already seen.
    pub from: Option<u64>,
}

pub fn sse_event(e: &StreamEvent) -> SseEvent {
    SseEvent::default()
        .id(e.seq.to_string())
        .event(e.body.type_name())
        .data(serde_json::to_string(e).expect("events serialize"))
}

struct Cursor {
    handle: Arc<SessionHandle>,
    rx: watch::Receiver<u64>,
    last: u64,
    buf: VecDeque<StreamEvent>,
}

/// Ordered events with sequence numbers above `from`; waits for new ones
/// and ends when the session goes away.
pub fn event_stream(handle: Arc<SessionHandle>, from: u64) -> impl Stream<Item = StreamEvent> {
    let rx = handle.subscribe();
    let cursor = Cursor {
        handle,
        rx,
        last: from,
        buf: VecDeque::new(),
    };
    stream::unfold(cursor, |mut c| async move {
        loop {
            if let Some(e) = c.buf.pop_front() {
                return Some((e, c));
            }
            if c.handle.is_closed() {
                return None;
            }
            c.rx.borrow_and_update();
            {
                let s = c.handle.lock();
                c.buf.extend(s.events_after(c.last).iter().cloned());
            }
            if let Some(e) = c.buf.back() {
                c.last = e.seq;
                continue;
            }
            if c.rx.changed().await.is_err() {
                return None;
            }
        }
    })
}

async fn stream_events(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>> {
    let h = handle(&store, &id)?;
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok());
    let from = q.from.or(resume).unwrap_or(0);
    use futures::StreamExt;
    let events = event_stream(h, from).map(|e| Ok(sse_event(&e)));
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}
