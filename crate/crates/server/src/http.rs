//! JSON-over-HTTP binding of a single annotation session.
//!
//! | method | path               | body                        |
//! |--------|--------------------|-----------------------------|
//! | GET    | `/frame/{i}`       |                             |
//! | GET    | `/frame/{i}/image` |                             |
//! | POST   | `/click`           | `{"frame", "x", "y"}`       |
//! | POST   | `/clear`           | `{"frame"}`                 |
//! | POST   | `/refresh`         |                             |
//! | POST   | `/jump`            | `{"kind", ...}`             |
//! | GET    | `/sparklines`      |                             |
//! | GET    | `/timeline`        |                             |
//! | GET    | `/session`         |                             |
//! | GET    | `/events`          | server-sent events          |

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use trackmark_core::geom::Point;
use trackmark_core::session::{FrameView, RefreshSummary, SparklineView, TimelineView};
use trackmark_core::{Error, JumpKind, Session, SessionFile, VideoManifest};

/// Notification sent on the push channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PushEvent {
    RefreshCompleted { frames: usize, dirty: bool },
    RefreshFailed { error: String },
}

pub struct AppState {
    session: Mutex<Session>,
    refresh_gate: tokio::sync::Mutex<()>,
    manifest: Option<VideoManifest>,
    session_path: Option<PathBuf>,
    push: broadcast::Sender<PushEvent>,
}

impl AppState {
    pub fn new(session: Session, manifest: Option<VideoManifest>, session_path: Option<PathBuf>) -> Arc<Self> {
        let (push, _) = broadcast::channel(64);
        Arc::new(AppState {
            session: Mutex::new(session),
            refresh_gate: tokio::sync::Mutex::new(()),
            manifest,
            session_path,
            push,
        })
    }

    fn session(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<PushEvent> {
        self.push.subscribe()
    }

    pub fn snapshot(&self) -> SessionFile {
        self.session().file().clone()
    }

    fn persist(&self, session: &Session) -> Result<(), ApiError> {
        match &self.session_path {
            Some(path) => session.save(path).map_err(ApiError::from),
            None => Ok(()),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    error: &'a str,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::Range(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::Validation(_) | Error::Parse(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            Error::FeatureDisabled { .. } => (StatusCode::FORBIDDEN, "feature_disabled"),
            Error::EmptyAnnotations => (StatusCode::CONFLICT, "no_annotations"),
            Error::EmptyTrack => (StatusCode::CONFLICT, "no_track"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            error: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Deserialize)]
pub struct ClickRequest {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Deserialize)]
pub struct ClearRequest {
    pub frame: usize,
}

#[derive(Debug, Serialize)]
pub struct JumpResponse {
    pub frame: usize,
    pub view: FrameView,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/frame/{i}", get(get_frame))
        .route("/frame/{i}/image", get(get_frame_image))
        .route("/click", post(click))
        .route("/clear", post(clear))
        .route("/refresh", post(refresh))
        .route("/jump", post(jump))
        .route("/sparklines", get(sparklines))
        .route("/timeline", get(timeline))
        .route("/session", get(session))
        .route("/events", get(events))
        .with_state(state)
}

async fn get_frame(State(app): State<Arc<AppState>>, Path(i): Path<usize>) -> ApiResult<FrameView> {
    Ok(Json(app.session().frame_view(i)?))
}

async fn get_frame_image(State(app): State<Arc<AppState>>, Path(i): Path<usize>) -> Result<Response, ApiError> {
    let path = app
        .manifest
        .as_ref()
        .and_then(|m| m.frame_path(i))
        .ok_or_else(|| ApiError::from(Error::Range(format!("no image for frame {i}"))))?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::from(Error::Io { path, source: e }))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

async fn click(State(app): State<Arc<AppState>>, Json(req): Json<ClickRequest>) -> ApiResult<FrameView> {
    let mut s = app.session();
    let view = s.click(req.frame, Point { x: req.x, y: req.y })?;
    app.persist(&s)?;
    Ok(Json(view))
}

async fn clear(State(app): State<Arc<AppState>>, Json(req): Json<ClearRequest>) -> ApiResult<FrameView> {
    let mut s = app.session();
    let view = s.clear(req.frame)?;
    app.persist(&s)?;
    Ok(Json(view))
}

/// Runs the track refresh off the async workers. Reads keep being served
/// from the previous track while it runs; a second refresh is refused.
async fn refresh(State(app): State<Arc<AppState>>) -> ApiResult<RefreshSummary> {
    let Ok(_gate) = app.refresh_gate.try_lock() else {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            code: "refresh_in_progress",
            message: "a track refresh is already running".into(),
        });
    };
    let job = app.session().prepare_refresh()?;
    let (job, result) = tokio::task::spawn_blocking(move || {
        let result = job.run();
        (job, result)
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        code: "internal",
        message: e.to_string(),
    })?;
    let outcome = result.and_then(|track| {
        let mut s = app.session();
        let summary = s.complete_refresh(&job, track)?;
        if let Some(path) = &app.session_path {
            s.save(path)?;
        }
        Ok(summary)
    });
    let note = match &outcome {
        Ok(summary) => PushEvent::RefreshCompleted {
            frames: summary.track.len(),
            dirty: summary.dirty,
        },
        Err(e) => PushEvent::RefreshFailed { error: e.to_string() },
    };
    let _ = app.push.send(note);
    Ok(Json(outcome?))
}

async fn jump(State(app): State<Arc<AppState>>, Json(kind): Json<JumpKind>) -> ApiResult<JumpResponse> {
    let mut s = app.session();
    let frame = s.jump(kind)?;
    app.persist(&s)?;
    Ok(Json(JumpResponse {
        frame,
        view: s.frame_view(frame)?,
    }))
}

async fn sparklines(State(app): State<Arc<AppState>>) -> ApiResult<SparklineView> {
    Ok(Json(app.session().sparklines()?))
}

async fn timeline(State(app): State<Arc<AppState>>) -> ApiResult<TimelineView> {
    Ok(Json(app.session().timeline()?))
}

async fn session(State(app): State<Arc<AppState>>) -> ApiResult<SessionFile> {
    Ok(Json(app.snapshot()))
}

async fn events(State(app): State<Arc<AppState>>) -> Sse<impl Stream<Item = Result<SseEvent, Infallible>>> {
    let rx = app.subscribe();
    let stream = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => {
                    let data = serde_json::to_string(&ev).unwrap_or_default();
                    return Some((Ok(SseEvent::default().event("push").data(data)), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}
