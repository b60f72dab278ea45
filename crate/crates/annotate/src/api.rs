//! HTTP JSON endpoints.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/api/tasks/next?annotator_id=A` | | `{"task": TaskPayload or null}` |
//! | POST | `/api/annotations` | `{"task_id", "annotator_id", "codes": ["2d"], "note"}` | 201 `{"status": "stored", "annotation"}`, 200 `{"status": "duplicate", "annotation"}`, 409 `{"error", "stored"}`, 400/404 `{"error"}` |
//! | POST | `/api/tasks/{task_id}/skip` | `{"annotator_id"}` | `{"task_id", "status"}` |
//! | GET | `/api/progress?annotator_id=A` | | `SessionState` |
//! | GET | `/api/export` | | annotation JSON lines, unblinded, in submission order |
//! | GET | `/api/codes` | | `[{"code", "label", "class", "description"}]` |
//!
//! When a token is configured every `/api` request needs
//! `Authorization: Bearer <token>`.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use govaudit_core::evalkit::{CodeClass, CodeLabel};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::session::{Session, SubmitOutcome};
use crate::AnnotateError;

/// Environment variable holding the shared bearer token.
pub const TOKEN_ENV: &str = "GOVAUDIT_ANNOTATE_TOKEN";

const PLACEHOLDER_UI: &str = "<!doctype html>\n<title>Annotation service</title>\n<p>No UI bundle configured. The JSON API is served under <code>/api</code>.</p>\n";

pub struct AppState {
    pub session: Mutex<Session>,
    pub token: Option<String>,
}

impl AppState {
    pub fn new(session: Session, token: Option<String>) -> Arc<Self> {
        Arc::new(AppState {
            session: Mutex::new(session),
            token: token.filter(|t| !t.is_empty()),
        })
    }

    fn session(&self) -> std::sync::MutexGuard<'_, Session> {
        // A panic while holding the lock leaves the log intact; keep serving.
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl IntoResponse for AnnotateError {
    fn into_response(self) -> Response {
        let status = match &self {
            AnnotateError::UnknownTask(_) => StatusCode::NOT_FOUND,
            AnnotateError::InvalidCode(_) | AnnotateError::Input(_) => StatusCode::BAD_REQUEST,
            AnnotateError::Conflict(stored) => {
                return (
                    StatusCode::CONFLICT,
                    Json(json!({"error": "conflicting resubmission", "stored": stored})),
                )
                    .into_response()
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.to_string()}))).into_response()
    }
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator_id: String,
}

#[derive(Deserialize)]
struct SubmitBody {
    task_id: String,
    annotator_id: String,
    #[serde(default)]
    codes: Vec<String>,
    #[serde(default)]
    note: String,
}

#[derive(Deserialize)]
struct SkipBody {
    annotator_id: String,
}

#[derive(Serialize)]
struct CodeInfo {
    code: &'static str,
    label: &'static str,
    class: CodeClass,
    description: &'static str,
}

async fn next_task(State(s): State<Arc<AppState>>, Query(q): Query<AnnotatorQuery>) -> Response {
    if q.annotator_id.trim().is_empty() {
        return AnnotateError::Input("annotator_id is required".into()).into_response();
    }
    let task = s.session().next_task(&q.annotator_id);
    Json(json!({ "task": task })).into_response()
}

async fn submit(State(s): State<Arc<AppState>>, Json(b): Json<SubmitBody>) -> Result<Response, AnnotateError> {
    let out = s.session().submit(&b.task_id, &b.annotator_id, &b.codes, &b.note)?;
    Ok(match out {
        SubmitOutcome::Stored(a) => (StatusCode::CREATED, Json(json!({"status": "stored", "annotation": a}))).into_response(),
        SubmitOutcome::Duplicate(a) => Json(json!({"status": "duplicate", "annotation": a})).into_response(),
    })
}

async fn skip(State(s): State<Arc<AppState>>, Path(task_id): Path<String>, Json(b): Json<SkipBody>) -> Result<Response, AnnotateError> {
    let status = s.session().skip(&task_id, &b.annotator_id)?;
    Ok(Json(json!({"task_id": task_id, "status": status})).into_response())
}

async fn progress(State(s): State<Arc<AppState>>, Query(q): Query<AnnotatorQuery>) -> Response {
    Json(s.session().progress(&q.annotator_id)).into_response()
}

async fn export(State(s): State<Arc<AppState>>) -> Result<Response, AnnotateError> {
    let mut body = String::new();
    for a in s.session().export() {
        body.push_str(&serde_json::to_string(&a).map_err(std::io::Error::from)?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn codes() -> Json<Vec<CodeInfo>> {
    Json(
        CodeLabel::ALL
            .iter()
            .map(|c| CodeInfo {
                code: c.as_str(),
                label: c.display_label(),
                class: c.class(),
                description: c.description(),
            })
            .collect(),
    )
}

async fn require_token(State(s): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &s.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return (StatusCode::UNAUTHORIZED, Json(json!({"error": "missing or wrong bearer token"}))).into_response();
        }
    }
    next.run(req).await
}

/// Routes for the API, plus the UI bundle in `ui_dir` (or a placeholder page) at `/`.
pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/tasks/next", get(next_task))
        .route("/tasks/:task_id/skip", post(skip))
        .route("/annotations", post(submit))
        .route("/progress", get(progress))
        .route("/export", get(export))
        .route("/codes", get(codes))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER_UI) })),
    }
}
