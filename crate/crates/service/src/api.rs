//! HTTP routes under `/v1`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use critiq_core::analyzers::RuleConfig;
use critiq_core::perspectives::{CritiqueMode, CritiqueProvider, ProviderError};
use critiq_core::remediation::RemediationError;
use critiq_core::{serialize_document, DesignContext, DesignDocument};

use crate::session::{document_from_request, Session, SessionError};
use crate::store::{Store, StoreError};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub provider: Arc<dyn CritiqueProvider>,
    pub rules: Arc<RuleConfig>,
}

impl AppState {
    pub fn new(store: Store, provider: Arc<dyn CritiqueProvider>, rules: RuleConfig) -> Self {
        AppState {
            store: Arc::new(store),
            provider,
            rules: Arc::new(rules),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "session_not_found", e.to_string())
            }
            other => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "storage",
                other.to_string(),
            ),
        }
    }
}

fn provider_status(e: &ProviderError) -> StatusCode {
    match e {
        ProviderError::Timeout(_) => StatusCode::GATEWAY_TIMEOUT,
        _ => StatusCode::BAD_GATEWAY,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            SessionError::Document(_) => (StatusCode::BAD_REQUEST, "invalid_document"),
            SessionError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            SessionError::UnknownIssue(_) => (StatusCode::NOT_FOUND, "issue_not_found"),
            SessionError::UnknownPatch(_) => (StatusCode::NOT_FOUND, "patch_not_found"),
            SessionError::Remediation(r) => match r {
                RemediationError::EmptyHistory => (StatusCode::CONFLICT, "nothing_to_undo"),
                RemediationError::Precondition(_) | RemediationError::Unfixable(_) => {
                    (StatusCode::CONFLICT, "not_fixable")
                }
                RemediationError::InvalidOp { .. } | RemediationError::EmptyPatch(_) => {
                    (StatusCode::UNPROCESSABLE_ENTITY, "invalid_patch")
                }
            },
            SessionError::Panel(_) => (StatusCode::BAD_GATEWAY, "panel_failed"),
            SessionError::Dangling(_) => (StatusCode::BAD_GATEWAY, "dangling_node"),
            SessionError::Provider { source, .. } => (provider_status(source), "provider_failed"),
        };
        ApiError::new(status, code, message)
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn document_response(doc: &DesignDocument) -> Value {
    serde_json::from_str(&serialize_document(doc)).expect("document text is JSON")
}

/// Runs blocking session work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

/// Applies `op` to a copy of the session under its write lock and commits
/// the copy once it is persisted. Provider failures still commit, so the
/// user's chat turn is never lost.
fn mutate<T>(
    state: &AppState,
    id: &str,
    op: impl FnOnce(&mut Session) -> Result<T, SessionError>,
) -> ApiResult<T> {
    let handle = state.store.get(id)?;
    let mut guard = handle.write().expect("session lock");
    let mut next = guard.clone();
    let result = op(&mut next);
    if result.is_ok() || matches!(result, Err(SessionError::Provider { .. })) {
        state.store.persist(&next)?;
        *guard = next;
    }
    Ok(result?)
}

fn read<T>(
    state: &AppState,
    id: &str,
    op: impl FnOnce(&Session) -> Result<T, SessionError>,
) -> ApiResult<T> {
    let handle = state.store.get(id)?;
    let guard = handle.read().expect("session lock");
    Ok(op(&guard)?)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/agenda", get(get_agenda))
        .route("/v1/sessions/{id}/issues/{issue_id}", get(get_issue))
        .route(
            "/v1/sessions/{id}/issues/{issue_id}/remediations",
            get(get_remediations),
        )
        .route("/v1/sessions/{id}/chat", post(post_chat))
        .route(
            "/v1/sessions/{id}/patches/{patch_id}/preview",
            post(preview),
        )
        .route("/v1/sessions/{id}/patches/{patch_id}/apply", post(apply))
        .route("/v1/sessions/{id}/undo", post(undo))
        .route("/v1/sessions/{id}/document", get(get_document))
        .route("/v1/sessions/{id}/export", get(export))
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(json!({"status": "ok", "provider": state.provider.name(), "sessions": state.store.len()}))
}

#[derive(Deserialize)]
struct CreateRequest {
    document: Value,
    #[serde(default)]
    context: Option<Value>,
    #[serde(default)]
    mode: Option<String>,
}

async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let req = body(payload)?;
    let document = document_from_request(&req.document)?;
    let context: DesignContext = match req.context {
        None | Some(Value::Null) => DesignContext::default(),
        Some(v) => serde_json::from_value(v)
            .map_err(|e| SessionError::BadRequest(format!("invalid context: {e}")))?,
    };
    let mode: CritiqueMode = match req.mode.as_deref() {
        None => CritiqueMode::MultiPerspective,
        Some(m) => m.parse().map_err(SessionError::BadRequest)?,
    };
    blocking(move || {
        let session = Session::create(document, context, mode, state.provider.as_ref())?;
        let reply = json!({
            "sessionId": session.session_id,
            "agenda": session.agenda,
            "degraded_roles": session.agenda.degraded_roles,
        });
        state.store.insert(session)?;
        Ok((StatusCode::CREATED, Json(reply)))
    })
    .await
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    read(&state, &id, |s| Ok(json_text(s.to_canonical_json())))
}

async fn get_agenda(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    read(&state, &id, |s| {
        Ok(Json(
            serde_json::to_value(&s.agenda).expect("agenda serializes"),
        ))
    })
}

async fn get_issue(
    State(state): State<AppState>,
    Path((id, issue_id)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    read(&state, &id, |s| {
        let issue = s.issue(&issue_id)?;
        let item = s
            .agenda
            .items
            .iter()
            .find(|i| i.issue_ids.contains(&issue.issue_id));
        Ok(Json(json!({
            "issue": issue,
            "bounds": s.issue_bounds(issue),
            "agendaItem": item.map(|i| &i.title),
        })))
    })
}

async fn get_remediations(
    State(state): State<AppState>,
    Path((id, issue_id)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    blocking(move || {
        let rules = state.rules.clone();
        let options = mutate(&state, &id, |s| s.remediations(&issue_id, &rules))?;
        Ok(Json(
            serde_json::to_value(options).expect("options serialize"),
        ))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ChatBody {
    text: String,
    #[serde(default)]
    referenced_issue_id: Option<String>,
}

async fn post_chat(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ChatBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let req = body(payload)?;
    blocking(move || {
        let provider = state.provider.clone();
        let turn = mutate(&state, &id, |s| {
            s.chat(&req.text, req.referenced_issue_id, provider.as_ref())
        })?;
        Ok(Json(serde_json::to_value(turn).expect("turn serializes")))
    })
    .await
}

async fn preview(
    State(state): State<AppState>,
    Path((id, patch_id)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    read(&state, &id, |s| {
        Ok(Json(
            json!({"document": document_response(&s.preview(&patch_id)?)}),
        ))
    })
}

async fn apply(
    State(state): State<AppState>,
    Path((id, patch_id)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    blocking(move || {
        mutate(&state, &id, |s| {
            s.apply(&patch_id)?;
            Ok(Json(json!({"document": document_response(&s.document), "historyLength": s.history.len()})))
        })
    })
    .await
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    blocking(move || {
        mutate(&state, &id, |s| {
            s.undo()?;
            Ok(Json(json!({"document": document_response(&s.document), "historyLength": s.history.len()})))
        })
    })
    .await
}

async fn get_document(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    read(&state, &id, |s| {
        Ok(json_text(serialize_document(&s.document)))
    })
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    read(&state, &id, |s| {
        match q.format.as_deref().unwrap_or("report") {
            "report" => Ok(json_text(s.report().to_json())),
            "document" => Ok(json_text(serialize_document(&s.document))),
            other => Err(SessionError::BadRequest(format!(
                "unknown export format {other:?}, expected report or document"
            ))),
        }
    })
}
