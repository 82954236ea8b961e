//! JSON HTTP API consumed by the browser front end.

use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use slopesim_core::agent::{AgentKind, ChatSession, Upload};
use slopesim_core::emit::TargetProfile;
use slopesim_core::kb::KbDocument;
use slopesim_core::model::Target;

use crate::error::{classify, ErrorPayload};
use crate::state::AppState;

pub type Shared = Arc<AppState>;

/// An error response: the uniform payload plus its HTTP status.
#[derive(Debug)]
pub struct ApiError(pub ErrorPayload);

pub fn status_for(code: &str) -> StatusCode {
    match code {
        "UNKNOWN_SESSION" | "UNKNOWN_ARTIFACT" | "UNKNOWN_DOCUMENT" | "NOT_FOUND" => {
            StatusCode::NOT_FOUND
        }
        "UPLOAD_TOO_LARGE" => StatusCode::PAYLOAD_TOO_LARGE,
        "UNSUPPORTED_MEDIA_TYPE" => StatusCode::UNSUPPORTED_MEDIA_TYPE,
        "DUPLICATE_DOCUMENT" | "SESSION_EXISTS" => StatusCode::CONFLICT,
        "BACKEND_UNAVAILABLE" => StatusCode::BAD_GATEWAY,
        "IO_ERROR" | "SESSION_ERROR" | "KB_ERROR" | "ERROR" | "INTERNAL" => {
            StatusCode::INTERNAL_SERVER_ERROR
        }
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_for(&self.0.code), Json(self.0)).into_response()
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        ApiError(classify(&e))
    }
}

fn api_err(code: &str, message: impl Into<String>) -> ApiError {
    ApiError(ErrorPayload::new(code, message))
}

fn classified<E: std::error::Error + Send + Sync + 'static>(e: E) -> ApiError {
    ApiError(classify(&anyhow::Error::new(e)))
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses a JSON body so that malformed input gets the uniform error shape.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    let bytes: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        bytes
    };
    serde_json::from_slice(bytes).map_err(|e| api_err("BAD_REQUEST", format!("request body: {e}")))
}

pub fn router(state: Shared) -> Router {
    // base64 inflates attachments by a third; the per-file limit is checked
    // after decoding
    let body_limit = state.config.upload_limit_bytes / 3 * 4 * 2 + (1 << 20);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/agents", get(agents))
        .route("/api/targets", get(targets))
        .route("/api/sessions", get(list_sessions).post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/messages", post(post_message))
        .route("/api/artifacts/{id}", get(get_artifact))
        .route(
            "/api/kb/documents",
            get(list_documents).post(ingest_document),
        )
        .route("/api/kb/documents/{id}", delete(delete_document))
        .route("/api/kb/search", post(search))
        .fallback(|| async { api_err("NOT_FOUND", "no such route") })
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

async fn health(State(s): State<Shared>) -> Json<Value> {
    let kb = s.orchestrator.kb().read().expect("kb lock poisoned");
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "backend": s.orchestrator.backend_id(),
        "kb_documents": kb.document_ids().len(),
        "kb_chunks": kb.chunk_count(),
    }))
}

async fn agents() -> Json<Value> {
    let list: Vec<Value> = AgentKind::ALL
        .iter()
        .map(|a| json!({"id": a.as_str(), "label": a.label()}))
        .collect();
    Json(json!({ "agents": list }))
}

async fn targets() -> Json<Value> {
    let mut list: Vec<Value> = TargetProfile::all()
        .into_iter()
        .map(|p| json!({"id": p.profile_id, "grammar_version": p.grammar_version, "capabilities": p.capabilities}))
        .collect();
    list.push(json!({"id": Target::None, "grammar_version": null, "capabilities": null}));
    Json(json!({ "targets": list }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    agent: Option<String>,
    target: Option<String>,
}

/// Session metadata without the transcript.
#[derive(Debug, Serialize)]
struct SessionSummary<'a> {
    session_id: &'a str,
    agent: AgentKind,
    target: Target,
    messages: usize,
    artifacts: usize,
}

fn summary(s: &ChatSession) -> SessionSummary<'_> {
    SessionSummary {
        session_id: &s.session_id,
        agent: s.agent,
        target: s.target,
        messages: s.transcript.len(),
        artifacts: s.artifacts.len(),
    }
}

async fn create_session(State(s): State<Shared>, raw: Bytes) -> ApiResult<Response> {
    let req: CreateSession = body(&raw)?;
    let agent = match req.agent.as_deref() {
        None => AgentKind::SlopeStability,
        Some(a) => AgentKind::parse(a)
            .ok_or_else(|| api_err("UNKNOWN_AGENT", format!("unknown agent `{a}`")).at("agent"))?,
    };
    let target = match req.target.as_deref() {
        None => Target::HyrcanProfile,
        Some(t) => Target::parse(t).ok_or_else(|| {
            api_err("UNKNOWN_PROFILE", format!("unknown target `{t}`")).at("target")
        })?,
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let state = s.clone();
    let session =
        tokio::task::spawn_blocking(move || state.orchestrator.create_session(&id, agent, target))
            .await
            .map_err(|e| api_err("INTERNAL", e.to_string()))?
            .map_err(classified)?;
    let out = serde_json::to_value(summary(&session)).expect("summary serializes");
    s.insert(session);
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

impl ApiError {
    fn at(mut self, field: &str) -> Self {
        self.0.field_path = Some(field.to_string());
        self
    }
}

async fn list_sessions(State(s): State<Shared>) -> ApiResult<Json<Value>> {
    let ids = s.orchestrator.session_ids().map_err(classified)?;
    Ok(Json(json!({ "sessions": ids })))
}

async fn get_session(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let handle = s.session(&id).map_err(classified)?;
    let session = handle.lock().expect("session poisoned");
    Ok(Json(
        serde_json::to_value(&*session).expect("session serializes"),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttachmentIn {
    filename: String,
    media_type: String,
    /// Standard base64.
    data: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostMessage {
    #[serde(default)]
    text: String,
    #[serde(default)]
    attachments: Vec<AttachmentIn>,
}

fn decode_uploads(s: &AppState, attachments: Vec<AttachmentIn>) -> ApiResult<Vec<Upload>> {
    let limit = s.config.upload_limit_bytes;
    attachments
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let field = format!("attachments[{i}]");
            if !s.config.media_type_allowed(&a.media_type) {
                return Err(api_err(
                    "UNSUPPORTED_MEDIA_TYPE",
                    format!("media type `{}` is not accepted", a.media_type),
                )
                .at(&format!("{field}.media_type")));
            }
            // cheap bound before decoding
            if a.data.len() / 4 * 3 > limit + 3 {
                return Err(too_large(&field, limit));
            }
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(a.data.trim())
                .map_err(|e| {
                    api_err("BAD_REQUEST", format!("attachment data is not base64: {e}"))
                        .at(&format!("{field}.data"))
                })?;
            if bytes.len() > limit {
                return Err(too_large(&field, limit));
            }
            Ok(Upload {
                filename: a.filename,
                media_type: a.media_type,
                bytes,
            })
        })
        .collect()
}

fn too_large(field: &str, limit: usize) -> ApiError {
    api_err(
        "UPLOAD_TOO_LARGE",
        format!("attachment exceeds the {limit}-byte limit"),
    )
    .at(field)
}

async fn post_message(
    State(s): State<Shared>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Json<Value>> {
    let handle = s.session(&id).map_err(classified)?;
    let req: PostMessage = body(&raw)?;
    let uploads = decode_uploads(&s, req.attachments)?;
    if req.text.trim().is_empty() && uploads.is_empty() {
        return Err(api_err("BAD_REQUEST", "a message needs text or an attachment").at("text"));
    }
    let state = s.clone();
    let out = tokio::task::spawn_blocking(move || {
        let mut session = handle.lock().expect("session poisoned");
        let before = session.artifacts.len();
        let reply = state
            .orchestrator
            .handle_turn(&mut session, &req.text, uploads)?;
        let artifacts = session.artifacts[before..].to_vec();
        Ok::<_, anyhow::Error>(json!({
            "message": reply,
            "artifacts": artifacts,
            "session": summary(&session),
        }))
    })
    .await
    .map_err(|e| api_err("INTERNAL", e.to_string()))??;
    Ok(Json(out))
}

async fn get_artifact(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let (artifact, bytes) = s
        .orchestrator
        .artifacts()
        .artifact(&id)
        .ok_or_else(|| api_err("UNKNOWN_ARTIFACT", format!("no artifact `{id}`")))?;
    let filename = artifact
        .path
        .rsplit('/')
        .next()
        .unwrap_or(&artifact.path)
        .to_string();
    Ok((
        [
            (header::CONTENT_TYPE, artifact.media_type),
            (
                header::CONTENT_DISPOSITION,
                format!("inline; filename=\"{filename}\""),
            ),
            (header::ETAG, format!("\"{}\"", artifact.content_hash)),
        ],
        Body::from(bytes),
    )
        .into_response())
}

async fn list_documents(State(s): State<Shared>) -> Json<Value> {
    let kb = s.orchestrator.kb().read().expect("kb lock poisoned");
    let docs: Vec<Value> = kb
        .document_ids()
        .iter()
        .filter_map(|id| kb.document(id))
        .map(|d| {
            json!({
                "doc_id": d.doc_id,
                "title": d.title,
                "source_path": d.source_path,
                "tags": d.tags,
                "chunks": kb.chunks(&d.doc_id).len(),
            })
        })
        .collect();
    Json(json!({ "documents": docs, "meta": kb.meta() }))
}

async fn ingest_document(State(s): State<Shared>, raw: Bytes) -> ApiResult<Response> {
    let doc: KbDocument = body(&raw)?;
    let doc_id = doc.doc_id.clone();
    let state = s.clone();
    let chunks = tokio::task::spawn_blocking(move || {
        let mut kb = state.orchestrator.kb().write().expect("kb lock poisoned");
        kb.ingest(doc, state.embedder.as_ref())
    })
    .await
    .map_err(|e| api_err("INTERNAL", e.to_string()))?
    .map_err(classified)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({"doc_id": doc_id, "chunks": chunks})),
    )
        .into_response())
}

async fn delete_document(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let mut kb = s.orchestrator.kb().write().expect("kb lock poisoned");
    if kb.document(&id).is_none() {
        return Err(api_err("UNKNOWN_DOCUMENT", format!("no document `{id}`")));
    }
    let removed = kb.delete(&id).map_err(classified)?;
    Ok(Json(json!({"doc_id": id, "chunks_removed": removed})))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchRequest {
    query: String,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    5
}

async fn search(State(s): State<Shared>, raw: Bytes) -> ApiResult<Json<Value>> {
    let req: SearchRequest = body(&raw)?;
    let kb = s.orchestrator.kb().read().expect("kb lock poisoned");
    let hits = kb
        .search(&req.query, req.k, s.embedder.as_ref())
        .map_err(classified)?;
    Ok(Json(json!({ "hits": hits })))
}
