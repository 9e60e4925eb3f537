//! HTTP interface over [`SessionStore`].
//!
//! Library errors come back as `400 {"error": <name>, "detail": <message>}`;
//! unknown sessions as `404 {"error": "unknown-session"}`.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use rtb_core::assessment::{QueryLevel, RtbQuery, RtbReport};
use rtb_core::model::{detect_colliders, CausalNetwork, Collider};
use rtb_core::{Error, Evidence, PosteriorDistribution};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::info;
use uuid::Uuid;

use crate::session::{DecisionEntry, DecisionRequest, Session, SessionHandle, SessionStore};
use crate::surface;

#[derive(Debug)]
pub enum ApiError {
    Library(Error),
    UnknownSession(String),
    UnknownModel(String),
    BadRequest(String),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Library(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, name, detail) = match self {
            ApiError::Library(e) => (StatusCode::BAD_REQUEST, e.name(), e.to_string()),
            ApiError::UnknownSession(id) => (StatusCode::NOT_FOUND, "unknown-session", format!("no session `{id}`")),
            ApiError::UnknownModel(m) => (StatusCode::NOT_FOUND, "unknown-model", format!("no model named `{m}`")),
            ApiError::BadRequest(detail) => (StatusCode::BAD_REQUEST, "malformed-query", detail),
        };
        (status, Json(json!({ "error": name, "detail": detail }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

pub type AppState = Arc<SessionStore>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_summary))
        .route("/sessions/{id}/evidence", post(post_evidence))
        .route("/sessions/{id}/evidence/{variable}", delete(delete_evidence))
        .route("/sessions/{id}/posterior", get(get_posterior))
        .route("/sessions/{id}/rtb", post(post_rtb))
        .route("/sessions/{id}/decision", post(post_decision))
        .route("/sessions/{id}/log", get(get_log))
        .with_state(store)
}

fn lookup(store: &SessionStore, id: &str) -> ApiResult<SessionHandle> {
    Uuid::parse_str(id)
        .ok()
        .and_then(|uuid| store.get(&uuid))
        .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
}

#[derive(Debug, Serialize)]
pub struct ModelInfo<'a> {
    pub name: &'a str,
    pub network: &'a CausalNetwork,
    pub colliders: Vec<Collider>,
}

async fn list_models(State(store): State<AppState>) -> Json<Vec<serde_json::Value>> {
    let models = store
        .models()
        .map(|net| {
            serde_json::to_value(ModelInfo {
                name: net.name(),
                network: net,
                colliders: detect_colliders(net),
            })
            .expect("model info serializes")
        })
        .collect();
    Json(models)
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    model: String,
}

async fn create_session(
    State(store): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(body) = body?;
    let handle = store
        .create(&body.model)
        .ok_or(ApiError::UnknownModel(body.model.clone()))?;
    let session = handle.read().await;
    store.persist(&session)?;
    info!(session = %session.id(), model = %body.model, "session created");
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session_id": session.id(), "model": body.model })),
    ))
}

/// Evidence plus the current R-T-B report, if the session has a question.
#[derive(Debug, Serialize)]
struct SessionView<'a> {
    session_id: Uuid,
    model: &'a str,
    evidence: &'a Evidence,
    report: Option<RtbReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report_error: Option<&'static str>,
}

fn view(session: &Session) -> SessionView<'_> {
    let (report, report_error) = match session.current_report() {
        None => (None, None),
        Some(Ok(r)) => (Some(r), None),
        Some(Err(e)) => (None, Some(e.name())),
    };
    SessionView {
        session_id: session.id(),
        model: session.model().name(),
        evidence: session.evidence(),
        report,
        report_error,
    }
}

async fn session_summary(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let handle = lookup(&store, &id)?;
    let session = handle.read().await;
    Ok(Json(view(&session)).into_response())
}

#[derive(Debug, Deserialize)]
struct PostEvidence {
    variable: String,
    state: String,
}

async fn post_evidence(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PostEvidence>, JsonRejection>,
) -> ApiResult<Response> {
    let handle = lookup(&store, &id)?;
    let Json(body) = body?;
    let mut session = handle.write().await;
    session.set_evidence(&body.variable, &body.state)?;
    store.persist(&session)?;
    Ok(Json(view(&session)).into_response())
}

async fn delete_evidence(
    State(store): State<AppState>,
    Path((id, variable)): Path<(String, String)>,
) -> ApiResult<Response> {
    let handle = lookup(&store, &id)?;
    let mut session = handle.write().await;
    session.retract_evidence(&variable)?;
    store.persist(&session)?;
    Ok(Json(view(&session)).into_response())
}

#[derive(Debug, Deserialize)]
struct PosteriorParams {
    target: String,
    level: Option<String>,
    #[serde(rename = "do")]
    interventions: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PosteriorResponse {
    pub target: String,
    pub level: &'static str,
    pub states: indexmap::IndexMap<String, f64>,
}

impl PosteriorResponse {
    fn new(posterior: PosteriorDistribution, level: QueryLevel) -> Self {
        PosteriorResponse {
            target: posterior.target,
            level: level.short_name(),
            states: posterior.probabilities,
        }
    }
}

async fn get_posterior(
    State(store): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<PosteriorParams>, QueryRejection>,
) -> ApiResult<Json<PosteriorResponse>> {
    let handle = lookup(&store, &id)?;
    let Query(params) = params?;
    let level: QueryLevel = params.level.as_deref().unwrap_or("assoc").parse()?;
    let interventions = surface::parse_assignments(params.interventions.as_deref().unwrap_or(""), ':')?;
    let session = handle.read().await;
    let posterior = session.posterior(&params.target, level, &interventions)?;
    Ok(Json(PosteriorResponse::new(posterior, level)))
}

#[derive(Debug, Deserialize)]
struct PostRtb {
    query: RtbQuery,
}

async fn post_rtb(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PostRtb>, JsonRejection>,
) -> ApiResult<Json<RtbReport>> {
    let handle = lookup(&store, &id)?;
    let Json(body) = body?;
    let mut session = handle.write().await;
    let report = session.ask(body.query)?;
    store.persist(&session)?;
    Ok(Json(report))
}

async fn post_decision(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, JsonRejection>,
) -> ApiResult<Json<DecisionEntry>> {
    let handle = lookup(&store, &id)?;
    let Json(body) = body?;
    let mut session = handle.write().await;
    let entry = session.decide(body)?.clone();
    store.persist(&session)?;
    info!(
        session = %session.id(),
        seq = entry.seq,
        recommendation = %entry.recommendation,
        overridden = entry.overridden,
        "decision logged"
    );
    Ok(Json(entry))
}

async fn get_log(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<DecisionEntry>>> {
    let handle = lookup(&store, &id)?;
    let session = handle.read().await;
    Ok(Json(session.log().to_vec()))
}
