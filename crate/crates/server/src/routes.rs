use crate::api::ApiError;
use crate::state::AppState;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use critique_core::dataset::CritiqueRecord;
use critique_core::evalkit::{run_eval, AspectJudge, EvalConfig, FileLabels, LabelRecord, Layered, PreferenceSource};
use critique_core::{EvalReport, Query, QueryMode, Restaurant, Round, ScoredArgument, Session, SessionMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/restaurants", get(restaurants))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/critique", post(critique))
        .route("/interpret", post(interpret))
        .route("/search", post(search))
        .route("/eval/run", post(eval_run))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let text = if body.iter().all(u8::is_ascii_whitespace) { &b"{}"[..] } else { &body[..] };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_input(format!("request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker: {e}")))?
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    index: bool,
    candidates: usize,
    interpreter: bool,
}

async fn healthz(State(st): Shared) -> Json<Health> {
    Json(Health {
        status: "ok",
        index: st.index.is_some(),
        candidates: st.index.as_ref().map_or(0, |i| i.len()),
        interpreter: st.has_interpreter,
    })
}

async fn restaurants(State(st): Shared) -> ApiResult<Json<Vec<Restaurant>>> {
    let index = st.index.as_ref().ok_or_else(ApiError::no_index)?;
    Ok(Json(index.restaurants().cloned().collect()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    mode: String,
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
    mode: SessionMode,
    created_at: u64,
}

async fn create_session(State(st): Shared, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: NewSession = parse(&body)?;
    let mode: SessionMode = req.mode.parse().map_err(ApiError::bad_input)?;
    let engine = st.engine.as_ref().ok_or_else(ApiError::no_index)?;
    let s = engine.start_session(mode);
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: s.id,
            mode: s.mode,
            created_at: s.created_at,
        }),
    ))
}

async fn get_session(State(st): Shared, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let engine = st.engine.as_ref().ok_or_else(ApiError::no_index)?;
    engine
        .session(&id)
        .map(Json)
        .ok_or_else(|| ApiError::new(crate::api::ErrorCode::NotFound, format!("no session {id}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CritiqueRequest {
    text: String,
    k: Option<usize>,
}

async fn critique(State(st): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Round>> {
    let req: CritiqueRequest = parse(&body)?;
    let engine = st.engine.clone().ok_or_else(ApiError::no_index)?;
    let k = req.k.unwrap_or(st.k);
    blocking(move || Ok(engine.critique_round(&id, &req.text, k)?)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpretRequest {
    critique: String,
}

#[derive(Serialize)]
struct InterpretResponse {
    critique: String,
    preference: String,
    completions: Vec<String>,
    selected_index: usize,
    near_copy: bool,
}

async fn interpret(State(st): Shared, body: Bytes) -> ApiResult<Json<InterpretResponse>> {
    let req: InterpretRequest = parse(&body)?;
    let interp = st.interpreter.clone();
    let r = blocking(move || Ok(interp.transform(&req.critique)?)).await?;
    Ok(Json(InterpretResponse {
        critique: r.critique,
        preference: r.preference,
        completions: r.raw_completions,
        selected_index: r.selected_index,
        near_copy: r.near_copy,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchRequest {
    statement: String,
    #[serde(default = "default_mode")]
    mode: String,
    k: Option<usize>,
}

fn default_mode() -> String {
    "PREF".into()
}

#[derive(Serialize)]
struct SearchResponse {
    statement: String,
    mode: QueryMode,
    k: usize,
    arguments: Vec<ScoredArgument>,
}

async fn search(State(st): Shared, body: Bytes) -> ApiResult<Json<SearchResponse>> {
    let req: SearchRequest = parse(&body)?;
    let mode: QueryMode = req.mode.parse().map_err(ApiError::bad_input)?;
    if req.statement.trim().is_empty() {
        return Err(ApiError::bad_input("statement is empty"));
    }
    let k = req.k.unwrap_or(st.k);
    let index = st.index.clone().ok_or_else(ApiError::no_index)?;
    let embedder = st.embedder.clone();
    let statement = req.statement;
    let query = Query::statement(mode, statement.clone());
    let arguments = blocking(move || Ok(index.search(&query, embedder.as_ref(), k)?)).await?;
    Ok(Json(SearchResponse {
        statement,
        mode,
        k,
        arguments,
    }))
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalRequest {
    /// Merged over the server's eval defaults.
    config: serde_json::Map<String, serde_json::Value>,
    dataset: Option<Vec<CritiqueRecord>>,
    judge: Option<AspectJudge>,
    labels: Option<Vec<LabelRecord>>,
    /// Re-derive preferences with the eval interpreter instead of the dataset's.
    interpret: bool,
}

async fn eval_run(State(st): Shared, body: Bytes) -> ApiResult<Json<EvalReport>> {
    let req: EvalRequest = parse(&body)?;
    blocking(move || run_eval_request(&st, req)).await.map(Json)
}

fn run_eval_request(st: &AppState, req: EvalRequest) -> ApiResult<EvalReport> {
    let ev = &st.eval;
    let mut merged = serde_json::to_value(&ev.config).map_err(|e| ApiError::internal(e.to_string()))?;
    for (k, v) in req.config {
        merged[k] = v;
    }
    let config: EvalConfig = serde_json::from_value(merged).map_err(|e| ApiError::bad_input(format!("config: {e}")))?;

    let dataset = match (&req.dataset, &ev.dataset) {
        (Some(d), _) => d.as_slice(),
        (None, Some(d)) => d.as_slice(),
        (None, None) => return Err(ApiError::bad_input("no dataset given and none configured")),
    };
    if dataset.is_empty() {
        return Err(ApiError::bad_input("dataset is empty"));
    }
    critique_core::dataset::validate_records(dataset, "request").map_err(|e| ApiError::bad_input(e.to_string()))?;

    let mut labels = Layered::default();
    let mut agreement = Vec::new();
    if let Some(records) = req.labels {
        let inline = FileLabels::from_records(records).map_err(ApiError::bad_input)?;
        agreement = inline.agreement();
        labels = labels.push(inline);
    } else if let Some(file) = &ev.labels {
        agreement = file.agreement();
        labels = labels.push(file.clone());
    }
    match (req.judge, &ev.judge) {
        (Some(j), _) => labels = labels.push(j),
        (None, Some(j)) => labels = labels.push(j.clone()),
        (None, None) => {}
    }
    if labels.0.is_empty() {
        return Err(ApiError::bad_input("no labels or judge given and none configured"));
    }

    let index = ev.index.clone().or_else(|| st.index.clone()).ok_or_else(ApiError::no_index)?;
    let preferences = if req.interpret {
        let interp = ev
            .interpreter
            .as_deref()
            .ok_or_else(|| ApiError::bad_input("interpret requested but no eval provider is configured"))?;
        PreferenceSource::Interpreter(interp)
    } else {
        PreferenceSource::Dataset
    };
    Ok(run_eval(dataset, index, ev.embedder.clone(), &labels, preferences, agreement, &config, st.exec)?)
}
