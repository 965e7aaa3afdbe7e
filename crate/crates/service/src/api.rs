//! JSON routes over a [`Store`].

use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use implicheck::crucial::{inspect_closure, max_intent_questions};
use implicheck::implications::merge_by_premise;
use implicheck::io::{self, Format};
use implicheck::session::{Mode, NamedLiteral, Origin, Question, Session, SessionConfig, Status, Verdict};
use implicheck::{canonical_base_within, CandidateObject, Error, FormalContext};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::{BaseJob, ContextMeta, Store, StoreError, StoredContext};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// Time budget for canonical-base computations.
    pub base_budget: Duration,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        AppState {
            store: Arc::new(store),
            base_budget: Duration::from_secs(60),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/contexts", post(create_context))
        .route("/contexts/{id}", get(get_context))
        .route("/contexts/{id}/history", get(context_history))
        .route("/contexts/{id}/sessions", post(open_session))
        .route("/contexts/{id}/base", get(get_base))
        .route("/contexts/{id}/inspect", post(inspect))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/log", get(session_log))
        .route("/sessions/{id}/answers", post(post_answer))
        .route("/sessions/{id}/commit", post(commit))
        .route("/sessions/{id}/rebase", post(rebase))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl std::fmt::Display) -> Self {
        ApiError {
            status,
            body: json!({ "error": code, "message": message.to_string() }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Parse { line, column, .. } => ApiError {
                status: StatusCode::BAD_REQUEST,
                body: json!({ "error": "parse", "message": message, "line": line, "column": column }),
            },
            Error::WidthMismatch { .. }
            | Error::DuplicateAttribute(_)
            | Error::NameCollision(_)
            | Error::Shape(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid-context", message),
            Error::UnknownAttribute(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown-attribute", message),
            Error::DuplicateObject(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "duplicate-object", message),
            Error::BudgetExceeded { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "budget-exceeded", message),
            Error::UnknownQuestion(_) => ApiError::new(StatusCode::CONFLICT, "stale-question", message),
            Error::AlreadyAnswered(_) => ApiError::new(StatusCode::CONFLICT, "duplicate-answer", message),
            Error::WrongState { .. } => ApiError::new(StatusCode::CONFLICT, "wrong-state", message),
            Error::RoundCap(_) => ApiError::new(StatusCode::CONFLICT, "aborted", message),
            Error::Log(_) | Error::Io(_) | Error::Json(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { .. } => ApiError::new(StatusCode::NOT_FOUND, "not-found", e),
            StoreError::RebaseRequired { ref head } => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": "rebase-required", "message": e.to_string(), "head": head }),
            },
            StoreError::Core(e) => e.into(),
            StoreError::Io(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Serialize)]
pub struct ContextView {
    pub id: String,
    pub lineage: String,
    pub version: u64,
    pub parent: Option<String>,
    pub objects: usize,
    pub attributes: usize,
}

impl ContextView {
    fn of(stored: &StoredContext) -> Self {
        let ContextMeta {
            id,
            lineage,
            version,
            parent,
        } = stored.meta.clone();
        ContextView {
            id,
            lineage,
            version,
            parent,
            objects: stored.context.num_objects(),
            attributes: stored.context.num_attributes(),
        }
    }
}

/// What a client needs to draw one question.
#[derive(Debug, Serialize)]
pub struct QuestionCard {
    pub id: String,
    pub text: String,
    pub premise: Vec<NamedLiteral>,
    pub conclusion: Vec<NamedLiteral>,
    pub support_objects: Vec<String>,
    pub origin: Origin,
    pub badge: Option<&'static str>,
    pub status: Status,
    pub round: usize,
}

impl QuestionCard {
    fn of(q: &Question) -> Self {
        QuestionCard {
            id: q.id.clone(),
            text: q.text.clone(),
            premise: q.premise.clone(),
            conclusion: q.conclusion.clone(),
            support_objects: q.support_objects.clone(),
            origin: q.origin,
            badge: q.origin.badge(),
            status: q.status,
            round: q.round,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub id: String,
    pub context_id: String,
    pub state: &'static str,
    pub round: usize,
    /// Number of log records; pass it back as `expected_version`.
    pub version: usize,
    pub object: String,
    pub intent: Vec<String>,
    pub mode: Mode,
    pub complement: bool,
    pub questions: Vec<QuestionCard>,
    pub answered: usize,
    pub diagnostic: Option<String>,
}

impl SessionView {
    fn of(id: &str, context_id: &str, session: &Session) -> Self {
        let questions = session
            .next_questions()
            .map(|qs| qs.into_iter().map(QuestionCard::of).collect())
            .unwrap_or_default();
        SessionView {
            id: id.to_owned(),
            context_id: context_id.to_owned(),
            state: session.state().as_str(),
            round: session.round(),
            version: session.log().len(),
            object: session.candidate().name.clone(),
            intent: session.intent_names(),
            mode: session.config().mode,
            complement: session.config().use_complement,
            questions,
            answered: session.answers().len(),
            diagnostic: session.diagnostic().map(str::to_owned),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct FormatQuery {
    pub format: Option<String>,
}

fn bad_format(e: String) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "bad-format", e)
}

async fn create_context(
    State(state): State<AppState>,
    Query(query): Query<FormatQuery>,
    body: String,
) -> ApiResult<(StatusCode, Json<ContextView>)> {
    if body.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty-body", "request body is empty"));
    }
    let format = match query.format {
        Some(f) => f.parse::<Format>().map_err(bad_format)?,
        None => Format::sniff(&body),
    };
    let context = io::parse(&body, format)?;
    let stored = state.store.create_context(context)?;
    Ok((StatusCode::CREATED, Json(ContextView::of(&stored))))
}

fn wants_json(headers: &HeaderMap, query: &FormatQuery) -> bool {
    match query.format.as_deref() {
        Some(f) => f.eq_ignore_ascii_case("json"),
        None => headers
            .get(header::ACCEPT)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.contains("application/json")),
    }
}

async fn get_context(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<FormatQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let stored = state.store.context(&id)?;
    let ctx = &stored.context;
    if wants_json(&headers, &query) {
        let rows: Vec<String> = ctx.rows().iter().map(|r| r.to_cross_row()).collect();
        return Ok(Json(json!({
            "id": stored.meta.id,
            "lineage": stored.meta.lineage,
            "version": stored.meta.version,
            "objects": ctx.object_names(),
            "attributes": ctx.attribute_names(),
            "rows": rows,
        }))
        .into_response());
    }
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], io::write_cxt(ctx)).into_response())
}

async fn context_history(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ContextMeta>>> {
    Ok(Json(state.store.history(&id)?))
}

#[derive(Debug, Deserialize)]
pub struct OpenSessionRequest {
    pub object: String,
    pub attributes: Vec<String>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub complement: bool,
}

fn default_mode() -> Mode {
    Mode::Closure
}

async fn open_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<OpenSessionRequest>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let stored = state.store.context(&id)?;
    let intent = stored.context.attribute_set(&req.attributes)?;
    let config = SessionConfig {
        mode: req.mode,
        use_complement: req.complement,
        base_budget_ms: Some(state.base_budget.as_millis() as u64),
    };
    let candidate = CandidateObject {
        name: req.object,
        intent,
    };
    let store = state.store.clone();
    let (session_id, session) =
        tokio::task::spawn_blocking(move || store.open_session(&id, candidate, config))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))??;
    let view = SessionView::of(&session_id, &stored.meta.id, &session);
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let (context_id, session) = state.store.session(&id)?;
    Ok(Json(SessionView::of(&id, &context_id, &session)))
}

async fn session_log(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let (_, session) = state.store.session(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], session.log_jsonl()).into_response())
}

#[derive(Debug, Deserialize)]
pub struct AnswerRequest {
    pub question_id: String,
    pub verdict: Verdict,
    /// Rejects the answer when the session moved on since this version.
    #[serde(default)]
    pub expected_version: Option<usize>,
}

async fn post_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> ApiResult<Json<SessionView>> {
    let mut stale = None;
    let outcome = state.store.update_session(&id, |session| {
        if let Some(expected) = req.expected_version {
            if expected != session.log().len() {
                stale = Some(session.log().len());
                return Ok(());
            }
        }
        session.answer(&req.question_id, req.verdict)
    });
    if let Some(current) = stale {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": "stale-version",
                "message": format!("session is at version {current}"),
                "version": current,
            }),
        });
    }
    let ((), context_id, session) = outcome?;
    Ok(Json(SessionView::of(&id, &context_id, &session)))
}

async fn commit(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<(StatusCode, Json<ContextView>)> {
    let stored = state.store.commit_session(&id)?;
    Ok((StatusCode::CREATED, Json(ContextView::of(&stored))))
}

async fn rebase(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let (context_id, session) = state.store.rebase_session(&id)?;
    Ok(Json(SessionView::of(&id, &context_id, &session)))
}

/// Starts the base computation in the background if needed and reports
/// where it stands.
fn poll_base(state: &AppState, stored: &StoredContext) -> BaseJob {
    let id = stored.meta.id.clone();
    if state.store.start_base_job(&id) {
        let store = state.store.clone();
        let ctx = stored.context.clone();
        let budget = state.base_budget;
        tokio::task::spawn_blocking(move || {
            let job = match canonical_base_within(&ctx, Some(budget)) {
                Ok(base) => BaseJob::Done(Arc::new(base)),
                Err(Error::BudgetExceeded { pseudo_intents, .. }) => BaseJob::BudgetExceeded { pseudo_intents },
                Err(_) => BaseJob::BudgetExceeded { pseudo_intents: 0 },
            };
            store.finish_base_job(&id, job);
        });
    }
    state.store.base_job(&stored.meta.id).expect("job was just recorded")
}

fn pending(state: &AppState, job: &BaseJob) -> Option<ApiError> {
    match job {
        BaseJob::Running { started } => Some(ApiError {
            status: StatusCode::ACCEPTED,
            body: json!({
                "status": "running",
                "elapsed_ms": started.elapsed().as_millis() as u64,
                "budget_ms": state.base_budget.as_millis() as u64,
            }),
        }),
        BaseJob::BudgetExceeded { pseudo_intents } => Some(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({
                "error": "budget-exceeded",
                "message": format!("canonical base exceeded the {:?} budget", state.base_budget),
                "pseudo_intents": pseudo_intents,
            }),
        }),
        BaseJob::Done(_) => None,
    }
}

fn cards(ctx: &FormalContext, origin: Origin, implications: Vec<implicheck::Implication>) -> Vec<QuestionCard> {
    implications
        .into_iter()
        .map(|imp| QuestionCard::of(&Question::new(String::new(), origin, imp, ctx, 0)))
        .collect()
}

async fn get_base(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let stored = state.store.context(&id)?;
    let job = poll_base(&state, &stored);
    if let Some(early) = pending(&state, &job) {
        return Ok(early.into_response());
    }
    let BaseJob::Done(base) = job else { unreachable!() };
    let implications = cards(&stored.context, Origin::Base, base.implications().to_vec());
    Ok(Json(json!({
        "status": "done",
        "count": implications.len(),
        "implications": implications,
    }))
    .into_response())
}

#[derive(Debug, Deserialize)]
pub struct InspectRequest {
    pub attributes: Vec<String>,
    #[serde(default = "default_mode")]
    pub method: Mode,
    #[serde(default)]
    pub complement: bool,
}

async fn inspect(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<InspectRequest>,
) -> ApiResult<Response> {
    let stored = state.store.context(&id)?;
    let ctx = &stored.context;
    let intent = ctx.attribute_set(&req.attributes)?;
    let mut out = json!({ "intent": ctx.attribute_names_of(&intent) });
    match req.method {
        Mode::Closure => {
            out["implications"] = json!(cards(ctx, Origin::Closure, inspect_closure(ctx, &intent).merged()));
            let hand = max_intent_questions(ctx, &intent);
            out["hand_check"] = json!({
                "additions": cards(ctx, Origin::MaxIntentI1, merge_by_premise(hand.additions)),
                "removals": cards(ctx, Origin::MaxIntentI2, hand.removals),
            });
        }
        Mode::Base => {
            let job = poll_base(&state, &stored);
            if let Some(early) = pending(&state, &job) {
                return Ok(early.into_response());
            }
            let BaseJob::Done(base) = job else { unreachable!() };
            out["implications"] = json!(cards(ctx, Origin::Base, base.inspect(&intent)));
        }
    }
    if req.complement {
        let comp = ctx.complement();
        let found = inspect_closure(&comp, &intent.complement()).merged();
        out["complement"] = json!(cards(ctx, Origin::ComplementClosure, found));
    }
    Ok(Json(out).into_response())
}
