//! HTTP routes. Bodies are JSON; errors come back as `{"error": "..."}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::event::Observation;
use crate::store::{DeclareJump, Store};
use crate::ServiceError;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Validation(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Storage(_) | ServiceError::CorruptLog { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

type ApiResult = Result<Response, ServiceError>;
type Shared = State<Arc<Store>>;

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::Validation(format!("bad request body: {e}")))
}

fn judge_slot(raw: &str) -> Result<u8, ServiceError> {
    raw.parse()
        .map_err(|_| ServiceError::Validation(format!("judge must be 1 to 5, got {raw:?}")))
}

fn ok<T: serde::Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct NewCompetition {
    #[serde(default)]
    name: Option<String>,
}

async fn create_competition(State(store): Shared, bytes: Bytes) -> ApiResult {
    let req: NewCompetition = if bytes.iter().all(u8::is_ascii_whitespace) {
        NewCompetition::default()
    } else {
        body(&bytes)?
    };
    let id = store.create_competition(req.name)?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn list_competitions(State(store): Shared) -> ApiResult {
    ok(store.competition_ids())
}

async fn get_competition(State(store): Shared, Path(id): Path<String>) -> ApiResult {
    ok(store.competition_view(&id)?)
}

async fn declare_jump(State(store): Shared, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: DeclareJump = body(&bytes)?;
    let (jump_id, dd) = store.declare_jump(&id, req)?;
    Ok((StatusCode::CREATED, Json(json!({ "jump_id": jump_id, "dd": dd }))).into_response())
}

async fn leaderboard(State(store): Shared, Path(id): Path<String>) -> ApiResult {
    ok(store.leaderboard(&id)?)
}

async fn get_jump(State(store): Shared, Path(id): Path<String>) -> ApiResult {
    ok(store.jump(&id)?)
}

async fn finalize_jump(State(store): Shared, Path(id): Path<String>) -> ApiResult {
    ok(store.finalize_jump(&id)?)
}

async fn panel_trace(State(store): Shared, Path(id): Path<String>) -> ApiResult {
    ok(store.panel_trace(&id)?)
}

async fn submit_observation(State(store): Shared, Path((id, judge)): Path<(String, String)>, bytes: Bytes) -> ApiResult {
    let judge = judge_slot(&judge)?;
    let observation: Observation = body(&bytes)?;
    ok(store.submit_observation(&id, judge, observation)?)
}

async fn finalize_judge(State(store): Shared, Path((id, judge)): Path<(String, String)>) -> ApiResult {
    let judge = judge_slot(&judge)?;
    let score = store.finalize_judge(&id, judge)?;
    ok(json!({ "judge": judge, "judge_score": score }))
}

async fn judge_trace(State(store): Shared, Path((id, judge)): Path<(String, String)>) -> ApiResult {
    ok(store.judge_trace(&id, judge_slot(&judge)?)?)
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/competitions", post(create_competition).get(list_competitions))
        .route("/competitions/{id}", get(get_competition))
        .route("/competitions/{id}/jumps", post(declare_jump))
        .route("/competitions/{id}/leaderboard", get(leaderboard))
        .route("/jumps/{id}", get(get_jump))
        .route("/jumps/{id}/finalize", post(finalize_jump))
        .route("/jumps/{id}/trace", get(panel_trace))
        .route("/jumps/{id}/judges/{judge}/observations", post(submit_observation))
        .route("/jumps/{id}/judges/{judge}/finalize", post(finalize_judge))
        .route("/jumps/{id}/judges/{judge}/trace", get(judge_trace))
        .with_state(store)
}
