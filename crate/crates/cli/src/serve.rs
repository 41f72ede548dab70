//! HTTP front end of the judgment study.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use shiftbench_core::jsonl::read_jsonl;
use shiftbench_core::study::{
    AttentionCheck, JudgmentRecord, PresentationOrder, StudyConfig, StudyError, StudyService,
};
use shiftbench_core::SentencePair;

use crate::commands::{UsageError, DEFAULT_SEED};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// Pair pool shown to participants.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Directory holding the assignment and judgment logs.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 25)]
    pub items: usize,
    #[arg(long, default_value_t = 2)]
    pub attention_checks: usize,
    /// Stop assigning a pair after it was issued this many times.
    #[arg(long)]
    pub max_per_pair: Option<u32>,
    /// Attention-check items (JSON array); the bundled set by default.
    #[arg(long)]
    pub checks: Option<PathBuf>,
}

struct ApiError(StudyError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            StudyError::Validation(_) => StatusCode::BAD_REQUEST,
            StudyError::NotFound(_) => StatusCode::NOT_FOUND,
            StudyError::Conflict(_) => StatusCode::CONFLICT,
            StudyError::Exhausted(_) => StatusCode::SERVICE_UNAVAILABLE,
            StudyError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

#[derive(Deserialize)]
struct AssignmentQuery {
    participant: Option<String>,
}

/// Returns the participant's assignment, creating it on first request.
async fn get_assignment(
    State(svc): State<Arc<StudyService>>,
    Query(q): Query<AssignmentQuery>,
) -> Result<Response, ApiError> {
    let pid = q.participant.unwrap_or_default();
    let pid = pid.trim();
    if pid.is_empty() {
        return Err(ApiError(StudyError::Validation("missing participant".into())));
    }
    if let Some(a) = svc.assignment(pid) {
        return Ok(Json(a).into_response());
    }
    match svc.create_assignment(pid) {
        Ok(a) => Ok(Json(a).into_response()),
        // lost a race with a concurrent request for the same participant
        Err(StudyError::Conflict(_)) => svc
            .assignment(pid)
            .map(|a| Json(a).into_response())
            .ok_or_else(|| ApiError(StudyError::Storage("assignment vanished".into()))),
        Err(e) => Err(ApiError(e)),
    }
}

#[derive(Deserialize)]
struct JudgmentBody {
    participant_id: String,
    pair_id: String,
    presentation_order: PresentationOrder,
    rating: i64,
    #[serde(default)]
    response_time_ms: u64,
}

async fn post_judgment(
    State(svc): State<Arc<StudyService>>,
    body: Result<Json<JudgmentBody>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(b) = body.map_err(|e| ApiError(StudyError::Validation(e.body_text())))?;
    let rating = u8::try_from(b.rating)
        .map_err(|_| ApiError(StudyError::Validation(format!("rating {} outside 1..=7", b.rating))))?;
    let stored = svc
        .submit_judgment(JudgmentRecord {
            participant_id: b.participant_id,
            pair_id: b.pair_id,
            presentation_order: b.presentation_order,
            rating,
            response_time_ms: b.response_time_ms,
            submitted_at: 0,
            is_attention_check: false,
        })
        .map_err(ApiError)?;
    Ok((StatusCode::CREATED, Json(stored)).into_response())
}

async fn get_aggregates(State(svc): State<Arc<StudyService>>) -> Response {
    Json(svc.aggregates()).into_response()
}

pub fn router(svc: Arc<StudyService>) -> Router {
    Router::new()
        .route("/api/assignment", get(get_assignment))
        .route("/api/judgments", post(post_judgment))
        .route("/api/aggregates", get(get_aggregates))
        .with_state(svc)
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    for p in std::iter::once(&args.pairs).chain(&args.checks) {
        if !p.exists() {
            return Err(UsageError(format!("input not found: {}", p.display())).into());
        }
    }
    let pool: Vec<SentencePair> = read_jsonl(&args.pairs)?;
    let checks = match &args.checks {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => AttentionCheck::bundled(),
    };
    let config = StudyConfig {
        items_per_assignment: args.items,
        attention_checks: args.attention_checks,
        seed: args.seed,
        max_assignments_per_pair: args.max_per_pair,
        ..Default::default()
    };
    std::fs::create_dir_all(&args.data_dir).with_context(|| format!("creating {}", args.data_dir.display()))?;
    let svc = Arc::new(StudyService::open(pool, checks, config, &args.data_dir)?);

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .with_context(|| format!("binding {}", args.addr))?;
        let local = listener.local_addr()?;
        let mut stdout = std::io::stdout();
        writeln!(stdout, "listening on http://{local}")?;
        stdout.flush()?;
        axum::serve(listener, router(svc))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
