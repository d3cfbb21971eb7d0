//! JSON API over a built index, a tagged corpus and a task store.
//!
//! The endpoint table lives in `docs/api.md`.

mod auth;
mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;
use tower_http::services::ServeDir;

pub use auth::Auth;
pub use error::ApiError;

use statelaw_core::analytics::{aggregate_spans, laws_for_span, Provenance, TaggedDocument, TaggedSpan};
use statelaw_core::annotation::{assign_task, session_stats, submit_annotation, Submission, TaskStore, UiConfig};
use statelaw_core::corpus::DiscourseLabel;
use statelaw_core::search::{parse_query, search, Index, Page, QueryAst};

pub const DEFAULT_PAGE_SIZE: usize = 20;
pub const MAX_PAGE_SIZE: usize = 100;

pub struct AppState {
    pub index: Index,
    pub tagged: Vec<TaggedDocument>,
    pub store: Arc<dyn TaskStore>,
    pub auth: Auth,
    pub ui_config: UiConfig,
    /// Served under `/app/` when set.
    pub static_dir: Option<PathBuf>,
}

type Shared = Arc<AppState>;

pub fn router(state: AppState) -> Router {
    let static_dir = state.static_dir.clone();
    let mut app = Router::new()
        .route("/api/search", get(search_handler))
        .route("/api/laws/{id}", get(law_handler))
        .route("/api/spans", get(spans_handler))
        .route("/api/spans/{label}/{key}/laws", get(span_laws_handler))
        .route("/api/tasks/next", post(next_task_handler))
        .route("/api/annotations", post(annotation_handler))
        .route("/api/stats", get(stats_handler))
        .fallback(|| async { ApiError::not_found("no such endpoint") });
    if let Some(dir) = static_dir {
        app = app.nest_service("/app", ServeDir::new(dir));
    }
    app.with_state(Arc::new(state))
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn param_usize(params: &HashMap<String, String>, name: &str, default: usize) -> Result<usize, ApiError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_request("bad_request", format!("`{name}` must be a non-negative integer"))),
    }
}

/// 1-based `page` and `page_size` (capped) to an offset window.
fn paging(params: &HashMap<String, String>) -> Result<(usize, usize, Page), ApiError> {
    let page = param_usize(params, "page", 1)?.max(1);
    let size = param_usize(params, "page_size", DEFAULT_PAGE_SIZE)?.clamp(1, MAX_PAGE_SIZE);
    let offset = (page - 1).saturating_mul(size);
    Ok((page, size, Page { offset, limit: size }))
}

fn parse_label(s: &str) -> Result<DiscourseLabel, ApiError> {
    s.parse()
        .map_err(|_| ApiError::bad_request("bad_label", format!("unknown label `{s}`")))
}

async fn search_handler(State(app): State<Shared>, Query(params): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    let mut ast = parse_query(q)?;
    if let Some(state) = params.get("state").filter(|s| !s.is_empty()) {
        ast = ast.and(QueryAst::facet("state", state));
    }
    let (page, page_size, window) = paging(&params)?;
    let results = search(&app.index, &ast, window);
    Ok(Json(json!({
        "query": ast,
        "total": results.total,
        "page": page,
        "page_size": page_size,
        "hits": results.hits,
        "facet_counts": results.facet_counts,
    }))
    .into_response())
}

fn find_law<'a>(app: &'a AppState, id: &str) -> Option<&'a TaggedDocument> {
    app.tagged.iter().find(|d| d.law.id == id)
}

async fn law_handler(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let doc = find_law(&app, &id).ok_or_else(|| ApiError::not_found(format!("no law `{id}`")))?;
    let mut spans: Vec<TaggedSpan> = doc.spans.clone();
    let snap = app.store.snapshot().map_err(|e| ApiError::internal(e.to_string()))?;
    let mut annotations = Vec::new();
    for task in snap.state.tasks.values().filter(|t| t.doc_id == id) {
        for r in snap.state.records_for(task.task_id) {
            spans.extend(
                r.spans
                    .iter()
                    .map(|s| TaggedSpan::new(task.paragraph_index, s.clone(), Provenance::Human)),
            );
            annotations.push(json!({
                "task_id": r.task_id,
                "paragraph": task.paragraph_index,
                "helper_id": r.helper_id,
                "submitted_at": r.submitted_at,
                "relations": r.relations,
            }));
        }
    }
    spans.sort_by_key(|s| (s.paragraph, s.span.start, s.provenance == Provenance::Human));
    Ok(Json(json!({ "law": doc.law, "spans": spans, "annotations": annotations })).into_response())
}

async fn spans_handler(State(app): State<Shared>, Query(params): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let label = parse_label(params.get("label").map(String::as_str).unwrap_or(""))?;
    let (page, page_size, window) = paging(&params)?;
    let groups = aggregate_spans(&app.tagged, label);
    let total = groups.len();
    let groups: Vec<_> = groups.into_iter().skip(window.offset).take(window.limit).collect();
    Ok(Json(json!({
        "label": label,
        "total": total,
        "page": page,
        "page_size": page_size,
        "groups": groups,
    }))
    .into_response())
}

#[derive(Serialize)]
struct LawSummary<'a> {
    id: &'a str,
    state: &'a str,
    citation: &'a str,
    heading: &'a str,
}

async fn span_laws_handler(State(app): State<Shared>, Path((label, key)): Path<(String, String)>) -> Result<Response, ApiError> {
    let label = parse_label(&label)?;
    let laws = laws_for_span(&app.tagged, label, &key)?;
    let laws: Vec<LawSummary> = laws
        .iter()
        .map(|d| LawSummary {
            id: &d.law.id,
            state: &d.law.state,
            citation: &d.law.citation.raw,
            heading: &d.law.heading,
        })
        .collect();
    Ok(Json(json!({ "label": label, "key": key, "laws": laws })).into_response())
}

/// Runs a store operation off the async workers; the file store fsyncs.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn next_task_handler(State(app): State<Shared>, headers: HeaderMap) -> Result<Response, ApiError> {
    let helper = app.auth.helper_for(&headers)?;
    let store = Arc::clone(&app.store);
    let task = blocking(move || assign_task(&*store, &helper).map_err(ApiError::from)).await?;
    let Some(task) = task else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    let pretags: Vec<_> = if app.ui_config.pretag {
        find_law(&app, &task.doc_id)
            .map(|d| d.spans_in(task.paragraph_index).map(|s| s.span.clone()).collect())
            .unwrap_or_default()
    } else {
        Vec::new()
    };
    Ok(Json(json!({
        "task": {
            "task_id": task.task_id,
            "required": task.required,
            "completed": task.completed,
        },
        "paragraph": {
            "doc_id": task.doc_id,
            "index": task.paragraph_index,
            "text": task.text,
        },
        "pretags": pretags,
        "ui_config": app.ui_config,
    }))
    .into_response())
}

async fn annotation_handler(State(app): State<Shared>, headers: HeaderMap, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let helper = app.auth.helper_for(&headers)?;
    let submission: Submission =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("bad_request", format!("malformed submission: {e}")))?;
    let store = Arc::clone(&app.store);
    let task = blocking(move || submit_annotation(&*store, &helper, &submission, chrono::Utc::now()).map_err(ApiError::from)).await?;
    Ok(Json(json!({
        "task_id": task.task_id,
        "completed": task.completed,
        "required": task.required,
        "retired": task.is_retired(),
    }))
    .into_response())
}

async fn stats_handler(State(app): State<Shared>, headers: HeaderMap) -> Result<Response, ApiError> {
    let helper = app.auth.helper_for(&headers)?;
    let stats = session_stats(&*app.store, &helper)?;
    Ok(Json(stats).into_response())
}
