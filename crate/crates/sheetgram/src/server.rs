//! JSON over HTTP for the browser front end.
//!
//! Sessions live in memory. Requests to one session run one at a time in
//! arrival order; different sessions do not block each other.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use sheetgram_core::address::parse_address;
use sheetgram_core::arrows::{infer_index_labels, Transform};
use tokio::sync::{Mutex, RwLock};

use crate::io::LoadError;
use crate::session::{Command, ExportFormat, Outcome, Session, SessionError, Source};
use crate::views;

struct Entry {
    session: Session,
    last_used: Instant,
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    idle_timeout: Option<Duration>,
}

impl AppState {
    pub fn new(idle_timeout: Option<Duration>) -> Arc<AppState> {
        Arc::new(AppState {
            sessions: RwLock::default(),
            idle_timeout,
        })
    }

    /// Drop sessions idle for longer than the timeout.
    pub async fn sweep(&self) {
        let Some(limit) = self.idle_timeout else { return };
        let mut sessions = self.sessions.write().await;
        let mut expired = Vec::new();
        for (id, entry) in sessions.iter() {
            if let Ok(e) = entry.try_lock() {
                if e.last_used.elapsed() > limit {
                    expired.push(id.clone());
                }
            }
        }
        for id in expired {
            sessions.remove(&id);
        }
    }

    pub async fn session_count(&self) -> usize {
        self.sessions.read().await.len()
    }
}

/// An error response: status plus a JSON body with at least `error`.
#[derive(Debug)]
pub struct ApiError(StatusCode, Value);

impl ApiError {
    fn bad_request(msg: impl ToString) -> ApiError {
        ApiError(StatusCode::BAD_REQUEST, json!({ "error": msg.to_string() }))
    }

    fn not_found(id: &str) -> ApiError {
        ApiError(StatusCode::NOT_FOUND, json!({ "error": format!("no session `{id}`") }))
    }

    fn from_session(e: &SessionError, s: &Session) -> ApiError {
        let status = if e.is_parse_error() {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::CONFLICT
        };
        let mut body = error_body(e);
        body["mm"] = json!(s.mm());
        ApiError(status, body)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

fn load_error_body(e: &LoadError) -> Value {
    let mut body = json!({ "error": e.to_string(), "line": e.line() });
    if let LoadError::Formula { at, source, .. } = e {
        body["cell"] = json!(views::CellPos::from(at));
        body["position"] = json!(source.position);
    }
    body
}

fn error_body(e: &SessionError) -> Value {
    match e {
        SessionError::GrammarParse(g) => json!({
            "error": e.to_string(),
            "line": g.line,
            "column": g.col,
            "diagnostics": [g.to_string()],
        }),
        SessionError::GrammarInvalid { diagnostics, .. } => json!({
            "error": e.to_string(),
            "diagnostics": diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>(),
        }),
        SessionError::Load(l) => load_error_body(l),
        _ => json!({ "error": e.to_string() }),
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request: {e}")))
}

fn new_id() -> String {
    let n: u64 = rand::thread_rng().gen();
    format!("{n:016x}")
}

async fn entry(state: &AppState, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
    let found = state.sessions.read().await.get(id).cloned();
    let Some(entry) = found else {
        return Err(ApiError::not_found(id));
    };
    if let Some(limit) = state.idle_timeout {
        let expired = entry.lock().await.last_used.elapsed() > limit;
        if expired {
            state.sessions.write().await.remove(id);
            return Err(ApiError::not_found(id));
        }
    }
    Ok(entry)
}

#[derive(Deserialize)]
struct LoadBody {
    facts: Option<String>,
    csv: Option<String>,
    sheet: Option<String>,
}

impl LoadBody {
    fn source(self) -> Result<Source, ApiError> {
        match (self.facts, self.csv) {
            (Some(text), None) => Ok(Source::Facts(text)),
            (None, Some(text)) => Ok(Source::Csv {
                text,
                sheet: self.sheet.unwrap_or_else(|| "Sheet1".into()),
            }),
            _ => Err(ApiError::bad_request("expected exactly one of `facts` or `csv`")),
        }
    }
}

async fn create(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let source = parse_body::<LoadBody>(&body)?.source()?;
    let wb = source
        .load()
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, load_error_body(&e)))?;
    let session = Session::new(wb);
    let id = new_id();
    let body = json!({
        "id": id,
        "mm": session.mm(),
        "grid": views::grid(session.facts()),
    });
    let entry = Entry {
        session,
        last_used: Instant::now(),
    };
    state.sessions.write().await.insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn summary(s: &Session) -> Value {
    json!({
        "mm": s.mm(),
        "attributes": views::attributes(s.model()),
        "history": s.history().len(),
        "pending": views::matches(s.pending()),
        "grammars": s.grammar_names().collect::<Vec<_>>(),
    })
}

async fn show(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = entry(&state, &id).await?;
    let mut e = entry.lock().await;
    e.last_used = Instant::now();
    Ok(Json(summary(&e.session)))
}

async fn grid(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = entry(&state, &id).await?;
    let mut e = entry.lock().await;
    e.last_used = Instant::now();
    Ok(Json(json!({ "cells": views::grid(e.session.facts()) })))
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum CommandBody {
    Load {
        facts: Option<String>,
        csv: Option<String>,
        sheet: Option<String>,
    },
    Grammar {
        name: String,
        text: String,
    },
    Match {
        grammar: String,
        rule: String,
    },
    Accept {
        indices: Vec<usize>,
    },
    Group {
        name: String,
        cells: Vec<String>,
    },
    Rename {
        old: String,
        new: String,
    },
    Ungroup {
        name: String,
    },
    Name {
        name: String,
    },
    Index {
        name: String,
        labels: Option<Vec<String>>,
    },
    Generalize {
        attr: String,
    },
    Undo,
    Export {
        format: String,
    },
}

/// Sheet that unqualified cell names refer to.
fn default_sheet(s: &Session) -> String {
    s.workbook().sheets().into_iter().next().unwrap_or("Sheet1").to_string()
}

fn to_command(body: CommandBody, s: &Session) -> Result<Command, ApiError> {
    let transform = |t| Ok(Command::ApplyTransform(t));
    match body {
        CommandBody::Load { facts, csv, sheet } => Ok(Command::Load(LoadBody { facts, csv, sheet }.source()?)),
        CommandBody::Grammar { name, text } => Ok(Command::LoadGrammar { name, text }),
        CommandBody::Match { grammar, rule } => Ok(Command::MatchRule { grammar, rule }),
        CommandBody::Accept { indices } => Ok(Command::AcceptSuggestions(indices)),
        CommandBody::Group { name, cells } => {
            let sheet = default_sheet(s);
            let cells = cells
                .iter()
                .map(|c| parse_address(c, &sheet))
                .collect::<Result<_, _>>()
                .map_err(ApiError::bad_request)?;
            transform(Transform::Group { cells, name })
        }
        CommandBody::Rename { old, new } => transform(Transform::Rename { old, new }),
        CommandBody::Ungroup { name } => transform(Transform::Ungroup { name }),
        CommandBody::Name { name } => transform(Transform::NameFromLabel { name }),
        CommandBody::Index { name, labels } => {
            let labels = match labels {
                Some(l) => l,
                None => infer_index_labels(s.model(), &name, s.facts()).ok_or_else(|| {
                    ApiError(
                        StatusCode::CONFLICT,
                        json!({ "error": format!("no distinct labels found for `{name}`"), "mm": s.mm() }),
                    )
                })?,
            };
            transform(Transform::IndexBy { name, labels })
        }
        CommandBody::Generalize { attr } => Ok(Command::Generalize(attr)),
        CommandBody::Undo => Ok(Command::Undo),
        CommandBody::Export { format } => Ok(Command::Export(format.parse().map_err(ApiError::bad_request)?)),
    }
}

fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::Loaded => json!({ "kind": "loaded" }),
        Outcome::GrammarLoaded => json!({ "kind": "grammar", "diagnostics": [] }),
        Outcome::Matches(ms) => json!({ "kind": "matches", "matches": views::matches(ms) }),
        Outcome::Applied { transforms, notes } => json!({
            "kind": "applied",
            "transforms": transforms.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "notes": notes,
        }),
        Outcome::Generalized { attr, equation } => json!({ "kind": "generalized", "attr": attr, "equation": equation }),
        Outcome::Undone(cmd) => json!({ "kind": "undone", "command": cmd }),
        Outcome::Exported(text) => json!({ "kind": "exported", "text": text }),
    }
}

async fn run(
    state: &AppState,
    id: &str,
    make: impl FnOnce(&Session) -> Result<Command, ApiError>,
) -> Result<Json<Value>, ApiError> {
    let entry = entry(state, id).await?;
    let mut e = entry.lock().await;
    e.last_used = Instant::now();
    let cmd = make(&e.session)?;
    let outcome = e
        .session
        .execute(cmd)
        .map_err(|err| ApiError::from_session(&err, &e.session))?;
    let s = &e.session;
    let mut body = json!({
        "mm": s.mm(),
        "model": views::attributes(s.model()),
        "history": s.history().len(),
        "result": outcome_json(&outcome),
    });
    if let Outcome::Matches(ms) = &outcome {
        body["matches"] = json!(views::matches(ms));
    }
    if matches!(outcome, Outcome::Loaded) {
        body["grid"] = json!(views::grid(s.facts()));
    }
    Ok(Json(body))
}

async fn command(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let body: CommandBody = parse_body(&body)?;
    run(&state, &id, |s| to_command(body, s)).await
}

#[derive(Deserialize)]
struct GrammarBody {
    name: String,
    text: String,
}

async fn grammar(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let GrammarBody { name, text } = parse_body(&body)?;
    run(&state, &id, |_| Ok(Command::LoadGrammar { name, text }))
        .await
        .map(|_| Json(json!({ "diagnostics": [] })))
}

#[derive(Deserialize)]
struct MatchBody {
    grammar: String,
    rule: String,
}

async fn match_rule(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let MatchBody { grammar, rule } = parse_body(&body)?;
    run(&state, &id, |_| Ok(Command::MatchRule { grammar, rule })).await
}

async fn undo(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    run(&state, &id, |_| Ok(Command::Undo)).await
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let format: ExportFormat = q
        .format
        .as_deref()
        .unwrap_or("mm")
        .parse()
        .map_err(ApiError::bad_request)?;
    let entry = entry(&state, &id).await?;
    let mut e = entry.lock().await;
    e.last_used = Instant::now();
    let text = e
        .session
        .export(format)
        .map_err(|err| ApiError::from_session(&err, &e.session))?;
    let content_type = match format {
        ExportFormat::Json => "application/json",
        ExportFormat::Mm | ExportFormat::Facts => "text/plain; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], text).into_response())
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/grid", get(grid))
        .route("/sessions/{id}/grammars", post(grammar))
        .route("/sessions/{id}/match", post(match_rule))
        .route("/sessions/{id}/commands", post(command))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/export", get(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until the process is stopped.
pub async fn serve(
    addr: std::net::SocketAddr,
    static_dir: Option<PathBuf>,
    idle_timeout: Option<Duration>,
) -> std::io::Result<()> {
    let state = AppState::new(idle_timeout);
    if let Some(limit) = idle_timeout {
        let sweeper = Arc::clone(&state);
        let every = limit.min(Duration::from_secs(60)).max(Duration::from_secs(1));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(every);
            loop {
                tick.tick().await;
                sweeper.sweep().await;
            }
        });
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir)).await
}
