//! HTTP API over the session engine.
//!
//! Every step runs under a per-session lock and is persisted before the
//! response is sent. Backend calls are blocking and run off the async threads.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use interview_core::session::{new_session_id, SessionStatus};
use interview_core::transcript::Turn;
use interview_core::{
    parse_tree, DiagnosisReport, Engine, EngineAction, EngineConfig, LanguageBackend, LiveBackend, MockBackend, Mode,
    ModuleTag, SessionState,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::info;

use crate::config::{BackendKind, ServiceConfig, StoreKind};
use crate::error::{ApiError, ErrorCode};
use crate::store::{FileStore, MemoryStore, SessionStore, SessionStoreEntry};
use crate::SCHEMA_VERSION;

pub const BUNDLED_TREE_NAME: &str = "mini";
pub const SECRET_HEADER: &str = "x-interview-secret";

pub struct AppState {
    engines: BTreeMap<String, Engine>,
    backend: Arc<dyn LanguageBackend>,
    store: Arc<dyn SessionStore>,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    mode: Mode,
    engine_config: EngineConfig,
    secret: Option<String>,
}

impl AppState {
    /// Serves the bundled tree only, psycot mode, default engine config.
    pub fn new(backend: Arc<dyn LanguageBackend>, store: Arc<dyn SessionStore>) -> Self {
        Self {
            engines: BTreeMap::from([(BUNDLED_TREE_NAME.to_string(), Engine::bundled())]),
            backend,
            store,
            locks: Mutex::new(HashMap::new()),
            mode: Mode::Psycot,
            engine_config: EngineConfig::default(),
            secret: None,
        }
    }

    pub fn with_tree(mut self, name: impl Into<String>, engine: Engine) -> Self {
        self.engines.insert(name.into(), engine);
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_engine_config(mut self, config: EngineConfig) -> Self {
        self.engine_config = config;
        self
    }

    pub fn with_secret(mut self, secret: Option<String>) -> Self {
        self.secret = secret;
        self
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Self, ApiError> {
        let backend: Arc<dyn LanguageBackend> = match config.backend.kind {
            BackendKind::Mock => Arc::new(MockBackend::bundled()),
            BackendKind::Live => Arc::new(LiveBackend::new(config.backend.live.clone())),
        };
        let store: Arc<dyn SessionStore> = match config.store.kind {
            StoreKind::Memory => Arc::new(MemoryStore::new()),
            StoreKind::File => Arc::new(FileStore::open(&config.store.path)?),
        };
        let mut state = Self::new(backend, store)
            .with_mode(config.mode)
            .with_engine_config(config.engine.clone())
            .with_secret(config.shared_secret.clone());
        if let Some(dir) = &config.tree_dir {
            for (name, engine) in load_tree_dir(dir)? {
                state = state.with_tree(name, engine);
            }
        }
        Ok(state)
    }

    pub fn store(&self) -> &Arc<dyn SessionStore> {
        &self.store
    }

    fn engine(&self, tree: &str) -> Result<&Engine, ApiError> {
        self.engines
            .get(tree)
            .ok_or_else(|| ApiError::new(ErrorCode::Validation, format!("unknown tree {tree}")))
    }

    fn lock_for(&self, session_id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(session_id.to_string())
            .or_default()
            .clone()
    }

    fn load(&self, session_id: &str) -> Result<(SessionStoreEntry, Engine, SessionState), ApiError> {
        let entry = self.store.get(session_id)?.ok_or_else(|| ApiError::not_found(session_id))?;
        let engine = self.engine(&entry.tree)?.clone();
        let state = engine.restore(&entry.snapshot)?;
        Ok((entry, engine, state))
    }
}

/// Reads a tree file into a validated engine named after the file stem.
pub fn load_tree_file(path: &Path) -> Result<(String, Engine), ApiError> {
    let bad = |m: String| ApiError::new(ErrorCode::Validation, format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let tree = parse_tree(&text).map_err(|e| bad(e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let engine = Engine::new(
        name.clone(),
        tree,
        interview_core::Catalog::bundled(),
        interview_core::strategy::DistressLexicon::bundled(),
    )
    .map_err(|e| bad(e.to_string()))?;
    Ok((name, engine))
}

pub fn load_tree_dir(dir: &Path) -> Result<Vec<(String, Engine)>, ApiError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| ApiError::new(ErrorCode::Validation, format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_tree_file(p)).collect()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSession {
    pub tree: Option<String>,
    /// Replaces the server's engine config for this session.
    pub config: Option<EngineConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostMessage {
    pub text: String,
    /// Participant turn this message answers; a stale value is rejected.
    #[serde(default)]
    pub turn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPayload {
    pub schema_version: u32,
    pub session_id: String,
    pub tree: String,
    pub status: SessionStatus,
    /// Participant turns taken so far.
    pub turn: usize,
    pub action: EngineAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub schema_version: u32,
    pub session_id: String,
    pub tree: String,
    pub status: SessionStatus,
    pub turn: usize,
    pub updated_at: DateTime<Utc>,
    pub transcript: Vec<Turn>,
    /// The action awaiting a reply; `None` once the session ended.
    pub action: Option<EngineAction>,
    pub report_ready: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPayload {
    pub schema_version: u32,
    pub session_id: String,
    pub mode: Mode,
    pub report: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeInfo {
    pub name: String,
    pub digest: String,
    pub nodes: usize,
    pub modules: Vec<ModuleTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeList {
    pub schema_version: u32,
    pub trees: Vec<TreeInfo>,
}

fn participant_turns(state: &SessionState) -> usize {
    interview_core::transcript::participant_turns(&state.transcript).count()
}

fn payload(tree: &str, state: &SessionState, action: EngineAction) -> ActionPayload {
    ActionPayload {
        schema_version: SCHEMA_VERSION,
        session_id: state.session_id.clone(),
        tree: tree.to_string(),
        status: state.status,
        turn: participant_turns(state),
        action,
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::new(ErrorCode::BackendUnavailable, format!("worker failed: {e}"))))
}

/// JSON body parsing with VALIDATION errors; an empty body is `T::default()` when allowed.
fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes, empty: Option<T>) -> Result<T, ApiError> {
    match empty {
        Some(d) if body.iter().all(u8::is_ascii_whitespace) => Ok(d),
        _ => serde_json::from_slice(body).map_err(|e| ApiError::new(ErrorCode::Validation, format!("request body: {e}"))),
    }
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<ActionPayload>), ApiError> {
    let req: CreateSession = parse_body(&body, Some(CreateSession::default()))?;
    let tree = req.tree.unwrap_or_else(|| BUNDLED_TREE_NAME.to_string());
    let engine = app.engine(&tree)?.clone();
    let config = req.config.unwrap_or_else(|| app.engine_config.clone());
    let backend = app.backend.clone();
    let (state, action) = blocking(move || Ok(engine.start_session(new_session_id(), config, backend.as_ref())?)).await?;
    app.store.put(SessionStoreEntry::new(&tree, &state))?;
    info!(session = %state.session_id, tree = %tree, "session created");
    Ok((StatusCode::CREATED, Json(payload(&tree, &state, action))))
}

async fn post_message(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ActionPayload>, ApiError> {
    let msg: PostMessage = parse_body(&body, None)?;
    let lock = app.lock_for(&id);
    let _held = lock.lock().await;
    let (entry, engine, state) = app.load(&id)?;
    let turn = participant_turns(&state);
    if let Some(t) = msg.turn {
        if t != turn {
            return Err(ApiError::new(
                ErrorCode::Conflict,
                format!("message for turn {t} is superseded; session is at turn {turn}"),
            ));
        }
    }
    if state.status != SessionStatus::Active {
        return Err(ApiError::new(ErrorCode::Conflict, "session is not active"));
    }
    let backend = app.backend.clone();
    let (next, action) = blocking(move || Ok(engine.step(&state, &msg.text, backend.as_ref())?)).await?;
    app.store.put(SessionStoreEntry::new(&entry.tree, &next))?;
    Ok(Json(payload(&entry.tree, &next, action)))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionView>, ApiError> {
    let (entry, _, state) = app.load(&id)?;
    Ok(Json(SessionView {
        schema_version: SCHEMA_VERSION,
        turn: participant_turns(&state),
        session_id: state.session_id,
        tree: entry.tree,
        status: state.status,
        updated_at: entry.updated_at,
        transcript: state.transcript,
        action: state.last_action,
        report_ready: entry.report.is_some(),
    }))
}

fn wants_text(headers: &HeaderMap) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("text/plain") && !v.contains("application/json"))
}

async fn get_report(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let lock = app.lock_for(&id);
    let _held = lock.lock().await;
    let (mut entry, engine, state) = app.load(&id)?;
    if !state.is_finished() || state.status == SessionStatus::Aborted {
        return Err(ApiError::new(ErrorCode::Incomplete, "session has not finished the interview"));
    }
    let report: DiagnosisReport = match &entry.report {
        Some(r) => r.clone(),
        None => {
            let backend = app.backend.clone();
            let mode = app.mode;
            let (done, _, report) = blocking(move || Ok(engine.finalize(&state, backend.as_ref(), mode)?)).await?;
            entry.snapshot = done.snapshot();
            entry.status = done.status;
            entry.updated_at = Utc::now();
            entry.report = Some(report.clone());
            app.store.put(entry)?;
            report
        }
    };
    if wants_text(&headers) {
        return Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], report.human).into_response());
    }
    let trace: Value = serde_json::from_str(&report.machine)
        .map_err(|e| ApiError::new(ErrorCode::Validation, format!("stored report: {e}")))?;
    let mode = trace
        .get("mode")
        .and_then(|m| serde_json::from_value(m.clone()).ok())
        .unwrap_or(app.mode);
    Ok(Json(ReportPayload {
        schema_version: SCHEMA_VERSION,
        session_id: id,
        mode,
        report: trace,
    })
    .into_response())
}

async fn list_trees(State(app): State<Arc<AppState>>) -> Json<TreeList> {
    let trees = app
        .engines
        .iter()
        .map(|(name, e)| TreeInfo {
            name: name.clone(),
            digest: e.tree_ref().digest.clone(),
            nodes: e.tree().len(),
            modules: e.tree().modules(),
        })
        .collect();
    Json(TreeList {
        schema_version: SCHEMA_VERSION,
        trees,
    })
}

async fn healthz(State(app): State<Arc<AppState>>) -> Json<Value> {
    Json(serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "backend": app.backend.name(),
    }))
}

async fn require_secret(State(app): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(secret) = &app.secret {
        let given = req.headers().get(SECRET_HEADER).and_then(|v| v.to_str().ok());
        if req.uri().path() != "/healthz" && given != Some(secret.as_str()) {
            return ApiError::new(ErrorCode::Unauthorized, format!("missing or wrong {SECRET_HEADER} header"))
                .into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: AppState) -> Router {
    let state = Arc::new(state);
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/report", get(get_report))
        .route("/trees", get(list_trees))
        .route("/healthz", get(healthz))
        .layer(middleware::from_fn_with_state(state.clone(), require_secret))
        .with_state(state)
}

/// Binds `config.listen` and serves until ctrl-c.
pub async fn serve(config: &ServiceConfig) -> Result<(), ApiError> {
    let app = router(AppState::from_config(config)?);
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Validation, format!("bind {}: {e}", config.listen)))?;
    info!(listen = %config.listen, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ApiError::new(ErrorCode::BackendUnavailable, e.to_string()))
}
