//! HTTP host for interactive sessions: a human decision maker reads the
//! current front and posts preferences; the engine runs in the background.
//!
//! | method | path                        |                                   |
//! |--------|-----------------------------|-----------------------------------|
//! | GET    | `/healthz`                  | liveness                          |
//! | POST   | `/sessions`                 | create, initialization runs async |
//! | GET    | `/sessions/{id}/front`      | phase, ledger, current front      |
//! | POST   | `/sessions/{id}/preference` | pick a front member, run a step   |
//! | GET    | `/sessions/{id}/log`        | evaluation and interaction log    |
//!
//! Each session has a single writer; a mutating request that finds it busy
//! or in the wrong phase gets 409. Snapshots are written to the data
//! directory (write, then rename) after every phase transition and reloaded
//! on startup.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use prefmobo::engine::{DmMode, Method, Phase, RunLog, Session, SessionConfig, SessionState};
use prefmobo::problem::BudgetLedger;
use prefmobo::Error as EngineError;

/// Body of `POST /sessions`. Omitted fields take the engine defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default = "default_problem")]
    pub problem: String,
    pub d_in: usize,
    pub d_out: usize,
    pub method: String,
    pub total_budget: usize,
    pub p_space: Option<usize>,
    pub p_init: Option<usize>,
    pub rho: Option<f64>,
    pub wape_n: Option<usize>,
    pub wape_eta: Option<f64>,
    pub cost_dm: Option<usize>,
    pub seed: Option<u64>,
}

fn default_problem() -> String {
    "dtlz2".into()
}

impl CreateRequest {
    pub fn into_config(self) -> Result<SessionConfig, EngineError> {
        let method: Method = self.method.parse()?;
        let mut cfg = SessionConfig::new(self.problem, self.d_in, self.d_out, method, self.total_budget);
        cfg.p_space = self.p_space.unwrap_or(cfg.p_space);
        cfg.p_init = self.p_init.unwrap_or(cfg.p_init);
        cfg.rho = self.rho.unwrap_or(cfg.rho);
        cfg.wape_n = self.wape_n.unwrap_or(cfg.wape_n);
        cfg.wape_eta = self.wape_eta.unwrap_or(cfg.wape_eta);
        cfg.cost_dm = self.cost_dm.unwrap_or(cfg.cost_dm);
        cfg.seed = self.seed.unwrap_or(0);
        cfg.dm_mode = DmMode::Interactive;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceRequest {
    pub choice: usize,
    pub request_id: Option<String>,
}

/// What gets persisted per session.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot {
    id: String,
    created: u64,
    state: SessionState,
    request_ids: Vec<String>,
}

struct Slot {
    id: String,
    created: u64,
    /// Sole writer. Held for the whole of initialization and each step.
    session: Arc<tokio::sync::Mutex<Session>>,
    /// Last published state, for readers.
    published: RwLock<Arc<SessionState>>,
    request_ids: Mutex<HashSet<String>>,
}

impl Slot {
    fn snapshot(&self) -> Arc<SessionState> {
        self.published.read().expect("readers never panic").clone()
    }

    fn publish(&self, state: &SessionState) {
        *self.published.write().expect("writers never panic") = Arc::new(state.clone());
    }
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    data_dir: Option<PathBuf>,
}

impl AppState {
    /// Loads every snapshot found in `data_dir` and resumes work that was
    /// interrupted mid-phase.
    pub fn new(data_dir: Option<PathBuf>) -> io::Result<Arc<Self>> {
        let app = Arc::new(Self {
            sessions: RwLock::new(HashMap::new()),
            data_dir,
        });
        if let Some(dir) = &app.data_dir {
            fs::create_dir_all(dir)?;
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            paths.sort();
            for path in paths {
                let snap: Snapshot = match fs::read(&path).map_err(|e| e.to_string()).and_then(|b| {
                    serde_json::from_slice(&b).map_err(|e| e.to_string())
                }) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("skipping snapshot {}: {e}", path.display());
                        continue;
                    }
                };
                let session = match Session::restore(snap.state.clone()) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("skipping snapshot {}: {e}", path.display());
                        continue;
                    }
                };
                let slot = Arc::new(Slot {
                    id: snap.id.clone(),
                    created: snap.created,
                    published: RwLock::new(Arc::new(snap.state)),
                    session: Arc::new(tokio::sync::Mutex::new(session)),
                    request_ids: Mutex::new(snap.request_ids.into_iter().collect()),
                });
                app.sessions.write().expect("no poisoned lock").insert(snap.id, slot.clone());
                app.resume(slot);
            }
        }
        Ok(app)
    }

    fn slot(&self, id: &str) -> Option<Arc<Slot>> {
        self.sessions.read().expect("no poisoned lock").get(id).cloned()
    }

    /// Writes the snapshot, then makes it visible to readers, so anything a
    /// client has seen survives a restart.
    fn persist(&self, slot: &Slot, state: &SessionState) {
        let Some(dir) = &self.data_dir else {
            slot.publish(state);
            return;
        };
        let mut ids: Vec<String> = slot.request_ids.lock().expect("no poisoned lock").iter().cloned().collect();
        ids.sort();
        let snap = Snapshot {
            id: slot.id.clone(),
            created: slot.created,
            state: state.clone(),
            request_ids: ids,
        };
        if let Err(e) = write_snapshot(dir, &snap) {
            eprintln!("failed to persist session {}: {e}", slot.id);
        }
        slot.publish(state);
    }

    /// Continues a restored session that stopped during initialization or
    /// an exploration step.
    fn resume(self: &Arc<Self>, slot: Arc<Slot>) {
        let phase = slot.snapshot().phase;
        if matches!(phase, Phase::Initializing | Phase::Exploring) {
            let guard = slot.session.clone().try_lock_owned().expect("fresh slot is unlocked");
            let app = self.clone();
            std::thread::spawn(move || {
                let mut session = guard;
                let _ = match phase {
                    Phase::Initializing => session.run_initialization(),
                    _ => session.explore().map(|_| ()),
                };
                app.persist(&slot, session.state());
            });
        }
    }
}

fn write_snapshot(dir: &Path, snap: &Snapshot) -> io::Result<()> {
    let bytes = serde_json::to_vec(snap).map_err(io::Error::other)?;
    let path = dir.join(format!("{}.json", snap.id));
    let tmp = dir.join(format!("{}.json.tmp", snap.id));
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn error(status: StatusCode, message: impl Into<String>, field: Option<&str>) -> Response {
    let mut body = json!({ "error": message.into() });
    if let Some(f) = field {
        body["field"] = json!(f);
    }
    (status, Json(body)).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, format!("no session {id}"), None)
}

/// Full-precision decimal strings for vectors that must round-trip.
fn decimals(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:?}")).collect()
}

fn ledger_doc(l: &BudgetLedger) -> Value {
    json!({
        "total_budget": l.total_budget,
        "spent_evaluations": l.spent_evaluations,
        "spent_interactions": l.spent_interactions,
        "cost_dm": l.cost_dm,
        "spent": l.spent(),
        "remaining": l.remaining(),
    })
}

fn phase_name(p: Phase) -> Value {
    serde_json::to_value(p).expect("phase serializes")
}

async fn healthz() -> &'static str {
    "ok"
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: CreateRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed body: {e}"), None),
    };
    let config = match req.into_config() {
        Ok(c) => c,
        Err(EngineError::InvalidConfig { field, message }) => {
            return error(StatusCode::BAD_REQUEST, message, Some(&field));
        }
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string(), None),
    };
    let session = match Session::new(config) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string(), None),
    };
    let id = uuid::Uuid::new_v4().to_string();
    let created = now_secs();
    let slot = Arc::new(Slot {
        id: id.clone(),
        created,
        published: RwLock::new(Arc::new(session.state().clone())),
        session: Arc::new(tokio::sync::Mutex::new(session)),
        request_ids: Mutex::new(HashSet::new()),
    });
    let guard = slot.session.clone().try_lock_owned().expect("fresh slot is unlocked");
    app.persist(&slot, &guard.state().clone());
    app.sessions.write().expect("no poisoned lock").insert(id.clone(), slot.clone());

    let worker = app.clone();
    tokio::task::spawn_blocking(move || {
        let mut session = guard;
        if let Err(e) = session.run_initialization() {
            eprintln!("session {}: initialization stopped: {e}", slot.id);
        }
        worker.persist(&slot, session.state());
    });
    (
        StatusCode::CREATED,
        Json(json!({ "id": id, "phase": phase_name(Phase::Initializing), "created": created })),
    )
        .into_response()
}

async fn get_front(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(slot) = app.slot(&id) else { return not_found(&id) };
    let state = slot.snapshot();
    let mut indices = state.front.eval_indices();
    indices.sort_unstable();
    let front: Vec<Value> = indices
        .into_iter()
        .filter_map(|i| state.dataset.get(i))
        .map(|p| json!({ "eval_index": p.eval_index, "x": decimals(&p.x), "y": decimals(&p.y) }))
        .collect();
    Json(json!({
        "id": id,
        "created": slot.created,
        "phase": phase_name(state.phase),
        "ledger": ledger_doc(&state.ledger),
        "d_out": state.config.d_out,
        "preferred": state.preferred.as_ref().map(|p| p.eval_index),
        "front": front,
    }))
    .into_response()
}

async fn post_preference(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Response {
    let Some(slot) = app.slot(&id) else { return not_found(&id) };
    let req: PreferenceRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed body: {e}"), None),
    };
    if let Some(rid) = &req.request_id {
        if !slot.request_ids.lock().expect("no poisoned lock").insert(rid.clone()) {
            return error(StatusCode::CONFLICT, format!("request {rid} already submitted"), None);
        }
    }
    let forget_request = |slot: &Slot| {
        if let Some(rid) = &req.request_id {
            slot.request_ids.lock().expect("no poisoned lock").remove(rid);
        }
    };
    let Ok(mut guard) = slot.session.clone().try_lock_owned() else {
        forget_request(&slot);
        return error(StatusCode::CONFLICT, "session is busy", None);
    };
    if guard.phase() != Phase::AwaitingPreference {
        forget_request(&slot);
        return error(StatusCode::CONFLICT, "session is not awaiting a preference", None);
    }
    match guard.apply_choice(req.choice) {
        Ok(()) => {}
        Err(EngineError::InvalidChoice(c)) => {
            forget_request(&slot);
            return error(StatusCode::UNPROCESSABLE_ENTITY, format!("{c} is not on the current front"), None);
        }
        Err(e) => {
            forget_request(&slot);
            return error(StatusCode::CONFLICT, e.to_string(), None);
        }
    }
    app.persist(&slot, &guard.state().clone());

    let worker = app.clone();
    let step_slot = slot.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let mut session = guard;
        let evaluations = if session.phase() == Phase::Exploring {
            session.explore().unwrap_or_default()
        } else {
            0
        };
        worker.persist(&step_slot, session.state());
        evaluations
    })
    .await;
    let evaluations = match outcome {
        Ok(n) => n,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
    };
    let state = slot.snapshot();
    Json(json!({
        "id": id,
        "phase": phase_name(state.phase),
        "ledger": ledger_doc(&state.ledger),
        "chosen": req.choice,
        "evaluations": evaluations,
    }))
    .into_response()
}

async fn get_log(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(slot) = app.slot(&id) else { return not_found(&id) };
    let state = slot.snapshot();
    let log = RunLog::from_state(&state, None);
    let evaluations: Vec<Value> = log
        .evaluations
        .iter()
        .map(|r| {
            json!({
                "eval_index": r.eval_index,
                "x": decimals(&r.x),
                "y": decimals(&r.y),
                "generating_weight": r.generating_weight.as_deref().map(decimals),
                "best_oc": r.best_oc,
            })
        })
        .collect();
    Json(json!({
        "id": id,
        "phase": phase_name(log.phase),
        "ledger": ledger_doc(&log.ledger),
        "config": log.config,
        "evaluations": evaluations,
        "interactions": log.interactions,
        "diagnostics": log.diagnostics,
    }))
    .into_response()
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/front", get(get_front))
        .route("/sessions/{id}/preference", post(post_preference))
        .route("/sessions/{id}/log", get(get_log))
        .with_state(app)
}

/// Serves on `0.0.0.0:port` until the process ends.
pub async fn serve(port: u16, data_dir: Option<PathBuf>) -> io::Result<()> {
    let app = AppState::new(data_dir)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(app)).await
}
