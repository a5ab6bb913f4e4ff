// SPDX-License-Identifier: Apache-2.0

//! HTTP API: target status, run launch and progress, rankings and raw
//! benchmark records.
//!
//! One run may be in flight at a time; it executes on a background thread
//! and publishes progress through a [`RunStatusView`] that readers inspect
//! without taking any lock.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use benchlite_core::{
    rank_targets, AttributeCatalog, ContainerSpec, GroupId, QueryRole, RankMethod, RankingError, RecordRole,
    TargetDescriptor, WeightError, WeightVector,
};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::ContainerExecutor;
use crate::files::{load_catalog, load_inventory, read_text, LoadError};
use crate::mock::{MockExecutor, MockProfile};
use crate::orchestrator::{
    collect_run, plan_run, store_run, Executor, PlanOptions, RunError, RunObserver, TargetState,
    DEFAULT_SUITE_COMMAND, DEFAULT_TIMEOUT,
};
use crate::repository::{Repository, RepositoryError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("config key `{0}` is required")]
    MissingKey(&'static str),
    #[error("config key `{key}`: invalid value `{value}`")]
    InvalidValue { key: String, value: String },
    #[error("config key `{key}`: path does not exist: {}", path.display())]
    MissingPath { key: &'static str, path: PathBuf },
}

/// How targets are benchmarked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutorConfig {
    Mock { profile: PathBuf, seed: u64 },
    Container { runtime: String, image: String },
}

impl ExecutorConfig {
    pub fn build(&self, catalog: &AttributeCatalog) -> Result<Arc<dyn Executor>, LoadError> {
        Ok(match self {
            ExecutorConfig::Mock { profile, seed } => {
                let parsed = MockProfile::parse(&read_text(profile)?, catalog).map_err(|e| LoadError::Parse {
                    path: profile.clone(),
                    line: match &e {
                        crate::mock::MockError::Parse { line, .. }
                        | crate::mock::MockError::UnknownAttribute { line, .. } => *line,
                    },
                    reason: e.to_string(),
                })?;
                Arc::new(MockExecutor::new(parsed, catalog, *seed))
            }
            ExecutorConfig::Container { runtime, image } => Arc::new(ContainerExecutor::new(runtime, image)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub listen: SocketAddr,
    pub repository: PathBuf,
    pub inventory: PathBuf,
    pub catalog: Option<PathBuf>,
    pub max_parallel_targets: usize,
    pub executor: ExecutorConfig,
    pub suite_command: String,
    pub timeout: Duration,
    pub static_dir: Option<PathBuf>,
}

impl ApiConfig {
    /// Parses `key=value` lines. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: idx + 1,
                reason: "expected key=value".into(),
            })?;
            let key = k.trim().to_string();
            const KEYS: [&str; 14] = [
                "listen",
                "repository",
                "inventory",
                "catalog",
                "max_parallel_targets",
                "executor",
                "mock_profile",
                "mock_seed",
                "runtime",
                "image",
                "suite_command",
                "timeout_s",
                "static_dir",
                "log_level",
            ];
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Parse {
                    line: idx + 1,
                    reason: format!("unknown key `{key}`"),
                });
            }
            if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Parse {
                    line: idx + 1,
                    reason: format!("duplicate key `{key}`"),
                });
            }
        }
        let invalid = |key: &str, value: &str| ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let required = |key: &'static str| kv.get(key).ok_or(ConfigError::MissingKey(key));
        let existing = |key: &'static str, value: &str| {
            let path = base.join(value);
            if path.exists() {
                Ok(path)
            } else {
                Err(ConfigError::MissingPath { key, path })
            }
        };

        let listen_raw = required("listen")?;
        let listen: SocketAddr = listen_raw.parse().map_err(|_| invalid("listen", listen_raw))?;
        if listen.port() == 0 {
            return Err(invalid("listen", listen_raw));
        }
        // The store itself is created on first open; its directory must exist.
        let repository = base.join(required("repository")?);
        let repo_dir = match repository.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        if !repo_dir.is_dir() {
            return Err(ConfigError::MissingPath {
                key: "repository",
                path: repo_dir,
            });
        }
        let inventory = existing("inventory", required("inventory")?)?;
        let catalog = kv.get("catalog").map(|v| existing("catalog", v)).transpose()?;
        let static_dir = kv.get("static_dir").map(|v| existing("static_dir", v)).transpose()?;
        let max_parallel_targets = match kv.get("max_parallel_targets") {
            None => 4,
            Some(v) => v.parse().ok().filter(|n| *n >= 1).ok_or_else(|| invalid("max_parallel_targets", v))?,
        };
        let timeout = match kv.get("timeout_s") {
            None => DEFAULT_TIMEOUT,
            Some(v) => Duration::from_secs(v.parse().ok().filter(|n| *n >= 1).ok_or_else(|| invalid("timeout_s", v))?),
        };
        let executor = match kv.get("executor").map(String::as_str).unwrap_or("docker") {
            "mock" => ExecutorConfig::Mock {
                profile: existing("mock_profile", required("mock_profile")?)?,
                seed: match kv.get("mock_seed") {
                    None => 0,
                    Some(v) => v.parse().map_err(|_| invalid("mock_seed", v))?,
                },
            },
            "docker" | "container" => ExecutorConfig::Container {
                runtime: kv.get("runtime").cloned().unwrap_or_else(|| "docker".into()),
                image: required("image")?.clone(),
            },
            other => return Err(invalid("executor", other)),
        };
        Ok(Self {
            listen,
            repository,
            inventory,
            catalog,
            max_parallel_targets,
            executor,
            suite_command: kv
                .get("suite_command")
                .cloned()
                .unwrap_or_else(|| DEFAULT_SUITE_COMMAND.to_string()),
            timeout,
            static_dir,
        })
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
}

fn state_code(s: TargetState) -> u8 {
    match s {
        TargetState::Pending => 0,
        TargetState::Running => 1,
        TargetState::Succeeded => 2,
        TargetState::Failed => 3,
        TargetState::TimedOut => 4,
    }
}

fn state_from_code(c: u8) -> TargetState {
    match c {
        0 => TargetState::Pending,
        1 => TargetState::Running,
        2 => TargetState::Succeeded,
        3 => TargetState::Failed,
        _ => TargetState::TimedOut,
    }
}

const RUNNING: u8 = 0;
const COMPLETED: u8 = 1;
const FAILED: u8 = 2;
const STILL_RUNNING: u64 = u64::MAX;

#[derive(Debug)]
struct TargetSlot {
    name: String,
    state: AtomicU8,
    duration_ms: AtomicU64,
}

/// Live progress of one run. Written by the run's worker thread only; every
/// field is an atomic or a write-once cell, so readers never block it.
#[derive(Debug)]
pub struct RunStatusView {
    run_id: String,
    started: DateTime<Utc>,
    clock: Instant,
    targets: Vec<TargetSlot>,
    phase: AtomicU8,
    elapsed_ms: AtomicU64,
    outcome: OnceLock<RunOutcome>,
}

#[derive(Debug, Clone, Serialize)]
struct RunOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
}

impl RunStatusView {
    fn new(run_id: String, started: DateTime<Utc>, targets: &[TargetDescriptor]) -> Self {
        Self {
            run_id,
            started,
            clock: Instant::now(),
            targets: targets
                .iter()
                .map(|t| TargetSlot {
                    name: t.name.clone(),
                    state: AtomicU8::new(state_code(TargetState::Pending)),
                    duration_ms: AtomicU64::new(STILL_RUNNING),
                })
                .collect(),
            phase: AtomicU8::new(RUNNING),
            elapsed_ms: AtomicU64::new(STILL_RUNNING),
            outcome: OnceLock::new(),
        }
    }

    pub fn target_state(&self, target: &str) -> Option<TargetState> {
        self.targets
            .iter()
            .find(|s| s.name == target)
            .map(|s| state_from_code(s.state.load(Ordering::Acquire)))
    }

    pub fn is_finished(&self) -> bool {
        self.phase.load(Ordering::Acquire) != RUNNING
    }

    fn finish(&self, phase: u8, outcome: RunOutcome) {
        let _ = self.outcome.set(outcome);
        self.elapsed_ms.store(self.clock.elapsed().as_millis() as u64, Ordering::Release);
        self.phase.store(phase, Ordering::Release);
    }

    fn snapshot(&self) -> RunSnapshot {
        let elapsed_ms = match self.elapsed_ms.load(Ordering::Acquire) {
            STILL_RUNNING => self.clock.elapsed().as_millis() as u64,
            ms => ms,
        };
        let phase = self.phase.load(Ordering::Acquire);
        RunSnapshot {
            run_id: self.run_id.clone(),
            state: match phase {
                RUNNING => "running",
                COMPLETED => "completed",
                _ => "failed",
            },
            started: self.started.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            elapsed_s: elapsed_ms as f64 / 1000.0,
            targets: self
                .targets
                .iter()
                .map(|s| TargetProgress {
                    target: s.name.clone(),
                    state: state_from_code(s.state.load(Ordering::Acquire)).as_str(),
                    duration_s: match s.duration_ms.load(Ordering::Acquire) {
                        STILL_RUNNING => None,
                        ms => Some(ms as f64 / 1000.0),
                    },
                })
                .collect(),
            outcome: if phase == RUNNING { None } else { self.outcome.get().cloned() },
        }
    }
}

impl RunObserver for RunStatusView {
    fn target_changed(&self, target: &str, state: TargetState, elapsed: Duration) {
        let Some(slot) = self.targets.iter().find(|s| s.name == target) else { return };
        let new = state_code(state);
        // States only advance, and a terminal state is final.
        let advanced = slot
            .state
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |cur| {
                let terminal = state_from_code(cur).is_terminal();
                (!terminal && new > cur).then_some(new)
            })
            .is_ok();
        if advanced && state.is_terminal() {
            slot.duration_ms.store(elapsed.as_millis() as u64, Ordering::Release);
        }
    }
}

#[derive(Debug, Serialize)]
struct TargetProgress {
    target: String,
    state: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_s: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunSnapshot {
    run_id: String,
    state: &'static str,
    started: String,
    elapsed_s: f64,
    targets: Vec<TargetProgress>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    outcome: Option<RunOutcome>,
}

/// Shared service state.
pub struct AppState {
    repository: RwLock<Repository>,
    inventory: Vec<TargetDescriptor>,
    executor: Arc<dyn Executor>,
    max_parallel_targets: usize,
    suite_command: String,
    timeout: Duration,
    busy: AtomicBool,
    runs: Mutex<BTreeMap<String, Arc<RunStatusView>>>,
}

impl AppState {
    pub fn new(
        repository: Repository,
        inventory: Vec<TargetDescriptor>,
        executor: Arc<dyn Executor>,
        max_parallel_targets: usize,
    ) -> Self {
        Self {
            repository: RwLock::new(repository),
            inventory,
            executor,
            max_parallel_targets,
            suite_command: DEFAULT_SUITE_COMMAND.to_string(),
            timeout: DEFAULT_TIMEOUT,
            busy: AtomicBool::new(false),
            runs: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn with_suite(mut self, suite_command: impl Into<String>, timeout: Duration) -> Self {
        self.suite_command = suite_command.into();
        self.timeout = timeout;
        self
    }

    pub fn from_config(config: &ApiConfig) -> Result<Self, StartupError> {
        let catalog = load_catalog(config.catalog.as_deref())?;
        let inventory = load_inventory(&config.inventory)?;
        let executor = config.executor.build(&catalog)?;
        let repository = Repository::open(&config.repository, catalog)?;
        Ok(Self::new(repository, inventory, executor, config.max_parallel_targets)
            .with_suite(config.suite_command.clone(), config.timeout))
    }

    /// Progress view of a run started through this service.
    pub fn run_view(&self, run_id: &str) -> Option<Arc<RunStatusView>> {
        self.runs.lock().expect("run registry").get(run_id).cloned()
    }

    /// Whether a run is currently executing.
    pub fn busy(&self) -> bool {
        self.busy.load(Ordering::Acquire)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
            },
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

fn read_repo(state: &AppState) -> ApiResult<std::sync::RwLockReadGuard<'_, Repository>> {
    state
        .repository
        .read()
        .map_err(|_| ApiError::internal("repository is unavailable"))
}

#[derive(Serialize)]
struct TargetView {
    name: String,
    address: String,
    vcpus: u32,
    memory_mib: u64,
    status: &'static str,
}

async fn list_targets(State(state): State<Arc<AppState>>) -> ApiResult<Json<Vec<TargetView>>> {
    let repo = read_repo(&state)?;
    let status = repo.status(state.inventory.iter().map(|t| t.name.as_str()));
    Ok(Json(
        state
            .inventory
            .iter()
            .zip(status)
            .map(|(t, (_, s))| TargetView {
                name: t.name.clone(),
                address: t.address.clone(),
                vcpus: t.vcpus,
                memory_mib: t.memory_mib,
                status: s.as_str(),
            })
            .collect(),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    mem_mb: u32,
    cpu_cores: u32,
    targets: Option<Vec<String>>,
    max_parallel: Option<usize>,
}

#[derive(Serialize)]
struct RunAccepted {
    run_id: String,
}

/// Clears the single-run flag when the worker ends, even by panic.
struct BusyGuard(Arc<AppState>);

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

fn run_failure(err: &RunError) -> ErrorBody {
    match err {
        RunError::AllTargetsFailed(_) => ErrorBody {
            code: "all_targets_failed",
            message: err.to_string(),
        },
        RunError::RepositoryWriteFailure { .. } => ErrorBody {
            code: "repository_write_failure",
            message: err.to_string(),
        },
    }
}

async fn start_run(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<RunAccepted>)> {
    let req: RunRequest = parse_body(&body)?;
    let container =
        ContainerSpec::new(req.mem_mb, req.cpu_cores).map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
    if state
        .busy
        .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
        .is_err()
    {
        return Err(ApiError::new(StatusCode::CONFLICT, "run_in_flight", "a run is already in progress"));
    }
    let guard = BusyGuard(state.clone());
    let options = PlanOptions {
        targets: req.targets,
        suite_command: state.suite_command.clone(),
        max_parallel_targets: req.max_parallel.unwrap_or(state.max_parallel_targets),
        timeout: state.timeout,
        ..PlanOptions::default()
    };
    let plan = plan_run(&state.inventory, container, options)
        .map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
    let view = Arc::new(RunStatusView::new(plan.run_id.clone(), plan.created_at, &plan.targets));
    state
        .runs
        .lock()
        .map_err(|_| ApiError::internal("run registry is unavailable"))?
        .insert(plan.run_id.clone(), view.clone());
    let run_id = plan.run_id.clone();
    log::info!("run {run_id}: {} targets at {} MB", plan.targets.len(), plan.container.memory_mb());

    std::thread::spawn(move || {
        let _guard = guard;
        let state = &_guard.0;
        let catalog = match state.repository.read() {
            Ok(repo) => repo.catalog().clone(),
            Err(_) => {
                view.finish(
                    FAILED,
                    RunOutcome {
                        records: None,
                        error: Some(ErrorBody {
                            code: "internal",
                            message: "repository is unavailable".into(),
                        }),
                    },
                );
                return;
            }
        };
        let result = collect_run(&plan, state.executor.as_ref(), &catalog, view.as_ref());
        let stored = match state.repository.write() {
            Ok(mut repo) => store_run(result, &mut repo),
            Err(_) => {
                view.finish(
                    FAILED,
                    RunOutcome {
                        records: None,
                        error: Some(ErrorBody {
                            code: "internal",
                            message: "repository is unavailable".into(),
                        }),
                    },
                );
                return;
            }
        };
        match stored {
            Ok((_, ack)) => {
                log::info!("run {}: stored {} records for {} targets", ack.run_id, ack.records, ack.targets);
                view.finish(
                    COMPLETED,
                    RunOutcome {
                        records: Some(ack.records),
                        error: None,
                    },
                );
            }
            Err(e) => {
                log::error!("run {}: {e}", plan.run_id);
                view.finish(
                    FAILED,
                    RunOutcome {
                        records: None,
                        error: Some(run_failure(&e)),
                    },
                );
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(RunAccepted { run_id })))
}

async fn run_status(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let view = state
        .run_view(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_run", format!("no run `{id}`")))?;
    Ok(Json(view.snapshot()).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankingRequest {
    weights: BTreeMap<String, f64>,
    method: String,
    mem_mb: u32,
}

#[derive(Serialize)]
struct RankingEntry {
    target: String,
    score: f64,
    rank: u32,
}

fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn parse_weights(raw: &BTreeMap<String, f64>) -> ApiResult<WeightVector> {
    let mut w = [None; 4];
    for (key, value) in raw {
        let g: GroupId = key.parse().map_err(|e: String| ApiError::bad_request("invalid_weights", e))?;
        if w[g.index()].replace(*value).is_some() {
            return Err(ApiError::bad_request(
                "invalid_weights",
                format!("group {} given more than once", g.as_str()),
            ));
        }
    }
    let mut out = [0.0; 4];
    for g in GroupId::ALL {
        out[g.index()] = w[g.index()].ok_or_else(|| {
            ApiError::bad_request("invalid_weights", WeightError::MissingGroup(g).to_string())
        })?;
    }
    let weights = WeightVector::from_array(out).map_err(|e| ApiError::bad_request("invalid_weights", e.to_string()))?;
    if weights.is_all_zero() {
        return Err(ApiError::bad_request(
            "invalid_weights",
            RankingError::AllZeroWeights.to_string(),
        ));
    }
    Ok(weights)
}

async fn rankings(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Vec<RankingEntry>>> {
    let req: RankingRequest = parse_body(&body)?;
    let weights = parse_weights(&req.weights)?;
    let method = match req.method.as_str() {
        "native" => RankMethod::Native,
        "hybrid" => RankMethod::Hybrid,
        other => {
            return Err(ApiError::bad_request(
                "invalid_method",
                format!("method must be `native` or `hybrid`, got `{other}`"),
            ))
        }
    };
    let repo = read_repo(&state)?;
    let table = rank_targets(&weights, repo.index(), method, req.mem_mb, repo.catalog()).map_err(|e| {
        let unprocessable = |code| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string());
        match e {
            RankingError::InsufficientData(RecordRole::Current) | RankingError::InsufficientData(RecordRole::Historic) => {
                unprocessable("insufficient_data")
            }
            RankingError::AllZeroWeights => ApiError::bad_request("invalid_weights", e.to_string()),
            _ => unprocessable("incomplete_data"),
        }
    })?;
    Ok(Json(
        table
            .entries
            .into_iter()
            .map(|e| RankingEntry {
                target: e.target,
                score: round4(e.score),
                rank: e.rank,
            })
            .collect(),
    ))
}

#[derive(Deserialize)]
struct BenchmarkQuery {
    target: Option<String>,
    mem_mb: Option<String>,
    role: Option<String>,
}

#[derive(Serialize)]
struct RecordView {
    target: String,
    attribute_id: String,
    value: f64,
    unit: String,
    mem_mb: u32,
    cpu_cores: u32,
    run_id: String,
    timestamp: String,
    role: &'static str,
}

async fn benchmarks(
    State(state): State<Arc<AppState>>,
    Query(q): Query<BenchmarkQuery>,
) -> ApiResult<Json<Vec<RecordView>>> {
    let target = q.target.as_deref().filter(|t| !t.is_empty());
    let mem = match q.mem_mb.as_deref().filter(|m| !m.is_empty()) {
        None => None,
        Some(m) => Some(
            m.parse::<u32>()
                .map_err(|_| ApiError::bad_request("invalid_query", format!("invalid mem_mb `{m}`")))?,
        ),
    };
    let role = match q.role.as_deref().unwrap_or("both") {
        "current" => QueryRole::Current,
        "historic" => QueryRole::Historic,
        "both" | "" => QueryRole::Both,
        other => return Err(ApiError::bad_request("invalid_query", format!("invalid role `{other}`"))),
    };
    let repo = read_repo(&state)?;
    Ok(Json(
        repo.query(target, mem, role)
            .into_iter()
            .map(|r| RecordView {
                target: r.target_name,
                attribute_id: r.attribute_id,
                value: r.value,
                unit: r.unit,
                mem_mb: r.container_mem_mb,
                cpu_cores: r.cpu_cores,
                run_id: r.run_id,
                timestamp: r.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                role: r.role.as_str(),
            })
            .collect(),
    ))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
}

/// The API routes; non-API paths are served from `static_dir` when given.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/targets", get(list_targets))
        .route("/api/runs", post(start_run))
        .route("/api/runs/{id}", get(run_status))
        .route("/api/rankings", post(rankings))
        .route("/api/benchmarks", get(benchmarks))
        .route("/api/{*rest}", axum::routing::any(not_found))
        .method_not_allowed_fallback(method_not_allowed);
    let app = match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    app.with_state(state)
}

/// Runs the API until interrupted.
pub async fn serve(config: ApiConfig) -> Result<(), StartupError> {
    let state = Arc::new(AppState::from_config(&config)?);
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.listen,
            source,
        })?;
    log::info!("listening on {}", config.listen);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.listen,
            source,
        })
}
