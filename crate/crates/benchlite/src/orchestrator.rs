// SPDX-License-Identifier: Apache-2.0

//! Benchmark runs: provision a resource-limited container on every target,
//! run the suite in it, parse what it prints and tear the container down.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use benchlite_core::{
    parse_output, AttributeCatalog, BenchmarkRecord, ContainerSpec, FormatError, RecordRole,
    RunMetadata, TargetDescriptor,
};
use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::repository::{CommitAck, Repository, RepositoryError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30 * 60);
pub const DEFAULT_SUITE_COMMAND: &str = "benchlite-suite";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("inventory is empty")]
    EmptyInventory,
    #[error("target `{0}` is not in the inventory")]
    UnknownTarget(String),
    #[error("container needs {cores} cores but target `{target}` has {vcpus} vCPUs")]
    CoresExceedTarget { target: String, cores: u32, vcpus: u32 },
    #[error("container needs {mem_mb} MB but target `{target}` has {memory_mib} MiB")]
    MemoryExceedsTarget { target: String, mem_mb: u32, memory_mib: u64 },
    #[error("{0}")]
    InvalidOption(&'static str),
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    /// Restrict the run to these inventory targets.
    pub targets: Option<Vec<String>>,
    pub suite_command: String,
    pub max_parallel_targets: usize,
    pub timeout: Duration,
    pub created_at: DateTime<Utc>,
    pub nonce: u32,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            targets: None,
            suite_command: DEFAULT_SUITE_COMMAND.to_string(),
            max_parallel_targets: 4,
            timeout: DEFAULT_TIMEOUT,
            created_at: Utc::now(),
            nonce: rand::random(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub run_id: String,
    pub container: ContainerSpec,
    pub targets: Vec<TargetDescriptor>,
    pub suite_command: String,
    pub max_parallel_targets: usize,
    pub timeout: Duration,
    pub created_at: DateTime<Utc>,
}

/// Run ids are `<UTC timestamp>-<nonce as 8 hex digits>`.
pub fn run_id_for(created_at: DateTime<Utc>, nonce: u32) -> String {
    format!("{}-{nonce:08x}", created_at.format("%Y%m%dT%H%M%SZ"))
}

pub fn plan_run(
    inventory: &[TargetDescriptor],
    container: ContainerSpec,
    options: PlanOptions,
) -> Result<RunPlan, PlanError> {
    if inventory.is_empty() {
        return Err(PlanError::EmptyInventory);
    }
    if options.max_parallel_targets == 0 {
        return Err(PlanError::InvalidOption("max_parallel_targets must be at least 1"));
    }
    if options.timeout.is_zero() {
        return Err(PlanError::InvalidOption("timeout must be positive"));
    }
    let targets: Vec<TargetDescriptor> = match &options.targets {
        None => inventory.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                inventory
                    .iter()
                    .find(|t| t.name == *n)
                    .cloned()
                    .ok_or_else(|| PlanError::UnknownTarget(n.clone()))
            })
            .collect::<Result<_, _>>()?,
    };
    if targets.is_empty() {
        return Err(PlanError::EmptyInventory);
    }
    for t in &targets {
        if container.cpu_cores() > t.vcpus {
            return Err(PlanError::CoresExceedTarget {
                target: t.name.clone(),
                cores: container.cpu_cores(),
                vcpus: t.vcpus,
            });
        }
        if u64::from(container.memory_mb()) > t.memory_mib {
            return Err(PlanError::MemoryExceedsTarget {
                target: t.name.clone(),
                mem_mb: container.memory_mb(),
                memory_mib: t.memory_mib,
            });
        }
    }
    Ok(RunPlan {
        run_id: run_id_for(options.created_at, options.nonce),
        container,
        targets,
        suite_command: options.suite_command,
        max_parallel_targets: options.max_parallel_targets,
        timeout: options.timeout,
        created_at: options.created_at,
    })
}

/// A provisioned container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerHandle {
    pub id: String,
    pub target: String,
    pub run_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutput {
    pub stdout: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("timed out")]
    TimedOut,
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("target unreachable: {0}")]
    Unreachable(String),
    #[error("{0}")]
    Failed(String),
}

/// What the orchestrator needs from anything that can run containers.
///
/// `teardown` is called for every handle `provision` returned, whatever
/// happened in between.
pub trait Executor: Send + Sync {
    fn provision(
        &self,
        target: &TargetDescriptor,
        container: &ContainerSpec,
        run_id: &str,
    ) -> Result<ContainerHandle, ExecError>;

    fn exec(&self, handle: &ContainerHandle, command: &str, timeout: Duration) -> Result<ExecOutput, ExecError>;

    fn teardown(&self, handle: ContainerHandle) -> Result<(), ExecError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    Provision(ExecError),
    Exec(ExecError),
    ExitStatus(i32),
    Parse(FormatError),
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::Provision(e) => write!(f, "provision failed: {e}"),
            FailureReason::Exec(e) => write!(f, "exec failed: {e}"),
            FailureReason::ExitStatus(c) => write!(f, "suite exited with status {c}"),
            FailureReason::Parse(e) => write!(f, "unusable output: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetRunStatus {
    Succeeded,
    Failed(FailureReason),
    TimedOut,
}

impl TargetRunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TargetRunStatus::Succeeded => "Succeeded",
            TargetRunStatus::Failed(_) => "Failed",
            TargetRunStatus::TimedOut => "TimedOut",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetOutcome {
    pub target: String,
    pub status: TargetRunStatus,
    pub duration: Duration,
    pub records: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub container: ContainerSpec,
    pub started: DateTime<Utc>,
    /// In plan order.
    pub outcomes: Vec<TargetOutcome>,
    /// Records of succeeded targets, in canonical order.
    pub records: Vec<BenchmarkRecord>,
    pub elapsed: Duration,
}

impl RunResult {
    pub fn succeeded(&self) -> usize {
        self.outcomes.iter().filter(|o| o.status == TargetRunStatus::Succeeded).count()
    }

    pub fn metadata(&self) -> RunMetadata {
        let finished = self.started + chrono::Duration::from_std(self.elapsed).unwrap_or_default();
        RunMetadata::new(
            self.run_id.clone(),
            self.container.memory_mb(),
            self.container.cpu_cores(),
            self.started,
            finished,
        )
        .expect("run ids are generated as valid tokens")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetState {
    Pending,
    Running,
    Succeeded,
    Failed,
    TimedOut,
}

impl TargetState {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetState::Pending => "Pending",
            TargetState::Running => "Running",
            TargetState::Succeeded => "Succeeded",
            TargetState::Failed => "Failed",
            TargetState::TimedOut => "TimedOut",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TargetState::Succeeded | TargetState::Failed | TargetState::TimedOut)
    }
}

impl From<&TargetRunStatus> for TargetState {
    fn from(s: &TargetRunStatus) -> Self {
        match s {
            TargetRunStatus::Succeeded => TargetState::Succeeded,
            TargetRunStatus::Failed(_) => TargetState::Failed,
            TargetRunStatus::TimedOut => TargetState::TimedOut,
        }
    }
}

/// Receives per-target progress while a run executes.
pub trait RunObserver: Sync {
    fn target_changed(&self, target: &str, state: TargetState, elapsed: Duration);
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {
    fn target_changed(&self, _: &str, _: TargetState, _: Duration) {}
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("all {} targets failed", .0.outcomes.len())]
    AllTargetsFailed(Box<RunResult>),
    #[error("could not store run `{}`: {source}; output preserved in {}", result.run_id, salvage.display())]
    RepositoryWriteFailure {
        source: Box<RepositoryError>,
        salvage: PathBuf,
        result: Box<RunResult>,
    },
}

fn benchmark_target(
    plan: &RunPlan,
    meta: &RunMetadata,
    target: &TargetDescriptor,
    executor: &dyn Executor,
    catalog: &AttributeCatalog,
) -> (TargetRunStatus, Vec<BenchmarkRecord>, Vec<String>) {
    let handle = match executor.provision(target, &plan.container, &plan.run_id) {
        Ok(h) => h,
        Err(ExecError::TimedOut) => return (TargetRunStatus::TimedOut, Vec::new(), Vec::new()),
        Err(e) => return (TargetRunStatus::Failed(FailureReason::Provision(e)), Vec::new(), Vec::new()),
    };
    let output = executor.exec(&handle, &plan.suite_command, plan.timeout);
    let mut warnings = Vec::new();
    if let Err(e) = executor.teardown(handle) {
        warnings.push(format!("teardown failed: {e}"));
    }
    let output = match output {
        Ok(o) if o.exit_code == 0 => o,
        Ok(o) => return (TargetRunStatus::Failed(FailureReason::ExitStatus(o.exit_code)), Vec::new(), warnings),
        Err(ExecError::TimedOut) => return (TargetRunStatus::TimedOut, Vec::new(), warnings),
        Err(e) => return (TargetRunStatus::Failed(FailureReason::Exec(e)), Vec::new(), warnings),
    };
    match parse_output(&output.stdout, catalog, meta, &target.name) {
        Ok(parsed) => {
            warnings.extend(parsed.warnings);
            // The plan, not the container, decides what a record belongs to.
            let records = parsed
                .records
                .into_iter()
                .map(|mut r| {
                    r.target_name = target.name.clone();
                    r.run_id = plan.run_id.clone();
                    r.container_mem_mb = plan.container.memory_mb();
                    r.cpu_cores = plan.container.cpu_cores();
                    r.timestamp = plan.created_at;
                    r.role = RecordRole::Current;
                    r
                })
                .collect();
            (TargetRunStatus::Succeeded, records, warnings)
        }
        Err(e) => (TargetRunStatus::Failed(FailureReason::Parse(e)), Vec::new(), warnings),
    }
}

/// A finished target and the records it produced.
type Settled = (TargetOutcome, Vec<BenchmarkRecord>);

/// Benchmarks every plan target, at most `max_parallel_targets` at a time.
/// A failing target never stops the others.
pub fn collect_run(
    plan: &RunPlan,
    executor: &dyn Executor,
    catalog: &AttributeCatalog,
    observer: &dyn RunObserver,
) -> RunResult {
    let run_start = Instant::now();
    let meta = RunMetadata::new(
        plan.run_id.clone(),
        plan.container.memory_mb(),
        plan.container.cpu_cores(),
        plan.created_at,
        plan.created_at,
    )
    .expect("run ids are generated as valid tokens");

    for t in &plan.targets {
        observer.target_changed(&t.name, TargetState::Pending, Duration::ZERO);
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Settled>>> =
        Mutex::new(vec![None; plan.targets.len()]);
    let workers = plan.max_parallel_targets.min(plan.targets.len()).max(1);

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(target) = plan.targets.get(i) else { break };
                let started = Instant::now();
                observer.target_changed(&target.name, TargetState::Running, Duration::ZERO);
                let (status, records, warnings) = benchmark_target(plan, &meta, target, executor, catalog);
                let duration = started.elapsed();
                for w in &warnings {
                    log::warn!("{}: {w}", target.name);
                }
                observer.target_changed(&target.name, (&status).into(), duration);
                let outcome = TargetOutcome {
                    target: target.name.clone(),
                    status,
                    duration,
                    records: records.len(),
                    warnings,
                };
                slots.lock().expect("slot lock")[i] = Some((outcome, records));
            });
        }
    });

    let mut outcomes = Vec::with_capacity(plan.targets.len());
    let mut records = Vec::new();
    for slot in slots.into_inner().expect("slot lock") {
        let (outcome, recs) = slot.expect("every target is processed");
        outcomes.push(outcome);
        records.extend(recs);
    }
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    RunResult {
        run_id: plan.run_id.clone(),
        container: plan.container,
        started: plan.created_at,
        outcomes,
        records,
        elapsed: run_start.elapsed(),
    }
}

/// Appends a collected run to the repository. If the append fails the
/// canonical output is written to a salvage file next to the store.
pub fn store_run(result: RunResult, repo: &mut Repository) -> Result<(RunResult, CommitAck), RunError> {
    if result.records.is_empty() {
        return Err(RunError::AllTargetsFailed(Box::new(result)));
    }
    match repo.append_run(result.metadata(), result.records.clone()) {
        Ok(ack) => Ok((result, ack)),
        Err(source) => {
            let salvage = repo.salvage_path(&result.run_id);
            match benchlite_core::emit_canonical(&result.records) {
                Ok(text) => {
                    if let Err(e) = fs::write(&salvage, text) {
                        log::error!("could not write salvage file {}: {e}", salvage.display());
                    }
                }
                Err(e) => log::error!("could not serialize run {}: {e}", result.run_id),
            }
            Err(RunError::RepositoryWriteFailure {
                source: Box::new(source),
                salvage,
                result: Box::new(result),
            })
        }
    }
}

/// Collects and stores a run in one go.
pub fn execute_run(
    plan: &RunPlan,
    executor: &dyn Executor,
    repo: &mut Repository,
    observer: &dyn RunObserver,
) -> Result<(RunResult, CommitAck), RunError> {
    let catalog = repo.catalog().clone();
    let result = collect_run(plan, executor, &catalog, observer);
    store_run(result, repo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn target(name: &str, vcpus: u32, mem: u64) -> TargetDescriptor {
        TargetDescriptor::new(name, "local", vcpus, mem).unwrap()
    }

    fn inventory(n: usize) -> Vec<TargetDescriptor> {
        (0..n).map(|i| target(&format!("vm{i}"), 4, 15_360)).collect()
    }

    fn opts() -> PlanOptions {
        PlanOptions {
            created_at: Utc.with_ymd_and_hms(2024, 1, 2, 3, 4, 5).unwrap(),
            nonce: 42,
            ..PlanOptions::default()
        }
    }

    #[test]
    fn plan_covers_inventory() {
        let plan = plan_run(&inventory(10), ContainerSpec::new(100, 1).unwrap(), opts()).unwrap();
        assert_eq!(plan.targets.len(), 10);
        assert_eq!(plan.run_id, "20240102T030405Z-0000002a");
        assert_eq!(plan.timeout, DEFAULT_TIMEOUT);
    }

    #[test]
    fn plan_boundary_memory() {
        let inv = vec![target("small", 1, 512)];
        assert!(plan_run(&inv, ContainerSpec::new(512, 1).unwrap(), opts()).is_ok());
        assert!(matches!(
            plan_run(&inv, ContainerSpec::new(513, 1).unwrap(), opts()),
            Err(PlanError::MemoryExceedsTarget { .. })
        ));
    }

    #[test]
    fn plan_rejects_too_many_cores() {
        let inv = vec![target("big", 8, 1024), target("m2.xlarge", 2, 17_510)];
        assert_eq!(
            plan_run(&inv, ContainerSpec::new(100, 4).unwrap(), opts()),
            Err(PlanError::CoresExceedTarget {
                target: "m2.xlarge".into(),
                cores: 4,
                vcpus: 2
            })
        );
    }

    #[test]
    fn plan_errors() {
        assert_eq!(
            plan_run(&[], ContainerSpec::new(100, 1).unwrap(), opts()),
            Err(PlanError::EmptyInventory)
        );
        let filtered = PlanOptions {
            targets: Some(vec!["nope".into()]),
            ..opts()
        };
        assert_eq!(
            plan_run(&inventory(2), ContainerSpec::new(100, 1).unwrap(), filtered),
            Err(PlanError::UnknownTarget("nope".into()))
        );
        let subset = PlanOptions {
            targets: Some(vec!["vm1".into()]),
            ..opts()
        };
        let plan = plan_run(&inventory(3), ContainerSpec::new(100, 1).unwrap(), subset).unwrap();
        assert_eq!(plan.targets.len(), 1);
    }
}
