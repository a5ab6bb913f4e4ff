// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use benchlite::mock::MockFault;
use benchlite::orchestrator::{
    collect_run, execute_run, FailureReason, NoopObserver, RunError, RunObserver, TargetRunStatus, TargetState,
};
use benchlite::repository::Repository;
use benchlite_core::{AttributeCatalog, FormatError, TargetStatus};
use common::{fleet, mock, plan};

fn store(dir: &tempfile::TempDir) -> Repository {
    Repository::open(dir.path().join("store.blr"), AttributeCatalog::builtin()).unwrap()
}

fn names() -> Vec<String> {
    fleet().into_iter().map(|t| t.name).collect()
}

#[test]
fn full_fleet_run_is_stored() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = store(&dir);
    let exec = mock(42);
    let (result, ack) = execute_run(&plan(100, None), &exec, &mut repo, &NoopObserver).unwrap();
    assert_eq!(result.succeeded(), 10);
    assert_eq!(ack.records, 260);
    assert_eq!(ack.targets, 10);
    assert_eq!(exec.provisioned(), 10);
    assert_eq!(exec.torn_down(), 10);
    assert!(repo.status(names().iter().map(String::as_str)).iter().all(|(_, s)| *s == TargetStatus::Available));
}

#[test]
fn one_timeout_does_not_stop_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = store(&dir);
    let exec = mock(1).with_fault("m2.xlarge", MockFault::Timeout);
    let p = plan(100, Some(&["m1.xlarge", "m2.xlarge", "m3.xlarge"]));
    let (result, ack) = execute_run(&p, &exec, &mut repo, &NoopObserver).unwrap();
    let statuses: Vec<_> = result.outcomes.iter().map(|o| (o.target.as_str(), o.status.label())).collect();
    assert_eq!(
        statuses,
        [("m1.xlarge", "Succeeded"), ("m2.xlarge", "TimedOut"), ("m3.xlarge", "Succeeded")]
    );
    assert_eq!(ack.targets, 2);
    assert_eq!(exec.provisioned(), exec.torn_down());
    let status = repo.status(["m1.xlarge", "m2.xlarge", "m3.xlarge"]);
    assert_eq!(status[1].1, TargetStatus::Missing);
}

#[test]
fn slow_target_hits_the_timeout() {
    let exec = mock(1).with_fault("m1.xlarge", MockFault::Delay(Duration::from_secs(30)));
    let mut p = plan(100, Some(&["m1.xlarge", "m3.xlarge"]));
    p.timeout = Duration::from_millis(200);
    let start = Instant::now();
    let result = collect_run(&p, &exec, &AttributeCatalog::builtin(), &NoopObserver);
    assert!(start.elapsed() < Duration::from_secs(5));
    assert_eq!(result.outcomes[0].status, TargetRunStatus::TimedOut);
    assert_eq!(result.outcomes[1].status, TargetRunStatus::Succeeded);
}

#[test]
fn empty_output_is_a_parse_failure() {
    let exec = mock(1).with_fault("m3.xlarge", MockFault::EmptyOutput);
    let result = collect_run(&plan(100, Some(&["m3.xlarge", "m1.xlarge"])), &exec, &AttributeCatalog::builtin(), &NoopObserver);
    assert_eq!(
        result.outcomes[0].status,
        TargetRunStatus::Failed(FailureReason::Parse(FormatError::NoRecognizedAttributes))
    );
    assert_eq!(result.records.len(), 26);
}

#[test]
fn exit_status_and_provision_failures() {
    let exec = mock(1)
        .with_fault("m1.xlarge", MockFault::ExitCode(3))
        .with_fault("m2.xlarge", MockFault::ProvisionFailure);
    let result = collect_run(
        &plan(100, Some(&["m1.xlarge", "m2.xlarge", "m3.xlarge"])),
        &exec,
        &AttributeCatalog::builtin(),
        &NoopObserver,
    );
    assert_eq!(result.outcomes[0].status, TargetRunStatus::Failed(FailureReason::ExitStatus(3)));
    assert!(matches!(result.outcomes[1].status, TargetRunStatus::Failed(FailureReason::Provision(_))));
    assert_eq!(exec.provisioned(), 2);
    assert_eq!(exec.torn_down(), 2);
}

#[test]
fn partial_run_marks_failed_targets_missing() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = store(&dir);
    let mut exec = mock(9);
    for t in ["m1.xlarge", "m2.4xlarge", "hi1.4xlarge", "hs1.8xlarge"] {
        exec = exec.with_fault(t, MockFault::EmptyOutput);
    }
    let (result, _) = execute_run(&plan(500, None), &exec, &mut repo, &NoopObserver).unwrap();
    assert_eq!(result.succeeded(), 6);
    let status = repo.status(names().iter().map(String::as_str));
    let available = status.iter().filter(|(_, s)| *s == TargetStatus::Available).count();
    assert_eq!((available, status.len() - available), (6, 4));
}

#[test]
fn all_failed_leaves_store_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = store(&dir);
    let exec = mock(1)
        .with_fault("m1.xlarge", MockFault::Timeout)
        .with_fault("m3.xlarge", MockFault::EmptyOutput);
    let err = execute_run(&plan(100, Some(&["m1.xlarge", "m3.xlarge"])), &exec, &mut repo, &NoopObserver).unwrap_err();
    assert!(matches!(err, RunError::AllTargetsFailed(_)));
    assert_eq!(std::fs::read_to_string(repo.path()).unwrap(), "");
}

#[test]
fn failed_append_writes_salvage_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = store(&dir);
    let p = plan(100, Some(&["m1.xlarge", "m3.xlarge"]));
    execute_run(&p, &mock(1), &mut repo, &NoopObserver).unwrap();
    let before = std::fs::read_to_string(repo.path()).unwrap();
    // Replaying the same plan reuses its run id, which the store refuses.
    let err = execute_run(&p, &mock(1), &mut repo, &NoopObserver).unwrap_err();
    let RunError::RepositoryWriteFailure { salvage, .. } = err else { panic!("{err}") };
    assert_eq!(std::fs::read_to_string(&salvage).unwrap(), before);
    assert_eq!(std::fs::read_to_string(repo.path()).unwrap(), before);
}

#[derive(Default)]
struct Recorder(Mutex<Vec<(String, TargetState)>>);

impl RunObserver for Recorder {
    fn target_changed(&self, target: &str, state: TargetState, _: Duration) {
        self.0.lock().unwrap().push((target.to_string(), state));
    }
}

#[test]
fn observer_sees_each_target_advance() {
    let rec = Recorder::default();
    let exec = mock(1).with_fault("m2.xlarge", MockFault::Timeout);
    collect_run(&plan(100, None), &exec, &AttributeCatalog::builtin(), &rec);
    let events = rec.0.into_inner().unwrap();
    for name in names() {
        let seq: Vec<TargetState> = events.iter().filter(|(t, _)| *t == name).map(|(_, s)| *s).collect();
        assert_eq!(seq.len(), 3, "{name}: {seq:?}");
        assert_eq!(seq[..2], [TargetState::Pending, TargetState::Running]);
        let expected = if name == "m2.xlarge" { TargetState::TimedOut } else { TargetState::Succeeded };
        assert_eq!(seq[2], expected);
    }
}

#[test]
fn targets_run_concurrently_up_to_the_limit() {
    let mut exec = mock(1);
    let four = ["m1.xlarge", "m2.xlarge", "m3.xlarge", "m2.2xlarge"];
    for t in four {
        exec = exec.with_fault(t, MockFault::Delay(Duration::from_millis(300)));
    }
    let mut p = plan(100, Some(&four));
    p.max_parallel_targets = 2;
    let result = collect_run(&p, &exec, &AttributeCatalog::builtin(), &NoopObserver);
    assert_eq!(result.succeeded(), 4);
    assert!(result.elapsed >= Duration::from_millis(600));
    assert!(result.elapsed < Duration::from_millis(1150), "{:?}", result.elapsed);
    for o in &result.outcomes {
        assert!(o.duration >= Duration::from_millis(300));
    }
}

#[test]
fn same_seed_same_store_bytes() {
    let bytes = |seed| {
        let dir = tempfile::tempdir().unwrap();
        let mut repo = store(&dir);
        execute_run(&plan(100, None), &mock(seed), &mut repo, &NoopObserver).unwrap();
        std::fs::read(repo.path()).unwrap()
    };
    assert_eq!(bytes(42), bytes(42));
    assert_ne!(bytes(42), bytes(43));
}
