// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use benchlite::files::{load_inventory, read_text};
use benchlite::mock::{MockExecutor, MockProfile};
use benchlite::orchestrator::{plan_run, PlanOptions, RunPlan};
use benchlite_core::{AttributeCatalog, ContainerSpec, TargetDescriptor};
use chrono::{TimeZone, Utc};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fleet() -> Vec<TargetDescriptor> {
    load_inventory(&fixture("fleet.inventory")).unwrap()
}

pub fn profile() -> MockProfile {
    MockProfile::parse(&read_text(&fixture("mock_fleet.profile")).unwrap(), &AttributeCatalog::builtin()).unwrap()
}

pub fn mock(seed: u64) -> MockExecutor {
    MockExecutor::new(profile(), &AttributeCatalog::builtin(), seed)
}

/// Plan with a fixed timestamp and nonce so runs are reproducible.
pub fn plan(mem_mb: u32, targets: Option<&[&str]>) -> RunPlan {
    plan_run(
        &fleet(),
        ContainerSpec::new(mem_mb, 1).unwrap(),
        PlanOptions {
            targets: targets.map(|t| t.iter().map(|s| s.to_string()).collect()),
            max_parallel_targets: 4,
            timeout: Duration::from_secs(5),
            created_at: Utc.with_ymd_and_hms(2026, 2, 1, 9, 30, 0).unwrap(),
            nonce: 0x2a,
            ..PlanOptions::default()
        },
    )
    .unwrap()
}
