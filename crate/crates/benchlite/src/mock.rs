// SPDX-License-Identifier: Apache-2.0

//! Executor that fabricates suite output from a profile, for running the whole
//! pipeline without any cloud or container runtime.
//!
//! Each profile line `target|attribute_id|base_value|noise_fraction` yields
//! `base × (1 + ε)` with `|ε| ≤ noise_fraction`. `ε` is drawn from a ChaCha
//! stream keyed by the seed, target, attribute and run id, so a given
//! `(seed, plan)` always produces the same output.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use benchlite_core::{AttributeCatalog, ContainerSpec, TargetDescriptor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::orchestrator::{ContainerHandle, ExecError, ExecOutput, Executor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MockError {
    #[error("profile line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("profile line {line}: attribute `{attribute}` is not in the catalog")]
    UnknownAttribute { line: usize, attribute: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub attribute_id: String,
    pub base: f64,
    pub noise: f64,
}

/// Per-target base values and noise fractions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MockProfile {
    targets: BTreeMap<String, Vec<ProfileEntry>>,
}

impl MockProfile {
    pub fn parse(text: &str, catalog: &AttributeCatalog) -> Result<Self, MockError> {
        let mut profile = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |reason: String| MockError::Parse { line, reason };
            let f: Vec<&str> = trimmed.split('|').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", f.len())));
            }
            if catalog.get(f[1]).is_none() {
                return Err(MockError::UnknownAttribute {
                    line,
                    attribute: f[1].to_string(),
                });
            }
            let base: f64 = f[2]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| err(format!("invalid base value `{}`", f[2])))?;
            let noise: f64 = f[3]
                .parse()
                .ok()
                .filter(|v: &f64| (0.0..1.0).contains(v))
                .ok_or_else(|| err(format!("noise fraction `{}` must be in [0, 1)", f[3])))?;
            let entries = profile.targets.entry(f[0].to_string()).or_default();
            if entries.iter().any(|e| e.attribute_id == f[1]) {
                return Err(err(format!("duplicate attribute `{}` for `{}`", f[1], f[0])));
            }
            entries.push(ProfileEntry {
                attribute_id: f[1].to_string(),
                base,
                noise,
            });
        }
        Ok(profile)
    }

    pub fn insert(&mut self, target: impl Into<String>, entry: ProfileEntry) {
        self.targets.entry(target.into()).or_default().push(entry);
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.targets.keys().map(String::as_str)
    }

    pub fn entries(&self, target: &str) -> Option<&[ProfileEntry]> {
        self.targets.get(target).map(Vec::as_slice)
    }
}

/// Misbehaviour injected for one target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockFault {
    ProvisionFailure,
    Timeout,
    EmptyOutput,
    ExitCode(i32),
    /// Sleep this long before answering `exec`.
    Delay(Duration),
}

pub struct MockExecutor {
    profile: MockProfile,
    units: BTreeMap<String, String>,
    seed: u64,
    faults: Mutex<BTreeMap<String, MockFault>>,
    provisioned: AtomicUsize,
    torn_down: AtomicUsize,
    next_id: AtomicUsize,
}

impl MockExecutor {
    pub fn new(profile: MockProfile, catalog: &AttributeCatalog, seed: u64) -> Self {
        let units = catalog
            .attributes()
            .iter()
            .map(|a| (a.id.clone(), a.unit.clone()))
            .collect();
        Self {
            profile,
            units,
            seed,
            faults: Mutex::new(BTreeMap::new()),
            provisioned: AtomicUsize::new(0),
            torn_down: AtomicUsize::new(0),
            next_id: AtomicUsize::new(0),
        }
    }

    pub fn with_fault(self, target: impl Into<String>, fault: MockFault) -> Self {
        self.faults.lock().expect("fault lock").insert(target.into(), fault);
        self
    }

    pub fn set_fault(&self, target: impl Into<String>, fault: Option<MockFault>) {
        let mut faults = self.faults.lock().expect("fault lock");
        match fault {
            Some(f) => faults.insert(target.into(), f),
            None => faults.remove(&target.into()),
        };
    }

    pub fn provisioned(&self) -> usize {
        self.provisioned.load(Ordering::SeqCst)
    }

    pub fn torn_down(&self) -> usize {
        self.torn_down.load(Ordering::SeqCst)
    }

    fn fault(&self, target: &str) -> Option<MockFault> {
        self.faults.lock().expect("fault lock").get(target).cloned()
    }

    /// `ε` for one measurement, uniform in `[-noise, noise]`.
    pub fn epsilon(&self, target: &str, attribute: &str, run_id: &str, noise: f64) -> f64 {
        if noise == 0.0 {
            return 0.0;
        }
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        for part in [target, attribute, run_id] {
            hasher.update([0u8]);
            hasher.update(part.as_bytes());
        }
        let key: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(key).random_range(-noise..=noise)
    }

    /// Canonical suite output for a target in a given run.
    pub fn render(&self, target: &str, run_id: &str) -> Result<String, ExecError> {
        let entries = self
            .profile
            .entries(target)
            .ok_or_else(|| ExecError::UnknownTarget(target.to_string()))?;
        let mut out = String::new();
        for e in entries {
            let eps = self.epsilon(target, &e.attribute_id, run_id, e.noise);
            let value = e.base * (1.0 + eps);
            let unit = &self.units[&e.attribute_id];
            out.push_str(&format!("{}|{unit}|{value}\n", e.attribute_id));
        }
        Ok(out)
    }
}

impl Executor for MockExecutor {
    fn provision(
        &self,
        target: &TargetDescriptor,
        _container: &ContainerSpec,
        run_id: &str,
    ) -> Result<ContainerHandle, ExecError> {
        if self.profile.entries(&target.name).is_none() {
            return Err(ExecError::UnknownTarget(target.name.clone()));
        }
        if self.fault(&target.name) == Some(MockFault::ProvisionFailure) {
            return Err(ExecError::Unreachable(format!("{}: injected provision failure", target.address)));
        }
        self.provisioned.fetch_add(1, Ordering::SeqCst);
        let n = self.next_id.fetch_add(1, Ordering::SeqCst);
        Ok(ContainerHandle {
            id: format!("mock-{n}"),
            target: target.name.clone(),
            run_id: run_id.to_string(),
        })
    }

    fn exec(&self, handle: &ContainerHandle, _command: &str, timeout: Duration) -> Result<ExecOutput, ExecError> {
        match self.fault(&handle.target) {
            Some(MockFault::Timeout) => Err(ExecError::TimedOut),
            Some(MockFault::EmptyOutput) => Ok(ExecOutput {
                stdout: String::new(),
                exit_code: 0,
            }),
            Some(MockFault::ExitCode(code)) => Ok(ExecOutput {
                stdout: String::new(),
                exit_code: code,
            }),
            Some(MockFault::Delay(d)) if d >= timeout => {
                std::thread::sleep(timeout);
                Err(ExecError::TimedOut)
            }
            Some(MockFault::Delay(d)) => {
                std::thread::sleep(d);
                self.render(&handle.target, &handle.run_id).map(|stdout| ExecOutput { stdout, exit_code: 0 })
            }
            Some(MockFault::ProvisionFailure) | None => self
                .render(&handle.target, &handle.run_id)
                .map(|stdout| ExecOutput { stdout, exit_code: 0 }),
        }
    }

    fn teardown(&self, _handle: ContainerHandle) -> Result<(), ExecError> {
        self.torn_down.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }
}
