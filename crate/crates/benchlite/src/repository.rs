// SPDX-License-Identifier: Apache-2.0

//! Append-only benchmark repository backed by a single file of canonical
//! blocks. The in-memory index is rebuilt from the file on open.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use benchlite_core::{
    emit_canonical, parse_canonical, AttributeCatalog, BenchmarkRecord, FormatError, IndexError,
    QueryRole, RecordIndex, RecordRole, RunMetadata, TargetStatus,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Corrupt { path: PathBuf, source: FormatError },
    #[error("run `{0}` already exists")]
    DuplicateRun(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl From<IndexError> for RepositoryError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::DuplicateRun(id) => RepositoryError::DuplicateRun(id),
            other => RepositoryError::InvariantViolation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitAck {
    pub run_id: String,
    pub records: usize,
    pub targets: usize,
}

#[derive(Debug)]
pub struct Repository {
    path: PathBuf,
    catalog: AttributeCatalog,
    index: RecordIndex,
}

impl Repository {
    /// Opens the store at `path`, creating an empty one if it does not exist.
    pub fn open(path: impl Into<PathBuf>, catalog: AttributeCatalog) -> Result<Self, RepositoryError> {
        let path = path.into();
        let io_err = |source| RepositoryError::Io {
            path: path.clone(),
            source,
        };
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                File::create(&path).map_err(io_err)?;
                String::new()
            }
            Err(e) => return Err(io_err(e)),
        };
        let index = if text.lines().all(|l| l.trim().is_empty()) {
            RecordIndex::new()
        } else {
            let parsed = parse_canonical(&text, &catalog).map_err(|source| RepositoryError::Corrupt {
                path: path.clone(),
                source,
            })?;
            for w in &parsed.warnings {
                log::warn!("{}: {w}", path.display());
            }
            // parse_canonical sorts; rebuild in file order so recency ties
            // still follow append order.
            let mut records = parsed.records;
            let order = run_order(&text);
            records.sort_by_key(|r| order.iter().position(|id| *id == r.run_id));
            RecordIndex::from_records(records)?
        };
        Ok(Self { path, catalog, index })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn catalog(&self) -> &AttributeCatalog {
        &self.catalog
    }

    /// Read-only view of the current contents.
    pub fn index(&self) -> &RecordIndex {
        &self.index
    }

    fn validate(&self, meta: &RunMetadata, records: &[BenchmarkRecord]) -> Result<(), RepositoryError> {
        self.index.check_run(meta, records)?;
        for r in records {
            let desc = self.catalog.get(&r.attribute_id).ok_or_else(|| {
                RepositoryError::InvariantViolation(format!("unknown attribute `{}`", r.attribute_id))
            })?;
            if desc.unit != r.unit {
                return Err(RepositoryError::InvariantViolation(format!(
                    "attribute `{}` has unit `{}`, catalog expects `{}`",
                    r.attribute_id, r.unit, desc.unit
                )));
            }
            if r.container_mem_mb != meta.container_mem_mb || r.cpu_cores != meta.cpu_cores {
                return Err(RepositoryError::InvariantViolation(format!(
                    "record for `{}` does not match the run's container limits",
                    r.target_name
                )));
            }
        }
        Ok(())
    }

    /// Appends one run. The run's blocks are written and synced before the
    /// index is updated.
    pub fn append_run(
        &mut self,
        meta: RunMetadata,
        records: Vec<BenchmarkRecord>,
    ) -> Result<CommitAck, RepositoryError> {
        self.validate(&meta, &records)?;
        let text = emit_canonical(&records)?;
        let io_err = |source| RepositoryError::Io {
            path: self.path.clone(),
            source,
        };
        let mut file = OpenOptions::new().append(true).create(true).open(&self.path).map_err(io_err)?;
        file.write_all(text.as_bytes()).map_err(io_err)?;
        file.sync_data().map_err(io_err)?;

        let ack = CommitAck {
            run_id: meta.run_id.clone(),
            records: records.len(),
            targets: records
                .iter()
                .map(|r| r.target_name.as_str())
                .collect::<std::collections::BTreeSet<_>>()
                .len(),
        };
        self.index.insert_run(meta, records)?;
        Ok(ack)
    }

    /// Imports canonical text as historic baseline data. Every run in the
    /// text is appended separately, with its role forced to historic.
    pub fn import(&mut self, text: &str) -> Result<Vec<CommitAck>, RepositoryError> {
        let parsed = parse_canonical(text, &self.catalog)?;
        let mut runs: Vec<(String, Vec<BenchmarkRecord>)> = Vec::new();
        for mut r in parsed.records {
            r.role = RecordRole::Historic;
            match runs.iter_mut().find(|(id, _)| *id == r.run_id) {
                Some((_, v)) => v.push(r),
                None => runs.push((r.run_id.clone(), vec![r])),
            }
        }
        // Check every run up front so a bad import leaves the store untouched.
        for (id, _) in &runs {
            if self.index.contains_run(id) {
                return Err(RepositoryError::DuplicateRun(id.clone()));
            }
        }
        let mut acks = Vec::new();
        for (run_id, records) in runs {
            let started = records.iter().map(|r| r.timestamp).min().expect("non-empty");
            let finished = records.iter().map(|r| r.timestamp).max().expect("non-empty");
            let meta = RunMetadata::new(run_id, records[0].container_mem_mb, records[0].cpu_cores, started, finished)?;
            acks.push(self.append_run(meta, records)?);
        }
        Ok(acks)
    }

    pub fn query(&self, target: Option<&str>, container_mem_mb: Option<u32>, role: QueryRole) -> Vec<BenchmarkRecord> {
        self.index.query(target, container_mem_mb, role)
    }

    pub fn status<'a, I>(&self, targets: I) -> Vec<(String, TargetStatus)>
    where
        I: IntoIterator<Item = &'a str>,
    {
        self.index.status(targets)
    }

    /// Where a run's output is preserved when it cannot be appended.
    pub fn salvage_path(&self, run_id: &str) -> PathBuf {
        let mut name = self.path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(format!(".salvage-{run_id}"));
        self.path.with_file_name(name)
    }
}

/// Run ids in order of first appearance in a store file.
fn run_order(text: &str) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    for line in text.lines() {
        if let Ok(h) = benchlite_core::Header::parse(line.trim()) {
            if !order.contains(&h.run_id) {
                order.push(h.run_id);
            }
        }
    }
    order
}
