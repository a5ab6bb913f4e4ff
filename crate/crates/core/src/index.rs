// SPDX-License-Identifier: Apache-2.0

//! In-memory index over stored benchmark runs.
//!
//! Records are only ever appended. Which records count as *current* is derived
//! at query time: for every `(target, container size)` pair the most recent
//! current-role run is current, and everything else for that pair (older
//! runs and imported baselines) is historic.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::format::{BenchmarkRecord, RecordRole, RunMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryRole {
    Current,
    Historic,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetStatus {
    Available,
    Missing,
}

impl TargetStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetStatus::Available => "Available",
            TargetStatus::Missing => "Missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("run `{0}` already exists")]
    DuplicateRun(String),
    #[error("record for run `{found}` appended under run `{expected}`")]
    ForeignRecord { expected: String, found: String },
    #[error("run `{0}` has no records")]
    EmptyRun(String),
}

#[derive(Debug, Clone)]
struct RunEntry {
    meta: RunMetadata,
    seq: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RecordIndex {
    records: Vec<BenchmarkRecord>,
    runs: BTreeMap<String, RunEntry>,
}

impl RecordIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds an index from records in append order, deriving run metadata
    /// from the records themselves.
    pub fn from_records(records: Vec<BenchmarkRecord>) -> Result<Self, IndexError> {
        let mut grouped: Vec<(String, Vec<BenchmarkRecord>)> = Vec::new();
        for r in records {
            match grouped.iter_mut().find(|(id, _)| *id == r.run_id) {
                Some((_, v)) => v.push(r),
                None => grouped.push((r.run_id.clone(), alloc::vec![r])),
            }
        }
        let mut index = Self::new();
        for (run_id, recs) in grouped {
            let started = recs.iter().map(|r| r.timestamp).min().expect("non-empty");
            let finished = recs.iter().map(|r| r.timestamp).max().expect("non-empty");
            let meta = RunMetadata {
                run_id,
                container_mem_mb: recs[0].container_mem_mb,
                cpu_cores: recs[0].cpu_cores,
                started,
                finished,
                tool: String::from("benchlite-canonical"),
                tool_version: String::from("1"),
            };
            index.insert_run(meta, recs)?;
        }
        Ok(index)
    }

    pub fn check_run(&self, meta: &RunMetadata, records: &[BenchmarkRecord]) -> Result<(), IndexError> {
        if self.runs.contains_key(&meta.run_id) {
            return Err(IndexError::DuplicateRun(meta.run_id.clone()));
        }
        if records.is_empty() {
            return Err(IndexError::EmptyRun(meta.run_id.clone()));
        }
        if let Some(r) = records.iter().find(|r| r.run_id != meta.run_id) {
            return Err(IndexError::ForeignRecord {
                expected: meta.run_id.clone(),
                found: r.run_id.clone(),
            });
        }
        Ok(())
    }

    pub fn insert_run(&mut self, meta: RunMetadata, records: Vec<BenchmarkRecord>) -> Result<(), IndexError> {
        self.check_run(&meta, &records)?;
        let seq = self.runs.len();
        self.runs.insert(meta.run_id.clone(), RunEntry { meta, seq });
        self.records.extend(records);
        Ok(())
    }

    pub fn contains_run(&self, run_id: &str) -> bool {
        self.runs.contains_key(run_id)
    }

    pub fn run(&self, run_id: &str) -> Option<&RunMetadata> {
        self.runs.get(run_id).map(|e| &e.meta)
    }

    /// Run metadata in append order.
    pub fn runs(&self) -> Vec<&RunMetadata> {
        let mut v: Vec<&RunEntry> = self.runs.values().collect();
        v.sort_by_key(|e| e.seq);
        v.into_iter().map(|e| &e.meta).collect()
    }

    /// Every record in append order.
    pub fn records(&self) -> &[BenchmarkRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// For every `(target, mem)` key, the run id holding its current records.
    fn current_runs(&self) -> BTreeMap<(&str, u32), (DateTime<Utc>, usize, &str)> {
        let mut latest: BTreeMap<(&str, u32), (DateTime<Utc>, usize, &str)> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.role == RecordRole::Current) {
            let seq = self.runs[&r.run_id].seq;
            let candidate = (r.timestamp, seq, r.run_id.as_str());
            latest
                .entry((r.target_name.as_str(), r.container_mem_mb))
                .and_modify(|best| {
                    if (candidate.0, candidate.1) > (best.0, best.1) {
                        *best = candidate;
                    }
                })
                .or_insert(candidate);
        }
        latest
    }

    /// Records matching the filters, in append order.
    pub fn query(
        &self,
        target: Option<&str>,
        container_mem_mb: Option<u32>,
        role: QueryRole,
    ) -> Vec<BenchmarkRecord> {
        let current = self.current_runs();
        self.records
            .iter()
            .filter(|r| target.is_none_or(|t| r.target_name == t))
            .filter(|r| container_mem_mb.is_none_or(|m| r.container_mem_mb == m))
            .filter(|r| {
                let is_current = r.role == RecordRole::Current
                    && current
                        .get(&(r.target_name.as_str(), r.container_mem_mb))
                        .is_some_and(|(_, _, run)| *run == r.run_id);
                match role {
                    QueryRole::Current => is_current,
                    QueryRole::Historic => !is_current,
                    QueryRole::Both => true,
                }
            })
            .cloned()
            .collect()
    }

    /// `Available` iff at least one record exists for the target.
    pub fn status<'a, I>(&self, targets: I) -> Vec<(String, TargetStatus)>
    where
        I: IntoIterator<Item = &'a str>,
    {
        targets
            .into_iter()
            .map(|name| {
                let status = if self.records.iter().any(|r| r.target_name == name) {
                    TargetStatus::Available
                } else {
                    TargetStatus::Missing
                };
                (String::from(name), status)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use chrono::TimeZone;

    fn rec(run: &str, target: &str, mem: u32, hour: u32, role: RecordRole) -> BenchmarkRecord {
        BenchmarkRecord {
            target_name: target.to_string(),
            attribute_id: "mem.latency.main".to_string(),
            value: 90.0,
            unit: "ns".to_string(),
            container_mem_mb: mem,
            cpu_cores: 1,
            run_id: run.to_string(),
            timestamp: Utc.with_ymd_and_hms(2024, 1, 1, hour, 0, 0).unwrap(),
            role,
        }
    }

    fn index(records: Vec<BenchmarkRecord>) -> RecordIndex {
        RecordIndex::from_records(records).unwrap()
    }

    #[test]
    fn newer_run_is_current() {
        let idx = index(vec![
            rec("old", "m3.xlarge", 100, 1, RecordRole::Current),
            rec("new", "m3.xlarge", 100, 2, RecordRole::Current),
        ]);
        let cur = idx.query(Some("m3.xlarge"), Some(100), QueryRole::Current);
        assert_eq!(cur.len(), 1);
        assert_eq!(cur[0].run_id, "new");
        let hist = idx.query(Some("m3.xlarge"), Some(100), QueryRole::Historic);
        assert_eq!(hist[0].run_id, "old");
        assert_eq!(idx.query(None, None, QueryRole::Both).len(), 2);
    }

    #[test]
    fn recency_is_per_container_size() {
        let idx = index(vec![
            rec("a", "t", 100, 1, RecordRole::Current),
            rec("b", "t", 500, 2, RecordRole::Current),
        ]);
        assert_eq!(idx.query(None, None, QueryRole::Current).len(), 2);
        assert!(idx.query(None, None, QueryRole::Historic).is_empty());
    }

    #[test]
    fn imported_historic_never_current() {
        let idx = index(vec![
            rec("cur", "t", 100, 1, RecordRole::Current),
            rec("base", "t", 100, 5, RecordRole::Historic),
        ]);
        let cur = idx.query(None, None, QueryRole::Current);
        assert_eq!(cur.len(), 1);
        assert_eq!(cur[0].run_id, "cur");
        assert_eq!(idx.query(None, None, QueryRole::Historic)[0].run_id, "base");
    }

    #[test]
    fn missing_target_queries_empty() {
        let idx = index(vec![rec("a", "t", 100, 1, RecordRole::Current)]);
        assert!(idx.query(Some("nope"), None, QueryRole::Both).is_empty());
    }

    #[test]
    fn duplicate_and_foreign_runs_rejected() {
        let mut idx = index(vec![rec("a", "t", 100, 1, RecordRole::Current)]);
        let meta = idx.run("a").unwrap().clone();
        assert_eq!(
            idx.insert_run(meta.clone(), vec![rec("a", "t", 100, 1, RecordRole::Current)]),
            Err(IndexError::DuplicateRun("a".into()))
        );
        let mut other = meta;
        other.run_id = "b".into();
        assert!(matches!(
            idx.insert_run(other, vec![rec("c", "t", 100, 1, RecordRole::Current)]),
            Err(IndexError::ForeignRecord { .. })
        ));
    }

    #[test]
    fn status_tracks_availability() {
        let names = ["a", "b", "c"];
        assert!(RecordIndex::new()
            .status(names)
            .iter()
            .all(|(_, s)| *s == TargetStatus::Missing));
        let idx = index(vec![rec("r", "a", 100, 1, RecordRole::Current), rec("r", "c", 100, 1, RecordRole::Current)]);
        let st = idx.status(names);
        assert_eq!(st[0].1, TargetStatus::Available);
        assert_eq!(st[1].1, TargetStatus::Missing);
        assert_eq!(st[2].1, TargetStatus::Available);
    }
}
