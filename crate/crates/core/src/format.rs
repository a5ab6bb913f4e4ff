// SPDX-License-Identifier: Apache-2.0

//! Benchmark records and the canonical line format they travel in.
//!
//! A canonical block is a header line followed by one `attribute_id|unit|value`
//! line per measured attribute:
//!
//! ```text
//! #benchlite-v1 run=20240101T000000Z-0000002a target=m3.xlarge mem=100 cores=1 ts=2024-01-01T00:00:00Z
//! mem.latency.main|ns|91.6
//! bw.mem.read|MB/s|6120.5
//! ```
//!
//! Historic blocks carry a trailing `role=historic` token. A store file and an
//! import file are both plain concatenations of blocks.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::model::AttributeCatalog;

/// Leading token of every canonical header line.
pub const FORMAT_TAG: &str = "#benchlite-v1";

/// Whether a record came from the latest run or is baseline/older data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecordRole {
    Current,
    Historic,
}

impl RecordRole {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordRole::Current => "current",
            RecordRole::Historic => "historic",
        }
    }
}

impl core::str::FromStr for RecordRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "current" => Ok(RecordRole::Current),
            "historic" => Ok(RecordRole::Historic),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

/// One measured attribute value for one target, container size and run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub target_name: String,
    pub attribute_id: String,
    pub value: f64,
    pub unit: String,
    pub container_mem_mb: u32,
    pub cpu_cores: u32,
    pub run_id: String,
    pub timestamp: DateTime<Utc>,
    pub role: RecordRole,
}

impl BenchmarkRecord {
    /// Canonical ordering key: target, then attribute id.
    pub fn sort_key(&self) -> (&str, &str) {
        (&self.target_name, &self.attribute_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMetadata {
    pub run_id: String,
    pub container_mem_mb: u32,
    pub cpu_cores: u32,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub tool: String,
    pub tool_version: String,
}

impl RunMetadata {
    pub fn new(
        run_id: impl Into<String>,
        container_mem_mb: u32,
        cpu_cores: u32,
        started: DateTime<Utc>,
        finished: DateTime<Utc>,
    ) -> Result<Self, FormatError> {
        let run_id = run_id.into();
        check_token("run", &run_id)?;
        if finished < started {
            return Err(FormatError::InvalidField {
                field: "finished",
                value: finished.to_rfc3339(),
            });
        }
        Ok(Self {
            run_id,
            container_mem_mb,
            cpu_cores,
            started,
            finished,
            tool: "benchlite-canonical".to_string(),
            tool_version: "1".to_string(),
        })
    }
}

/// Parsed `#benchlite-v1` header line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub run_id: String,
    pub target_name: String,
    pub container_mem_mb: u32,
    pub cpu_cores: u32,
    pub timestamp: DateTime<Utc>,
    pub role: RecordRole,
}

impl Header {
    pub fn parse(line: &str) -> Result<Self, String> {
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(FORMAT_TAG) {
            return Err(format!("header must start with `{FORMAT_TAG}`"));
        }
        let (mut run, mut target, mut mem, mut cores, mut ts) = (None, None, None, None, None);
        let mut role = RecordRole::Current;
        for token in tokens {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| format!("header token `{token}` is not key=value"))?;
            match key {
                "run" => run = Some(value.to_string()),
                "target" => target = Some(value.to_string()),
                "mem" => {
                    mem = Some(value.parse().map_err(|_| format!("invalid mem `{value}`"))?)
                }
                "cores" => {
                    cores = Some(value.parse().map_err(|_| format!("invalid cores `{value}`"))?)
                }
                "ts" => {
                    let parsed = DateTime::parse_from_rfc3339(value)
                        .map_err(|e| format!("invalid ts `{value}`: {e}"))?;
                    ts = Some(parsed.with_timezone(&Utc));
                }
                "role" => role = value.parse()?,
                other => return Err(format!("unknown header key `{other}`")),
            }
        }
        let missing = |k: &str| format!("header is missing `{k}`");
        Ok(Self {
            run_id: run.ok_or_else(|| missing("run"))?,
            target_name: target.ok_or_else(|| missing("target"))?,
            container_mem_mb: mem.ok_or_else(|| missing("mem"))?,
            cpu_cores: cores.ok_or_else(|| missing("cores"))?,
            timestamp: ts.ok_or_else(|| missing("ts"))?,
            role,
        })
    }

    fn of(record: &BenchmarkRecord) -> Self {
        Self {
            run_id: record.run_id.clone(),
            target_name: record.target_name.clone(),
            container_mem_mb: record.container_mem_mb,
            cpu_cores: record.cpu_cores,
            timestamp: record.timestamp,
            role: record.role,
        }
    }
}

impl core::fmt::Display for Header {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{FORMAT_TAG} run={} target={} mem={} cores={} ts={}",
            self.run_id,
            self.target_name,
            self.container_mem_mb,
            self.cpu_cores,
            self.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true)
        )?;
        if self.role == RecordRole::Historic {
            write!(f, " role={}", self.role.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("no recognized attributes in benchmark output")]
    NoRecognizedAttributes,
    #[error("line {line}: malformed value `{text}`")]
    MalformedValue { line: usize, text: String },
    #[error("line {line}: attribute `{attribute}` reported in `{found}`, catalog expects `{expected}`")]
    UnitMismatch {
        line: usize,
        attribute: String,
        expected: String,
        found: String,
    },
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: data line before any header")]
    MissingHeader { line: usize },
    #[error("line {line}: attribute `{attribute}` repeated for target `{target}` in run `{run_id}`")]
    DuplicateAttribute {
        line: usize,
        run_id: String,
        target: String,
        attribute: String,
    },
    #[error("no records to emit")]
    EmptyRecords,
    #[error("records span several runs (`{0}` and `{1}`)")]
    MixedRuns(String, String),
    #[error("records for target `{0}` disagree on container size, role or timestamp")]
    InconsistentRun(String),
    #[error("invalid {field} `{value}`")]
    InvalidField { field: &'static str, value: String },
}

/// Records recognized in a piece of tool output, plus one warning per line
/// that was skipped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedOutput {
    pub records: Vec<BenchmarkRecord>,
    pub warnings: Vec<String>,
}

/// Parses benchmark output for one target.
///
/// Header-less output inherits run, container size and timestamp from `meta`
/// and the target from `target_name`; a `#benchlite-v1` header overrides
/// those for the lines that follow it. Records come back in canonical order.
pub fn parse_output(
    text: &str,
    catalog: &AttributeCatalog,
    meta: &RunMetadata,
    target_name: &str,
) -> Result<ParsedOutput, FormatError> {
    let defaults = Header {
        run_id: meta.run_id.clone(),
        target_name: target_name.to_string(),
        container_mem_mb: meta.container_mem_mb,
        cpu_cores: meta.cpu_cores,
        timestamp: meta.started,
        role: RecordRole::Current,
    };
    parse_lines(text, catalog, Some(defaults))
}

/// Parses fully self-describing canonical text (every data line must follow a
/// header), as found in store and import files.
pub fn parse_canonical(text: &str, catalog: &AttributeCatalog) -> Result<ParsedOutput, FormatError> {
    parse_lines(text, catalog, None)
}

fn parse_lines(
    text: &str,
    catalog: &AttributeCatalog,
    defaults: Option<Header>,
) -> Result<ParsedOutput, FormatError> {
    let mut out = ParsedOutput::default();
    let mut seen: BTreeSet<(String, String, String)> = BTreeSet::new();
    let mut context = defaults;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(FORMAT_TAG) {
            let header = Header::parse(line).map_err(|reason| FormatError::MalformedHeader {
                line: line_no,
                reason,
            })?;
            context = Some(header);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 3 {
            out.warnings.push(format!("line {line_no}: not an attribute line"));
            continue;
        }
        let (attribute_id, unit, value_text) = (fields[0], fields[1], fields[2]);
        let Some(descriptor) = catalog.get(attribute_id) else {
            out.warnings
                .push(format!("line {line_no}: unrecognized attribute `{attribute_id}`"));
            continue;
        };
        let header = context.as_ref().ok_or(FormatError::MissingHeader { line: line_no })?;
        if descriptor.unit != unit {
            return Err(FormatError::UnitMismatch {
                line: line_no,
                attribute: attribute_id.to_string(),
                expected: descriptor.unit.clone(),
                found: unit.to_string(),
            });
        }
        let value: f64 = value_text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| FormatError::MalformedValue {
                line: line_no,
                text: value_text.to_string(),
            })?;
        let key = (
            header.run_id.clone(),
            header.target_name.clone(),
            attribute_id.to_string(),
        );
        if !seen.insert(key) {
            return Err(FormatError::DuplicateAttribute {
                line: line_no,
                run_id: header.run_id.clone(),
                target: header.target_name.clone(),
                attribute: attribute_id.to_string(),
            });
        }
        out.records.push(BenchmarkRecord {
            target_name: header.target_name.clone(),
            attribute_id: attribute_id.to_string(),
            value,
            unit: unit.to_string(),
            container_mem_mb: header.container_mem_mb,
            cpu_cores: header.cpu_cores,
            run_id: header.run_id.clone(),
            timestamp: header.timestamp,
            role: header.role,
        });
    }

    if out.records.is_empty() {
        return Err(FormatError::NoRecognizedAttributes);
    }
    out.records
        .sort_by(|a, b| (a.run_id.as_str(), a.sort_key()).cmp(&(b.run_id.as_str(), b.sort_key())));
    Ok(out)
}

fn check_token(field: &'static str, value: &str) -> Result<(), FormatError> {
    if value.is_empty() || value.contains(|c: char| c.is_whitespace() || c == '|' || c == '=') {
        return Err(FormatError::InvalidField {
            field,
            value: value.to_string(),
        });
    }
    Ok(())
}

/// Emits the canonical text for the records of one run: one block per
/// target, targets and attributes in lexical order. The output does not
/// depend on the order of `records`.
pub fn emit_canonical(records: &[BenchmarkRecord]) -> Result<String, FormatError> {
    let first = records.first().ok_or(FormatError::EmptyRecords)?;
    if let Some(other) = records.iter().find(|r| r.run_id != first.run_id) {
        return Err(FormatError::MixedRuns(first.run_id.clone(), other.run_id.clone()));
    }
    check_token("run", &first.run_id)?;

    let mut sorted: Vec<&BenchmarkRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut out = String::new();
    let mut current: Option<Header> = None;
    for record in sorted {
        check_token("target", &record.target_name)?;
        check_token("attribute", &record.attribute_id)?;
        if record.unit.is_empty() || record.unit.contains(['|', '\n', '\r']) {
            return Err(FormatError::InvalidField {
                field: "unit",
                value: record.unit.clone(),
            });
        }
        if !(record.value.is_finite() && record.value >= 0.0) {
            return Err(FormatError::InvalidField {
                field: "value",
                value: format!("{}", record.value),
            });
        }
        let header = Header::of(record);
        match &current {
            Some(h) if h.target_name == header.target_name => {
                if *h != header {
                    return Err(FormatError::InconsistentRun(header.target_name));
                }
            }
            _ => {
                // Every record of a run must share container limits and role.
                if record.container_mem_mb != first.container_mem_mb
                    || record.cpu_cores != first.cpu_cores
                    || record.role != first.role
                {
                    return Err(FormatError::InconsistentRun(header.target_name));
                }
                let _ = writeln!(out, "{header}");
                current = Some(header);
            }
        }
        let _ = writeln!(
            out,
            "{}|{}|{}",
            record.attribute_id, record.unit, record.value
        );
    }
    Ok(out)
}
