// SPDX-License-Identifier: Apache-2.0

//! Loaders for the line-oriented input files: catalog overrides, inventories,
//! timing files, rank files and the published rank-table fixtures.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use benchlite_core::{
    parse_inventory, AttributeCatalog, CatalogError, InventoryError, RankMethod, RankTable,
    TargetDescriptor, TimingVector,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("{}: {source}", path.display())]
    Inventory { path: PathBuf, source: InventoryError },
    #[error("{}: line {line}: {reason}", path.display())]
    Parse { path: PathBuf, line: usize, reason: String },
}

impl LoadError {
    pub fn path(&self) -> &Path {
        match self {
            LoadError::NotFound(p) => p,
            LoadError::Io { path, .. }
            | LoadError::Catalog { path, .. }
            | LoadError::Inventory { path, .. }
            | LoadError::Parse { path, .. } => path,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            LoadError::NotFound(path.to_path_buf())
        } else {
            LoadError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// The builtin catalog, or the override file when one is given. An override
/// replaces the builtin catalog entirely.
pub fn load_catalog(override_path: Option<&Path>) -> Result<AttributeCatalog, LoadError> {
    match override_path {
        None => Ok(AttributeCatalog::builtin()),
        Some(path) => AttributeCatalog::parse(&read_text(path)?).map_err(|source| LoadError::Catalog {
            path: path.to_path_buf(),
            source,
        }),
    }
}

pub fn load_inventory(path: &Path) -> Result<Vec<TargetDescriptor>, LoadError> {
    parse_inventory(&read_text(path)?).map_err(|source| LoadError::Inventory {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment lines split on `|`, with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim();
        (!line.is_empty() && !line.starts_with('#')).then(|| (i + 1, line.split('|').map(str::trim).collect()))
    })
}

/// Reads `target|seconds` lines.
pub fn load_timings(path: &Path) -> Result<TimingVector, LoadError> {
    let text = read_text(path)?;
    let parse_err = |line, reason: String| LoadError::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut entries = Vec::new();
    for (line, fields) in records(&text) {
        if fields.len() != 2 {
            return Err(parse_err(line, format!("expected target|seconds, found {} fields", fields.len())));
        }
        let seconds: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid seconds `{}`", fields[1])))?;
        entries.push((fields[0].to_string(), seconds));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TimingVector::new(label, entries).map_err(|e| parse_err(0, e.to_string()))
}

/// Reads a rank file: `target|rank` or `target|score|rank` lines (the latter
/// is what `benchlite rank --format lines` prints).
pub fn load_rank_file(path: &Path, method: RankMethod) -> Result<RankTable, LoadError> {
    let text = read_text(path)?;
    let parse_err = |line, reason: String| LoadError::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut ranks = Vec::new();
    for (line, fields) in records(&text) {
        let rank_field = match fields.len() {
            2 => fields[1],
            3 => fields[2],
            n => return Err(parse_err(line, format!("expected target|rank, found {n} fields"))),
        };
        let rank: u32 = rank_field
            .parse()
            .ok()
            .filter(|r| *r >= 1)
            .ok_or_else(|| parse_err(line, format!("invalid rank `{rank_field}`")))?;
        if ranks.iter().any(|(t, _): &(String, u32)| t == fields[0]) {
            return Err(parse_err(line, format!("duplicate target `{}`", fields[0])));
        }
        ranks.push((fields[0].to_string(), rank));
    }
    Ok(RankTable::from_ranks(method, ranks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionMode {
    Sequential,
    Parallel,
}

impl ExecutionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecutionMode::Sequential => "seq",
            ExecutionMode::Parallel => "par",
        }
    }
}

/// One published rank-table cell: a target's empirical rank and its
/// benchmark rank for one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureRow {
    pub table: String,
    pub case: u32,
    pub mode: ExecutionMode,
    pub method: RankMethod,
    pub size_mb: u32,
    pub target: String,
    pub empirical: u32,
    pub rank: u32,
}

/// All rows of one `(table, case, mode, method, size)` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureComparison {
    pub table: String,
    pub case: u32,
    pub mode: ExecutionMode,
    pub method: RankMethod,
    pub size_mb: u32,
    pub benchmark: RankTable,
    pub empirical: RankTable,
}

impl FixtureComparison {
    pub fn key(&self) -> String {
        format!(
            "{}/case{}/{}/{}/{}MB",
            self.table,
            self.case,
            self.mode.as_str(),
            self.method.as_str(),
            self.size_mb
        )
    }
}

/// Parses `table|case|mode|method|size|target|empirical|rank` lines.
pub fn parse_fixtures(text: &str) -> Result<Vec<FixtureRow>, (usize, String)> {
    let mut rows = Vec::new();
    for (line, f) in records(text) {
        if f.len() != 8 {
            return Err((line, format!("expected 8 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| s.parse::<u32>().map_err(|_| (line, format!("invalid {what} `{s}`")));
        let mode = match f[2] {
            "seq" | "sequential" => ExecutionMode::Sequential,
            "par" | "parallel" => ExecutionMode::Parallel,
            other => return Err((line, format!("invalid mode `{other}`"))),
        };
        rows.push(FixtureRow {
            table: f[0].to_string(),
            case: num(f[1], "case")?,
            mode,
            method: f[3].parse().map_err(|e| (line, e))?,
            size_mb: num(f[4], "size")?,
            target: f[5].to_string(),
            empirical: num(f[6], "empirical rank")?,
            rank: num(f[7], "rank")?,
        });
    }
    Ok(rows)
}

/// Groups fixture rows into comparisons, in first-appearance order.
pub fn fixture_comparisons(rows: &[FixtureRow]) -> Vec<FixtureComparison> {
    type Key<'a> = (&'a str, u32, ExecutionMode, RankMethod, u32);
    let mut groups: Vec<(Key, Vec<&FixtureRow>)> = Vec::new();
    for row in rows {
        let key = (row.table.as_str(), row.case, row.mode, row.method, row.size_mb);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((table, case, mode, method, size_mb), rows)| FixtureComparison {
            table: table.to_string(),
            case,
            mode,
            method,
            size_mb,
            benchmark: RankTable::from_ranks(method, rows.iter().map(|r| (r.target.clone(), r.rank))),
            empirical: RankTable::from_ranks(
                RankMethod::Empirical,
                rows.iter().map(|r| (r.target.clone(), r.empirical)),
            ),
        })
        .collect()
}

pub fn load_fixtures(path: &Path) -> Result<Vec<FixtureComparison>, LoadError> {
    let rows = parse_fixtures(&read_text(path)?).map_err(|(line, reason)| LoadError::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    })?;
    Ok(fixture_comparisons(&rows))
}
