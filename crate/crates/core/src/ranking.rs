// SPDX-License-Identifier: Apache-2.0

//! Native and hybrid ranking: group the records, z-score every attribute over
//! the fleet, score each target with the group weights and rank the scores.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::format::{BenchmarkRecord, RecordRole};
use crate::index::{QueryRole, RecordIndex};
use crate::model::{AttributeCatalog, Direction, GroupId, WeightVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankingError {
    #[error("ranking needs at least 2 targets, found {0}")]
    TooFewTargets(usize),
    #[error("target `{target}` has no value for attribute `{attribute}`")]
    RaggedData { target: String, attribute: String },
    #[error("target `{target}` has more than one value for attribute `{attribute}`")]
    DuplicateValue { target: String, attribute: String },
    #[error("attribute `{0}` is not in the catalog")]
    UnknownAttribute(String),
    #[error("non-finite value for attribute `{0}`")]
    NonFinite(String),
    #[error("at least one group weight must be nonzero")]
    AllZeroWeights,
    #[error("current and historic data cover different targets")]
    TargetSetMismatch,
    #[error("not enough {} data to rank", .0.as_str())]
    InsufficientData(RecordRole),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankMethod {
    Native,
    Hybrid,
    Empirical,
}

impl RankMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::Native => "native",
            RankMethod::Hybrid => "hybrid",
            RankMethod::Empirical => "empirical",
        }
    }
}

impl core::str::FromStr for RankMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "native" => Ok(RankMethod::Native),
            "hybrid" => Ok(RankMethod::Hybrid),
            "empirical" => Ok(RankMethod::Empirical),
            other => Err(alloc::format!("unknown method `{other}`")),
        }
    }
}

/// One attribute column across all targets of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub attribute_id: String,
    pub group: GroupId,
    pub values: Vec<f64>,
}

/// Target × attribute values, polarity-adjusted so that larger is better.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedMatrix {
    targets: Vec<String>,
    columns: Vec<Column>,
}

impl GroupedMatrix {
    /// Builds a matrix from already polarity-adjusted columns.
    pub fn new(targets: Vec<String>, columns: Vec<Column>) -> Result<Self, RankingError> {
        if targets.len() < 2 {
            return Err(RankingError::TooFewTargets(targets.len()));
        }
        for col in &columns {
            if col.values.len() != targets.len() {
                let target = targets.get(col.values.len()).cloned().unwrap_or_default();
                return Err(RankingError::RaggedData {
                    target,
                    attribute: col.attribute_id.clone(),
                });
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(RankingError::NonFinite(col.attribute_id.clone()));
            }
        }
        Ok(Self { targets, columns })
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }
}

/// Arranges one record set (one container size, one value per target and
/// attribute) into a matrix. Targets are ordered by name, attributes by
/// catalog position; lower-is-better values are negated.
pub fn organise_groups(
    records: &[BenchmarkRecord],
    catalog: &AttributeCatalog,
) -> Result<GroupedMatrix, RankingError> {
    let targets: Vec<String> = records
        .iter()
        .map(|r| r.target_name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if targets.len() < 2 {
        return Err(RankingError::TooFewTargets(targets.len()));
    }

    let mut cells: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    let mut attrs: BTreeSet<usize> = BTreeSet::new();
    for r in records {
        let pos = catalog
            .position(&r.attribute_id)
            .ok_or_else(|| RankingError::UnknownAttribute(r.attribute_id.clone()))?;
        attrs.insert(pos);
        if cells.insert((pos, r.target_name.as_str()), r.value).is_some() {
            return Err(RankingError::DuplicateValue {
                target: r.target_name.clone(),
                attribute: r.attribute_id.clone(),
            });
        }
    }

    let mut columns = Vec::with_capacity(attrs.len());
    for pos in attrs {
        let desc = &catalog.attributes()[pos];
        let sign = match desc.direction {
            Direction::HigherIsBetter => 1.0,
            Direction::LowerIsBetter => -1.0,
        };
        let values = targets
            .iter()
            .map(|t| {
                cells
                    .get(&(pos, t.as_str()))
                    .map(|v| sign * v)
                    .ok_or_else(|| RankingError::RaggedData {
                        target: t.clone(),
                        attribute: desc.id.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        columns.push(Column {
            attribute_id: desc.id.clone(),
            group: desc.group,
            values,
        });
    }
    GroupedMatrix::new(targets, columns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedColumn {
    pub attribute_id: String,
    pub group: GroupId,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    targets: Vec<String>,
    columns: Vec<NormalizedColumn>,
}

impl NormalizedMatrix {
    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn columns(&self) -> &[NormalizedColumn] {
        &self.columns
    }

    /// Mean z-score of each group's attributes, per target, in
    /// [`GroupId::ALL`] order. A group without attributes aggregates to 0.
    pub fn group_aggregates(&self) -> Vec<[f64; 4]> {
        let mut sums = vec![[0.0; 4]; self.targets.len()];
        let mut counts = [0usize; 4];
        for col in &self.columns {
            let k = col.group.index();
            counts[k] += 1;
            for (row, z) in sums.iter_mut().zip(&col.z) {
                row[k] += z;
            }
        }
        for row in &mut sums {
            for k in 0..4 {
                if counts[k] > 0 {
                    row[k] /= counts[k] as f64;
                }
            }
        }
        sums
    }
}

/// Below this fraction of the column magnitude a standard deviation is
/// treated as zero (constant column up to rounding).
const DEGENERATE_STD: f64 = 1e-12;

/// z-scores every column with its mean and population standard deviation.
/// Columns with zero spread normalize to all zeros.
pub fn normalise(matrix: &GroupedMatrix) -> NormalizedMatrix {
    let m = matrix.targets.len() as f64;
    let columns = matrix
        .columns
        .iter()
        .map(|col| {
            let mean = col.values.iter().sum::<f64>() / m;
            let var = col.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
            let std_dev = libm::sqrt(var);
            let scale = col.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let z = if std_dev <= DEGENERATE_STD * scale || std_dev == 0.0 {
                vec![0.0; col.values.len()]
            } else {
                col.values.iter().map(|v| (v - mean) / std_dev).collect()
            };
            NormalizedColumn {
                attribute_id: col.attribute_id.clone(),
                group: col.group,
                mean,
                std_dev,
                z,
            }
        })
        .collect();
    NormalizedMatrix {
        targets: matrix.targets.clone(),
        columns,
    }
}

/// `S_i = Σ_k W_k · A_ik` where `A_ik` is the mean z-score of group `k`.
pub fn score_native(
    z: &NormalizedMatrix,
    weights: &WeightVector,
) -> Result<Vec<(String, f64)>, RankingError> {
    if weights.is_all_zero() {
        return Err(RankingError::AllZeroWeights);
    }
    let w = weights.as_array();
    Ok(z.targets
        .iter()
        .cloned()
        .zip(z.group_aggregates())
        .map(|(t, agg)| (t, (0..4).map(|k| w[k] * agg[k]).sum()))
        .collect())
}

/// Native score on current data plus native score on separately normalized
/// historic data. Output follows the current matrix's target order.
pub fn score_hybrid(
    current: &NormalizedMatrix,
    historic: &NormalizedMatrix,
    weights: &WeightVector,
) -> Result<Vec<(String, f64)>, RankingError> {
    let now = score_native(current, weights)?;
    let past: BTreeMap<String, f64> = score_native(historic, weights)?.into_iter().collect();
    if past.len() != now.len() {
        return Err(RankingError::TargetSetMismatch);
    }
    now.into_iter()
        .map(|(t, s)| match past.get(&t) {
            Some(h) => Ok((t, s + h)),
            None => Err(RankingError::TargetSetMismatch),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub target: String,
    pub score: f64,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub method: RankMethod,
    pub entries: Vec<RankEntry>,
}

impl RankTable {
    /// Table from explicit ranks (e.g. published rank columns); each score
    /// is set to `-rank` so that score order agrees with rank order.
    pub fn from_ranks<I, S>(method: RankMethod, ranks: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut entries: Vec<RankEntry> = ranks
            .into_iter()
            .map(|(t, rank)| RankEntry {
                target: t.into(),
                score: -f64::from(rank),
                rank,
            })
            .collect();
        entries.sort_by_key(|e| e.rank);
        Self { method, entries }
    }

    pub fn rank_of(&self, target: &str) -> Option<u32> {
        self.entries.iter().find(|e| e.target == target).map(|e| e.rank)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Standard competition ranking, highest score first: a target's rank is one
/// plus the number of targets with a strictly higher score. Ties keep their
/// input order.
pub fn rank(scores: &[(String, f64)], method: RankMethod) -> RankTable {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].1.total_cmp(&scores[a].1));
    let mut entries: Vec<RankEntry> = Vec::with_capacity(scores.len());
    for (pos, &i) in order.iter().enumerate() {
        let rank = match entries.last() {
            Some(prev) if prev.score == scores[i].1 => prev.rank,
            _ => pos as u32 + 1,
        };
        entries.push(RankEntry {
            target: scores[i].0.clone(),
            score: scores[i].1,
            rank,
        });
    }
    RankTable { method, entries }
}

/// Keeps the latest value per `(target, attribute)`, by timestamp and then
/// append order.
fn latest_per_cell(records: Vec<BenchmarkRecord>) -> Vec<BenchmarkRecord> {
    let mut latest: BTreeMap<(String, String), BenchmarkRecord> = BTreeMap::new();
    for r in records {
        let key = (r.target_name.clone(), r.attribute_id.clone());
        match latest.get(&key) {
            Some(prev) if prev.timestamp > r.timestamp => {}
            _ => {
                latest.insert(key, r);
            }
        }
    }
    latest.into_values().collect()
}

/// Ranks every target that has current data at `container_mem_mb`.
///
/// Hybrid ranking pairs that with the most recent historic value of each
/// attribute for the same targets, regardless of the size it was taken at.
pub fn rank_targets(
    weights: &WeightVector,
    index: &RecordIndex,
    method: RankMethod,
    container_mem_mb: u32,
    catalog: &AttributeCatalog,
) -> Result<RankTable, RankingError> {
    if weights.is_all_zero() {
        return Err(RankingError::AllZeroWeights);
    }
    let current = index.query(None, Some(container_mem_mb), QueryRole::Current);
    let targets: BTreeSet<&str> = current.iter().map(|r| r.target_name.as_str()).collect();
    if targets.len() < 2 {
        return Err(RankingError::InsufficientData(RecordRole::Current));
    }
    let z_current = normalise(&organise_groups(&current, catalog)?);

    let scores = match method {
        RankMethod::Native => score_native(&z_current, weights)?,
        RankMethod::Hybrid => {
            let historic: Vec<BenchmarkRecord> = index
                .query(None, None, QueryRole::Historic)
                .into_iter()
                .filter(|r| targets.contains(r.target_name.as_str()))
                .collect();
            if historic.is_empty() {
                return Err(RankingError::InsufficientData(RecordRole::Historic));
            }
            let z_hist = normalise(&organise_groups(&latest_per_cell(historic), catalog)?);
            if z_hist.targets().len() != targets.len() {
                return Err(RankingError::TargetSetMismatch);
            }
            score_hybrid(&z_current, &z_hist, weights)?
        }
        RankMethod::Empirical => unreachable!("empirical ranks come from timings"),
    };
    Ok(rank(&scores, method))
}
