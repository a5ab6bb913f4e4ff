// SPDX-License-Identifier: Apache-2.0

//! Comparing benchmark-derived ranks against ranks observed from real
//! application runs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::ranking::{rank, RankMethod, RankTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("timings need at least 2 targets, found {0}")]
    TooFewTargets(usize),
    #[error("execution time for `{target}` must be finite and positive, got {seconds}")]
    InvalidTime { target: String, seconds: f64 },
    #[error("target `{0}` appears more than once")]
    DuplicateTarget(String),
    #[error("rank tables cover different targets")]
    TargetSetMismatch,
    #[error("a rank vector is constant, correlation is undefined")]
    ZeroVariance,
}

/// Measured application execution time per target.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingVector {
    label: String,
    entries: Vec<(String, f64)>,
}

impl TimingVector {
    pub fn new(label: impl Into<String>, entries: Vec<(String, f64)>) -> Result<Self, AnalysisError> {
        if entries.len() < 2 {
            return Err(AnalysisError::TooFewTargets(entries.len()));
        }
        let mut seen = BTreeSet::new();
        for (target, seconds) in &entries {
            if !(seconds.is_finite() && *seconds > 0.0) {
                return Err(AnalysisError::InvalidTime {
                    target: target.clone(),
                    seconds: *seconds,
                });
            }
            if !seen.insert(target.as_str()) {
                return Err(AnalysisError::DuplicateTarget(target.clone()));
            }
        }
        Ok(Self {
            label: label.into(),
            entries,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }
}

/// Fastest target gets rank 1; equal times share a rank and the next
/// distinct time skips accordingly. Scores in the table are the times.
pub fn empirical_ranks(timings: &TimingVector) -> RankTable {
    let negated: Vec<(String, f64)> = timings.entries.iter().map(|(t, s)| (t.clone(), -s)).collect();
    let mut table = rank(&negated, RankMethod::Empirical);
    for e in &mut table.entries {
        e.score = -e.score;
    }
    table
}

/// Rank pairs `(benchmark, empirical)` in benchmark-table order.
fn paired(benchmark: &RankTable, empirical: &RankTable) -> Result<Vec<(String, u32, u32)>, AnalysisError> {
    if benchmark.len() != empirical.len() {
        return Err(AnalysisError::TargetSetMismatch);
    }
    benchmark
        .entries
        .iter()
        .map(|e| {
            empirical
                .rank_of(&e.target)
                .map(|re| (e.target.clone(), e.rank, re))
                .ok_or(AnalysisError::TargetSetMismatch)
        })
        .collect()
}

/// `Σ |Rp_i − Re_i|` over the shared targets.
pub fn rank_distance_sum(benchmark: &RankTable, empirical: &RankTable) -> Result<u64, AnalysisError> {
    Ok(paired(benchmark, empirical)?
        .iter()
        .map(|&(_, rp, re)| u64::from(rp.abs_diff(re)))
        .sum())
}

fn pearson(pairs: &[(String, u32, u32)]) -> Result<f64, AnalysisError> {
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| f64::from(p.1)).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| f64::from(p.2)).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(_, x, y) in pairs {
        let dx = f64::from(x) - mean_x;
        let dy = f64::from(y) - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson correlation of the two rank vectors, as a percentage.
///
/// Tied ranks enter as their competition-rank integers. On tie-free inputs
/// this is Spearman's rho.
pub fn rank_correlation(benchmark: &RankTable, empirical: &RankTable) -> Result<f64, AnalysisError> {
    Ok(100.0 * pearson(&paired(benchmark, empirical)?)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub target: String,
    pub benchmark_rank: u32,
    pub empirical_rank: u32,
    pub distance: u32,
}

/// Per-target rank distances plus the two summary figures.
#[derive(Debug, Clone, PartialEq)]
pub struct RankComparison {
    pub rows: Vec<ComparisonRow>,
    pub distance_sum: u64,
    /// Full precision; round only for display.
    pub correlation_pct: f64,
}

pub fn compare(benchmark: &RankTable, empirical: &RankTable) -> Result<RankComparison, AnalysisError> {
    let pairs = paired(benchmark, empirical)?;
    let correlation_pct = 100.0 * pearson(&pairs)?;
    let rows: Vec<ComparisonRow> = pairs
        .into_iter()
        .map(|(target, rp, re)| ComparisonRow {
            target,
            benchmark_rank: rp,
            empirical_rank: re,
            distance: rp.abs_diff(re),
        })
        .collect();
    let distance_sum = rows.iter().map(|r| u64::from(r.distance)).sum();
    Ok(RankComparison {
        rows,
        distance_sum,
        correlation_pct,
    })
}
