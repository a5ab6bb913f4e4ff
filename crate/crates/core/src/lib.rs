// SPDX-License-Identifier: Apache-2.0

//! Core of BenchLite: the attribute model, the canonical benchmark format,
//! the group-normalized VM ranking engine and rank analysis.
//!
//! This crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, clocks, threads or the network lives in the `benchlite` crate.
//!
//! The pipeline for ranking a fleet is:
//!
//! 1. records for one container size are arranged into a [`GroupedMatrix`]
//!    (latency-style attributes negated so that larger is better),
//! 2. every attribute column is z-score normalized ([`normalise`]),
//! 3. each group is reduced to the mean z-score of its attributes and the
//!    target score is the weighted sum over the four groups ([`score_native`],
//!    [`score_hybrid`]),
//! 4. scores are turned into standard competition ranks ([`rank`]).
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod format;
pub mod index;
pub mod model;
pub mod ranking;

pub use analysis::{
    compare, empirical_ranks, rank_correlation, rank_distance_sum, AnalysisError,
    ComparisonRow, RankComparison, TimingVector,
};
pub use format::{
    emit_canonical, parse_canonical, parse_output, BenchmarkRecord, FormatError, Header,
    ParsedOutput, RecordRole, RunMetadata, FORMAT_TAG,
};
pub use index::{IndexError, QueryRole, RecordIndex, TargetStatus};
pub use model::{
    parse_inventory, validate_weights, AttributeCatalog, AttributeDescriptor, CatalogError,
    ContainerSpec, Direction, GroupId, InventoryError, ModelError, TargetDescriptor, WeightError,
    WeightVector,
};
pub use ranking::{
    normalise, organise_groups, rank, rank_targets, score_hybrid, score_native, Column,
    GroupedMatrix, NormalizedColumn, NormalizedMatrix, RankEntry, RankMethod, RankTable,
    RankingError,
};
