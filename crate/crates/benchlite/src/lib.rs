// SPDX-License-Identifier: Apache-2.0

//! Runtime side of BenchLite: the record repository, the run orchestrator and
//! its executors, report rendering, the HTTP API and the command line.

pub mod cli;
pub mod container;
pub mod files;
pub mod mock;
pub mod orchestrator;
pub mod report;
pub mod repository;
pub mod service;
