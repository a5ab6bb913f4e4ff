// SPDX-License-Identifier: Apache-2.0

//! Domain vocabulary shared by every other module: attribute groups,
//! attribute descriptors and catalogs, group weights, targets and container
//! limits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Largest weight a user may assign to a group.
pub const MAX_WEIGHT: f64 = 5.0;

/// One of the four attribute groups weights are assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupId {
    MemoryProcess,
    LocalCommunication,
    Computation,
    Storage,
}

impl GroupId {
    pub const ALL: [GroupId; 4] = [
        GroupId::MemoryProcess,
        GroupId::LocalCommunication,
        GroupId::Computation,
        GroupId::Storage,
    ];

    /// Position of the group in [`GroupId::ALL`] (and in weight vectors).
    pub fn index(self) -> usize {
        match self {
            GroupId::MemoryProcess => 0,
            GroupId::LocalCommunication => 1,
            GroupId::Computation => 2,
            GroupId::Storage => 3,
        }
    }

    /// Stable key used in text formats.
    pub fn as_str(self) -> &'static str {
        match self {
            GroupId::MemoryProcess => "memory_process",
            GroupId::LocalCommunication => "local_communication",
            GroupId::Computation => "computation",
            GroupId::Storage => "storage",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GroupId::MemoryProcess => "Memory and Process",
            GroupId::LocalCommunication => "Local Communication",
            GroupId::Computation => "Computation",
            GroupId::Storage => "Storage",
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupId {
    type Err = String;

    /// Accepts the snake_case key or the positional aliases `g1`..`g4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "memory_process" | "g1" => Ok(GroupId::MemoryProcess),
            "local_communication" | "g2" => Ok(GroupId::LocalCommunication),
            "computation" | "g3" => Ok(GroupId::Computation),
            "storage" | "g4" => Ok(GroupId::Storage),
            other => Err(format!("unknown group `{other}`")),
        }
    }
}

/// Direction of merit of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::HigherIsBetter => "higher",
            Direction::LowerIsBetter => "lower",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "higher" | "higher_is_better" => Ok(Direction::HigherIsBetter),
            "lower" | "lower_is_better" => Ok(Direction::LowerIsBetter),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeDescriptor {
    pub id: String,
    pub display_name: String,
    pub group: GroupId,
    pub unit: String,
    pub direction: Direction,
}

impl AttributeDescriptor {
    pub fn new(
        id: impl Into<String>,
        display_name: impl Into<String>,
        group: GroupId,
        unit: impl Into<String>,
        direction: Direction,
    ) -> Self {
        Self {
            id: id.into(),
            display_name: display_name.into(),
            group,
            unit: unit.into(),
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("group {0} has no attributes")]
    EmptyGroup(GroupId),
    #[error("duplicate attribute id `{0}`")]
    DuplicateId(String),
}

/// Ordered set of attributes, each belonging to exactly one group.
///
/// A constructed catalog always has unique ids and at least one attribute in
/// every group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeCatalog {
    attributes: Vec<AttributeDescriptor>,
    version: u32,
}

impl AttributeCatalog {
    pub fn new(attributes: Vec<AttributeDescriptor>, version: u32) -> Result<Self, CatalogError> {
        let mut seen = BTreeSet::new();
        for attr in &attributes {
            if !seen.insert(attr.id.as_str()) {
                return Err(CatalogError::DuplicateId(attr.id.clone()));
            }
        }
        for group in GroupId::ALL {
            if !attributes.iter().any(|a| a.group == group) {
                return Err(CatalogError::EmptyGroup(group));
            }
        }
        Ok(Self {
            attributes,
            version,
        })
    }

    /// The built-in lmbench-style catalog.
    pub fn builtin() -> Self {
        use Direction::{HigherIsBetter as Hi, LowerIsBetter as Lo};
        use GroupId::*;

        const DEFAULT: &[(&str, &str, GroupId, &str, Direction)] = &[
            ("mem.latency.l1", "L1 cache latency", MemoryProcess, "ns", Lo),
            ("mem.latency.l2", "L2 cache latency", MemoryProcess, "ns", Lo),
            ("mem.latency.main", "Main memory latency", MemoryProcess, "ns", Lo),
            ("mem.latency.random", "Random memory latency", MemoryProcess, "ns", Lo),
            ("proc.latency.fork", "Process fork+exit latency", MemoryProcess, "us", Lo),
            ("bw.mem.read", "Memory read bandwidth", LocalCommunication, "MB/s", Hi),
            ("bw.mem.write", "Memory write bandwidth", LocalCommunication, "MB/s", Hi),
            ("bw.ipc.pipe", "Pipe bandwidth", LocalCommunication, "MB/s", Hi),
            ("bw.ipc.unix", "AF_UNIX socket bandwidth", LocalCommunication, "MB/s", Hi),
            ("bw.ipc.tcp", "TCP bandwidth", LocalCommunication, "MB/s", Hi),
            ("ops.int.add", "Integer add latency", Computation, "ns", Lo),
            ("ops.int.mul", "Integer multiply latency", Computation, "ns", Lo),
            ("ops.int.div", "Integer divide latency", Computation, "ns", Lo),
            ("ops.int.mod", "Integer modulus latency", Computation, "ns", Lo),
            ("ops.float.add", "Float add latency", Computation, "ns", Lo),
            ("ops.float.mul", "Float multiply latency", Computation, "ns", Lo),
            ("ops.float.div", "Float divide latency", Computation, "ns", Lo),
            ("ops.double.add", "Double add latency", Computation, "ns", Lo),
            ("ops.double.mul", "Double multiply latency", Computation, "ns", Lo),
            ("ops.double.div", "Double divide latency", Computation, "ns", Lo),
            ("fs.seq.create", "Sequential file create rate", Storage, "ops/s", Hi),
            ("fs.seq.read", "Sequential file read rate", Storage, "ops/s", Hi),
            ("fs.seq.delete", "Sequential file delete rate", Storage, "ops/s", Hi),
            ("fs.rand.create", "Random file create rate", Storage, "ops/s", Hi),
            ("fs.rand.read", "Random file read rate", Storage, "ops/s", Hi),
            ("fs.rand.delete", "Random file delete rate", Storage, "ops/s", Hi),
        ];

        let attributes = DEFAULT
            .iter()
            .map(|&(id, name, group, unit, dir)| AttributeDescriptor::new(id, name, group, unit, dir))
            .collect();
        Self::new(attributes, 1).expect("builtin catalog is valid")
    }

    /// Parses the override format: one `id|display_name|group|unit|direction`
    /// record per line, `#` comments and blank lines ignored. A
    /// `#version=N` comment sets the catalog version (default 1).
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut attributes: Vec<AttributeDescriptor> = Vec::new();
        let mut version = 1;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version=") {
                    version = v.trim().parse().map_err(|_| CatalogError::Parse {
                        line: line_no,
                        reason: format!("invalid version `{}`", v.trim()),
                    })?;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| CatalogError::Parse {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
            }
            if fields[0].is_empty() {
                return Err(parse_err("empty attribute id".to_string()));
            }
            let group = fields[2].parse().map_err(parse_err)?;
            let direction = fields[4].parse().map_err(parse_err)?;
            if attributes.iter().any(|a| a.id == fields[0]) {
                return Err(CatalogError::DuplicateId(fields[0].to_string()));
            }
            attributes.push(AttributeDescriptor::new(
                fields[0], fields[1], group, fields[3], direction,
            ));
        }
        Self::new(attributes, version)
    }

    /// Serializes to the override format accepted by [`AttributeCatalog::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("#version={}\n", self.version);
        for a in &self.attributes {
            out.push_str(&format!(
                "{}|{}|{}|{}|{}\n",
                a.id,
                a.display_name,
                a.group,
                a.unit,
                a.direction.as_str()
            ));
        }
        out
    }

    /// Appends an attribute, rejecting duplicate ids.
    pub fn insert(&mut self, attr: AttributeDescriptor) -> Result<(), CatalogError> {
        if self.get(&attr.id).is_some() {
            return Err(CatalogError::DuplicateId(attr.id));
        }
        self.attributes.push(attr);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&AttributeDescriptor> {
        self.attributes.iter().find(|a| a.id == id)
    }

    /// Catalog position of an attribute id.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.id == id)
    }

    pub fn attributes(&self) -> &[AttributeDescriptor] {
        &self.attributes
    }

    pub fn in_group(&self, group: GroupId) -> impl Iterator<Item = &AttributeDescriptor> {
        self.attributes.iter().filter(move |a| a.group == group)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn version(&self) -> u32 {
        self.version
    }
}

impl Default for AttributeCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("weight {value} for group {group} is outside [0, 5]")]
    OutOfRange { group: GroupId, value: f64 },
    #[error("no weight given for group {0}")]
    MissingGroup(GroupId),
}

/// One weight in `[0, 5]` per attribute group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector([f64; 4]);

impl WeightVector {
    /// Weights in [`GroupId::ALL`] order.
    pub fn from_array(weights: [f64; 4]) -> Result<Self, WeightError> {
        for group in GroupId::ALL {
            let value = weights[group.index()];
            // NaN fails both comparisons.
            if !(0.0..=MAX_WEIGHT).contains(&value) {
                return Err(WeightError::OutOfRange { group, value });
            }
        }
        Ok(Self(weights))
    }

    pub fn get(&self, group: GroupId) -> f64 {
        self.0[group.index()]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn is_all_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0.0)
    }

    pub fn to_map(&self) -> BTreeMap<GroupId, f64> {
        GroupId::ALL.iter().map(|&g| (g, self.get(g))).collect()
    }
}

/// Checks that all four groups are present and every weight lies in `[0, 5]`.
///
/// An all-zero vector is accepted here; scoring rejects it.
pub fn validate_weights(raw: &BTreeMap<GroupId, f64>) -> Result<WeightVector, WeightError> {
    let mut weights = [0.0; 4];
    for group in GroupId::ALL {
        weights[group.index()] = *raw.get(&group).ok_or(WeightError::MissingGroup(group))?;
    }
    WeightVector::from_array(weights)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("container memory must be at least 1 MB")]
    ZeroMemory,
    #[error("container must have at least 1 CPU core")]
    ZeroCores,
    #[error("target `{name}`: {reason}")]
    InvalidTarget { name: String, reason: String },
}

/// Resource limits applied to the benchmarking container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContainerSpec {
    memory_mb: u32,
    cpu_cores: u32,
}

impl ContainerSpec {
    pub fn new(memory_mb: u32, cpu_cores: u32) -> Result<Self, ModelError> {
        if memory_mb == 0 {
            return Err(ModelError::ZeroMemory);
        }
        if cpu_cores == 0 {
            return Err(ModelError::ZeroCores);
        }
        Ok(Self {
            memory_mb,
            cpu_cores,
        })
    }

    pub fn memory_mb(&self) -> u32 {
        self.memory_mb
    }

    pub fn cpu_cores(&self) -> u32 {
        self.cpu_cores
    }
}

/// A machine that can be benchmarked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetDescriptor {
    pub name: String,
    /// Opaque to everything but the executor.
    pub address: String,
    pub vcpus: u32,
    pub memory_mib: u64,
    pub metadata: BTreeMap<String, String>,
}

impl TargetDescriptor {
    pub fn new(
        name: impl Into<String>,
        address: impl Into<String>,
        vcpus: u32,
        memory_mib: u64,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let invalid = |reason: &str| ModelError::InvalidTarget {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if name.is_empty() || name.contains(['|', ' ', '\t']) {
            return Err(invalid("name must be non-empty without spaces or `|`"));
        }
        if vcpus == 0 {
            return Err(invalid("vcpus must be at least 1"));
        }
        if memory_mib == 0 {
            return Err(invalid("memory_mib must be at least 1"));
        }
        Ok(Self {
            name,
            address: address.into(),
            vcpus,
            memory_mib,
            metadata: BTreeMap::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InventoryError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate target `{0}`")]
    DuplicateTarget(String),
}

/// Parses an inventory: `name|address|vcpus|memory_mib` per line, with an
/// optional fifth field of comma-separated `key=value` metadata.
pub fn parse_inventory(text: &str) -> Result<Vec<TargetDescriptor>, InventoryError> {
    let mut targets: Vec<TargetDescriptor> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| InventoryError::Parse {
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if !(4..=5).contains(&fields.len()) {
            return Err(err(format!("expected 4 or 5 fields, found {}", fields.len())));
        }
        let vcpus = fields[2]
            .parse()
            .map_err(|_| err(format!("invalid vcpus `{}`", fields[2])))?;
        let memory = fields[3]
            .parse()
            .map_err(|_| err(format!("invalid memory_mib `{}`", fields[3])))?;
        let mut target =
            TargetDescriptor::new(fields[0], fields[1], vcpus, memory).map_err(|e| err(e.to_string()))?;
        if let Some(meta) = fields.get(4) {
            for pair in meta.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| err(format!("metadata `{pair}` is not key=value")))?;
                target.metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        if targets.iter().any(|t| t.name == target.name) {
            return Err(InventoryError::DuplicateTarget(target.name));
        }
        targets.push(target);
    }
    Ok(targets)
}
