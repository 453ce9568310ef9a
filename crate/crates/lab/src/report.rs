//! Versioned JSON envelopes for experiment output.

use std::path::Path;

use dirichlet_core::domain::{side_pairings, simplicity_check, DirichletDomain, DomainSummary, SidePairing, SimplicityReport};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub kind: String,
    /// Whether every checked property held.
    pub pass: bool,
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(kind: &str, pass: bool, body: T) -> Self {
        Report { schema_version: SCHEMA_VERSION, kind: kind.to_string(), pass, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }
}

/// Outcome of a seeded random scan. Items are ordered by sample index, so two
/// runs with the same seed and configuration agree except for `elapsed_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport<W> {
    pub trials: usize,
    pub hits: usize,
    pub witnesses: Vec<W>,
    pub seed: u64,
    pub elapsed_ms: u128,
}

impl<W: PartialEq> ScanReport<W> {
    pub fn same_outcome(&self, other: &ScanReport<W>) -> bool {
        self.trials == other.trials && self.hits == other.hits && self.witnesses == other.witnesses && self.seed == other.seed
    }
}

/// Output of the `domain` command, read back by `plot`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainReport {
    pub summary: DomainSummary,
    pub simplicity: SimplicityReport,
    pub side_pairings: Vec<SidePairing>,
}

impl DomainReport {
    pub fn new(d: &DirichletDomain) -> Self {
        DomainReport { summary: d.summary(), simplicity: simplicity_check(d), side_pairings: side_pairings(d) }
    }
}
