//! Case file input, fuel dictionaries and the enriched-case document.

mod dictionary;
mod enriched;
mod matpower;

pub use dictionary::{carbon_casefile, fuel_dict_generation, FuelDictionary, FuelEntry};
pub use enriched::{
    load_enriched, network_fingerprint, read_enriched, save_enriched, write_enriched,
    EnrichedNetwork, Provenance, SCHEMA_VERSION,
};
pub use matpower::{parse_matpower_case, read_case_subset, CaseFileSubset, Row};

use crate::grid::{GridError, UnknownFuel};

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("case file has no `mpc.{0}` block")]
    MissingBlock(&'static str),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: non-numeric token `{token}`")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: {reason}")]
    UnsupportedCost { line: usize, reason: String },
    #[error("line {line}: `{block}` row has {got} columns, need at least {expected}")]
    RowWidth {
        block: &'static str,
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{0}")]
    Inconsistent(String),
    #[error("fuel dictionary does not cover generators {0:?}")]
    Coverage(Vec<usize>),
    #[error("fuel dictionary names generator {0}, which does not exist")]
    ExtraEntry(usize),
    #[error(transparent)]
    Taxonomy(#[from] UnknownFuel),
    #[error("generator {id}: stored intensity {stored} does not match {expected} for its fuel")]
    IntensityMismatch {
        id: usize,
        stored: f64,
        expected: f64,
    },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Case files shipped with the library.
pub mod cases {
    use super::{parse_matpower_case, CaseError};
    use crate::grid::Network;

    /// Two buses, one 30 MW line, a cheap coal unit and a costly CCGT unit.
    pub const CASE2: &str = include_str!("../../data/case2.m");
    /// IEEE 14-bus system with quadratic costs and unconstrained lines.
    pub const CASE14: &str = include_str!("../../data/case14.m");
    /// IEEE 14-bus system with linear costs, tight line ratings and fuel labels.
    pub const CASE14_CONGESTED: &str = include_str!("../../data/case14_congested.m");
    /// IEEE 118-bus system.
    pub const CASE118: &str = include_str!("../../data/case118.m");

    pub const NAMES: [&str; 4] = ["case2", "case14", "case14_congested", "case118"];

    pub fn source(name: &str) -> Option<&'static str> {
        match name {
            "case2" => Some(CASE2),
            "case14" => Some(CASE14),
            "case14_congested" => Some(CASE14_CONGESTED),
            "case118" => Some(CASE118),
            _ => None,
        }
    }

    pub fn load(name: &str) -> Result<Network, CaseError> {
        let text = source(name)
            .ok_or_else(|| CaseError::Malformed(format!("no built-in case `{name}`")))?;
        parse_matpower_case(text)
    }
}
