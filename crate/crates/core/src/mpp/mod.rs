//! Multiparametric DC OPF: critical regions over a load box and constant-time
//! signal lookup.
//!
//! With linear costs the optimal dispatch is piecewise affine in the
//! parametric loads. Each piece is a polytope on which one basis stays
//! optimal, and on it `P^G = J·P^D + g`. Regions are enumerated offline by
//! crossing facets; online queries only scan the stored inequalities.

mod domain;
mod explore;
mod io;
mod law;
mod polytope;
mod table;

pub use crate::opf::{build_canonical, CanonicalForm};
pub use domain::LoadDomain;
pub use explore::{explore_regions, explore_regions_with, ExploreOptions, ExploreStats};
pub use io::{
    check_fingerprint, load_table, load_table_for, read_table, save_table, write_table, MAGIC,
    TABLE_VERSION,
};
pub use law::{affine_law_from_active_set, dual_certificate, AffineLaw};
pub use polytope::{region_polytope, Facet, RegionPolytope};
pub use table::{Region, RegionTable};

use crate::opf::OpfError;
use crate::sensitivity::SensitivityError;

#[derive(Debug, thiserror::Error)]
pub enum MppError {
    #[error("invalid load domain: {0}")]
    Domain(String),
    #[error("expected {expected} load entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degenerate basis: {0}")]
    SingularBasis(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("seed load is infeasible: {0}")]
    InfeasibleSeed(String),
    #[error("no full-dimensional region found near the seed load")]
    SeedFailed,
    #[error("region limit {limit} reached after {found} regions")]
    RegionCap { limit: usize, found: usize },
    #[error("no region posts these prices")]
    NoPriceMatch,
    #[error("prices match several regions: {0:?}")]
    AmbiguousPrice(Vec<usize>),
    #[error("table was built for network {table}, not {network}")]
    StaleTable { table: String, network: String },
    #[error("table checksum mismatch")]
    Checksum,
    #[error("unsupported table version {found} (expected {expected})")]
    TableVersion { found: u16, expected: u16 },
    #[error("corrupt table: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a load could not be located.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocateError {
    #[error("expected {expected} load entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("infeasible: demand {demand} MW outside generation limits [{min}, {max}] MW")]
    Infeasible { demand: f64, min: f64, max: f64 },
    #[error("load lies outside the table domain")]
    OutsideDomain,
    #[error("load is feasible but no stored region contains it")]
    Uncovered,
}
