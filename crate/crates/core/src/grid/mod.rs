//! Network data model, fuel taxonomy and DC network matrices.

mod fuel;
mod isf;
mod network;

pub use fuel::{emission_intensity, EmissionMetric, FuelType, UnknownFuel};
pub use isf::{build_isf_matrix, IsfMatrix};
pub use network::{bus_generator_map, Branch, Bus, CarbonProfile, Generator, Network};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("network is disconnected; buses unreachable from the slack bus: {isolated:?}")]
    Disconnected { isolated: Vec<u32> },
    #[error("generator {generator} references nonexistent bus index {bus}")]
    UnknownBus { generator: usize, bus: usize },
    #[error("no bus numbered {0}")]
    UnknownBusNumber(u32),
    #[error("slack bus index {0} is out of range")]
    InvalidSlack(usize),
    #[error("branch {index}: {reason}")]
    InvalidBranch { index: usize, reason: String },
    #[error("generator {id}: {reason}")]
    InvalidGenerator { id: usize, reason: String },
    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,
    #[error("load vector has {got} entries, network has {expected} load buses")]
    LoadDimension { expected: usize, got: usize },
}
