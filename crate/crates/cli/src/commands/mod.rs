pub mod bench;
pub mod enrich;
pub mod lmce;
pub mod mpp;
pub mod opf;

use std::path::Path;

use carbongrid::case_io::EnrichedNetwork;

use crate::context::load_bus_numbers;
use crate::error::CliError;
use crate::loads::read_loads;

/// Scenarios from a loads file, or the nominal load when none is given.
pub fn scenarios(path: Option<&Path>, net: &EnrichedNetwork) -> Result<Vec<Vec<f64>>, CliError> {
    match path {
        Some(path) => read_loads(path, &load_bus_numbers(net)),
        None => Ok(vec![net.network.nominal_load()]),
    }
}
