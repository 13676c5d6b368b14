//! Fuel taxonomy and generator emission intensity factors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Fuel classification of a generating unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FuelType {
    /// Anthracite coal.
    #[serde(rename = "ANT")]
    Anthracite,
    /// Bituminous coal.
    #[serde(rename = "COW")]
    BituminousCoal,
    /// Distillate fuel oil.
    #[serde(rename = "PEL")]
    DistillateOil,
    /// Natural gas.
    #[serde(rename = "NG")]
    NaturalGas,
    /// Gas combined cycle.
    #[serde(rename = "CCGT")]
    CombinedCycle,
    /// Internal combustion engine.
    #[serde(rename = "ICE")]
    InternalCombustion,
    #[serde(rename = "NUC")]
    Nuclear,
    #[serde(rename = "WIND")]
    Wind,
    #[serde(rename = "SOLAR")]
    Solar,
    #[serde(rename = "HYDRO")]
    Hydro,
}

/// Which greenhouse-gas accounting basis an intensity factor uses.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub enum EmissionMetric {
    /// Direct carbon dioxide only.
    #[default]
    #[serde(rename = "CO2")]
    Co2,
    /// CO2-equivalent, folding in methane and nitrous oxide.
    #[serde(rename = "CO2e")]
    Co2e,
}

impl FuelType {
    pub const ALL: [FuelType; 10] = [
        FuelType::Anthracite,
        FuelType::BituminousCoal,
        FuelType::DistillateOil,
        FuelType::NaturalGas,
        FuelType::CombinedCycle,
        FuelType::InternalCombustion,
        FuelType::Nuclear,
        FuelType::Wind,
        FuelType::Solar,
        FuelType::Hydro,
    ];

    /// Short code used in case files and fuel dictionaries.
    pub fn code(self) -> &'static str {
        match self {
            FuelType::Anthracite => "ANT",
            FuelType::BituminousCoal => "COW",
            FuelType::DistillateOil => "PEL",
            FuelType::NaturalGas => "NG",
            FuelType::CombinedCycle => "CCGT",
            FuelType::InternalCombustion => "ICE",
            FuelType::Nuclear => "NUC",
            FuelType::Wind => "WIND",
            FuelType::Solar => "SOLAR",
            FuelType::Hydro => "HYDRO",
        }
    }

    /// Maps a free-form fuel label found in case metadata (e.g. MATPOWER
    /// `genfuel` entries) onto the taxonomy. Returns `None` for labels that
    /// have no counterpart.
    pub fn from_case_label(label: &str) -> Option<FuelType> {
        if let Ok(fuel) = label.parse() {
            return Some(fuel);
        }
        match label.trim().to_ascii_lowercase().as_str() {
            "ng" | "gas" | "natural gas" | "naturalgas" => Some(FuelType::NaturalGas),
            "coal" | "bituminous" => Some(FuelType::BituminousCoal),
            "anthracite" => Some(FuelType::Anthracite),
            "oil" | "distillate" | "dfo" => Some(FuelType::DistillateOil),
            "nuclear" => Some(FuelType::Nuclear),
            "wind" => Some(FuelType::Wind),
            "solar" | "pv" => Some(FuelType::Solar),
            "hydro" => Some(FuelType::Hydro),
            "ccgt" | "combined cycle" => Some(FuelType::CombinedCycle),
            _ => None,
        }
    }
}

impl fmt::Display for FuelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Error for fuel codes outside the taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fuel code `{0}`")]
pub struct UnknownFuel(pub String);

impl FromStr for FuelType {
    type Err = UnknownFuel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s.trim().to_ascii_uppercase();
        FuelType::ALL
            .into_iter()
            .find(|f| f.code() == code)
            .ok_or_else(|| UnknownFuel(s.to_string()))
    }
}

impl EmissionMetric {
    pub fn code(self) -> &'static str {
        match self {
            EmissionMetric::Co2 => "CO2",
            EmissionMetric::Co2e => "CO2e",
        }
    }
}

impl fmt::Display for EmissionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for EmissionMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "CO2" | "co2" => Ok(EmissionMetric::Co2),
            "CO2e" | "co2e" | "CO2E" => Ok(EmissionMetric::Co2e),
            other => Err(format!(
                "unknown emission metric `{other}` (expected CO2 or CO2e)"
            )),
        }
    }
}

/// Emission intensity in t/MWh for a fuel under the given metric.
pub fn emission_intensity(fuel: FuelType, metric: EmissionMetric) -> f64 {
    use EmissionMetric::*;
    use FuelType::*;
    match (fuel, metric) {
        (Anthracite, Co2) => 0.9095,
        (Anthracite, Co2e) => 0.9143,
        (BituminousCoal, Co2) => 0.8204,
        (BituminousCoal, Co2e) => 0.8230,
        (DistillateOil, Co2) => 0.7001,
        (DistillateOil, Co2e) => 0.7018,
        (NaturalGas, Co2) => 0.5173,
        (NaturalGas, Co2e) => 0.5177,
        (CombinedCycle, Co2) => 0.3621,
        (CombinedCycle, Co2e) => 0.3625,
        (InternalCombustion, Co2) => 0.6030,
        (InternalCombustion, Co2e) => 0.6049,
        (Nuclear | Wind | Solar | Hydro, _) => 0.0,
    }
}
