use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::grid::{emission_intensity, CarbonProfile, EmissionMetric, FuelType, Network};

use super::{CaseError, EnrichedNetwork, Provenance};

/// Fuel and accounting basis assigned to one generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuelEntry {
    #[serde(rename = "type")]
    pub fuel: FuelType,
    #[serde(rename = "emissions", default)]
    pub metric: EmissionMetric,
}

/// Generator id to fuel assignment. Serializes as the sidecar format
/// `{"0": {"type": "NG", "emissions": "CO2"}, ...}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FuelDictionary {
    pub entries: BTreeMap<usize, FuelEntry>,
}

impl FuelDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<FuelEntry> {
        self.entries.get(&id).copied()
    }

    pub fn set(&mut self, id: usize, fuel: FuelType, metric: EmissionMetric) {
        self.entries.insert(id, FuelEntry { fuel, metric });
    }

    /// Switches every entry to `metric`.
    pub fn with_metric(mut self, metric: EmissionMetric) -> Self {
        for entry in self.entries.values_mut() {
            entry.metric = metric;
        }
        self
    }

    /// Builds a dictionary assigning fuels in generator order.
    pub fn from_fuels(fuels: &[FuelType], metric: EmissionMetric) -> Self {
        let entries = fuels
            .iter()
            .enumerate()
            .map(|(i, &fuel)| (i, FuelEntry { fuel, metric }))
            .collect();
        Self { entries }
    }

    /// Generator ids of `network` with no entry.
    pub fn uncovered(&self, network: &Network) -> Vec<usize> {
        network
            .generators
            .iter()
            .map(|g| g.id)
            .filter(|id| !self.entries.contains_key(id))
            .collect()
    }

    /// Parses a sidecar document. Unknown fuel codes are reported as
    /// taxonomy errors rather than generic parse failures.
    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CaseError::Malformed(e.to_string()))?;
        check_fuel_codes(&value)?;
        serde_json::from_value(value).map_err(|e| CaseError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dictionary serializes")
    }
}

pub(super) fn check_fuel_codes(dictionary: &serde_json::Value) -> Result<(), CaseError> {
    let Some(map) = dictionary.as_object() else {
        return Err(CaseError::Malformed(
            "fuel dictionary must be an object".into(),
        ));
    };
    for entry in map.values() {
        if let Some(code) = entry.get("type").and_then(|v| v.as_str()) {
            code.parse::<FuelType>()?;
        }
    }
    Ok(())
}

/// One entry per generator, fuel taken from the case's own labels when they
/// map onto the taxonomy and `default_fuel` otherwise. All entries use CO2.
pub fn fuel_dict_generation(network: &Network, default_fuel: FuelType) -> FuelDictionary {
    let mut dict = FuelDictionary::new();
    for g in &network.generators {
        let fuel = match g.fuel_label.as_deref() {
            Some(label) => FuelType::from_case_label(label).unwrap_or_else(|| {
                warn!(
                    "generator {}: fuel label `{label}` not recognized, using {default_fuel}",
                    g.id
                );
                default_fuel
            }),
            None => default_fuel,
        };
        dict.set(g.id, fuel, EmissionMetric::Co2);
    }
    dict
}

/// Attaches fuel and intensity to every generator.
pub fn carbon_casefile(
    network: &Network,
    dict: &FuelDictionary,
) -> Result<EnrichedNetwork, CaseError> {
    let missing = dict.uncovered(network);
    if !missing.is_empty() {
        return Err(CaseError::Coverage(missing));
    }
    if let Some(&extra) = dict
        .entries
        .keys()
        .find(|&&id| id >= network.n_generators())
    {
        return Err(CaseError::ExtraEntry(extra));
    }
    let mut network = network.clone();
    for g in &mut network.generators {
        let entry = dict.entries[&g.id];
        g.carbon = Some(CarbonProfile {
            fuel: entry.fuel,
            metric: entry.metric,
            intensity: emission_intensity(entry.fuel, entry.metric),
        });
    }
    let provenance = Provenance {
        source_case: network.name.clone(),
        generator: format!("carbongrid {}", env!("CARGO_PKG_VERSION")),
    };
    Ok(EnrichedNetwork {
        network,
        dictionary: dict.clone(),
        provenance,
    })
}
