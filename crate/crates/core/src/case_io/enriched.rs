//! Self-describing JSON document for carbon-enriched networks.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "units": { "bus.demand": "MW", ... },
//!   "provenance": { "source_case": "case14", "generator": "carbongrid 0.1.0" },
//!   "network": { ... },
//!   "fuel_dictionary": { "0": { "type": "ANT", "emissions": "CO2e" }, ... }
//! }
//! ```
//!
//! Infinite flow limits are written as `null`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::{emission_intensity, Network};

use super::dictionary::check_fuel_codes;
use super::{CaseError, FuelDictionary};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_case: String,
    pub generator: String,
}

/// A network whose generators all carry fuel and intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedNetwork {
    pub network: Network,
    pub dictionary: FuelDictionary,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Document {
    schema_version: u64,
    units: BTreeMap<String, String>,
    provenance: Provenance,
    network: Network,
    fuel_dictionary: FuelDictionary,
}

fn units() -> BTreeMap<String, String> {
    [
        ("network.base_mva", "MVA"),
        ("bus.demand", "MW"),
        ("branch.reactance", "p.u."),
        ("branch.tap", "ratio"),
        ("branch.flow_min", "MW"),
        ("branch.flow_max", "MW"),
        ("generator.cost_linear", "currency/MWh"),
        ("generator.cost_quadratic", "currency/MWh^2"),
        ("generator.p_min", "MW"),
        ("generator.p_max", "MW"),
        ("generator.carbon.intensity", "tCO2/MWh"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl EnrichedNetwork {
    /// Checks that every generator's carbon profile agrees with the
    /// dictionary and the intensity table.
    pub fn check(&self) -> Result<(), CaseError> {
        self.network.validate()?;
        let missing = self.dictionary.uncovered(&self.network);
        if !missing.is_empty() {
            return Err(CaseError::Coverage(missing));
        }
        for g in &self.network.generators {
            let entry = self.dictionary.entries[&g.id];
            let expected = emission_intensity(entry.fuel, entry.metric);
            match g.carbon {
                Some(c)
                    if c.fuel == entry.fuel
                        && c.metric == entry.metric
                        && c.intensity == expected => {}
                Some(c) => {
                    return Err(CaseError::IntensityMismatch {
                        id: g.id,
                        stored: c.intensity,
                        expected,
                    })
                }
                None => return Err(CaseError::Coverage(vec![g.id])),
            }
        }
        Ok(())
    }

    /// Intensity per generator.
    pub fn intensities(&self) -> Vec<f64> {
        self.network
            .intensities()
            .expect("enriched network carries intensities")
    }
}

/// Serializes to the enriched JSON document.
pub fn write_enriched(enriched: &EnrichedNetwork) -> String {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        units: units(),
        provenance: enriched.provenance.clone(),
        network: enriched.network.clone(),
        fuel_dictionary: enriched.dictionary.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("enriched network serializes")
}

/// Parses an enriched JSON document. Nothing is returned unless the whole
/// document is valid.
pub fn read_enriched(text: &str) -> Result<EnrichedNetwork, CaseError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CaseError::Malformed(e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| CaseError::Malformed("missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(CaseError::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    if let Some(dict) = value.get("fuel_dictionary") {
        check_fuel_codes(dict)?;
    }
    if let Some(gens) = value
        .pointer("/network/generators")
        .and_then(|g| g.as_array())
    {
        for g in gens {
            if let Some(code) = g.pointer("/carbon/fuel").and_then(|f| f.as_str()) {
                code.parse::<crate::grid::FuelType>()?;
            }
        }
    }
    let doc: Document =
        serde_json::from_value(value).map_err(|e| CaseError::Malformed(e.to_string()))?;
    let enriched = EnrichedNetwork {
        network: doc.network,
        dictionary: doc.fuel_dictionary,
        provenance: doc.provenance,
    };
    enriched.check()?;
    Ok(enriched)
}

pub fn save_enriched(enriched: &EnrichedNetwork, path: impl AsRef<Path>) -> Result<(), CaseError> {
    fs::write(path, write_enriched(enriched))?;
    Ok(())
}

pub fn load_enriched(path: impl AsRef<Path>) -> Result<EnrichedNetwork, CaseError> {
    read_enriched(&fs::read_to_string(path)?)
}

/// SHA-256 of the enriched document, used to tie derived artifacts to the
/// exact network they were computed from.
pub fn network_fingerprint(enriched: &EnrichedNetwork) -> [u8; 32] {
    Sha256::digest(write_enriched(enriched).as_bytes()).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{carbon_casefile, cases, fuel_dict_generation};
    use crate::grid::{EmissionMetric, FuelType};

    fn enriched14() -> EnrichedNetwork {
        let net = cases::load("case14_congested").unwrap();
        let dict =
            fuel_dict_generation(&net, FuelType::NaturalGas).with_metric(EmissionMetric::Co2e);
        carbon_casefile(&net, &dict).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let e = enriched14();
        let back = read_enriched(&write_enriched(&e)).unwrap();
        assert_eq!(back, e);
        for (a, b) in back.network.branches.iter().zip(&e.network.branches) {
            assert_eq!(a.reactance.to_bits(), b.reactance.to_bits());
        }
    }

    #[test]
    fn infinite_limits_survive() {
        let net = cases::load("case14").unwrap();
        let dict = fuel_dict_generation(&net, FuelType::NaturalGas);
        let mut e = carbon_casefile(&net, &dict).unwrap();
        e.network.branches[0].flow_max = f64::INFINITY;
        e.network.branches[0].flow_min = f64::NEG_INFINITY;
        let back = read_enriched(&write_enriched(&e)).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.json");
        let e = enriched14();
        save_enriched(&e, &path).unwrap();
        assert_eq!(load_enriched(&path).unwrap(), e);
    }

    #[test]
    fn truncated_document_fails() {
        let text = write_enriched(&enriched14());
        let cut = &text[..text.len() / 2];
        assert!(matches!(read_enriched(cut), Err(CaseError::Malformed(_))));
    }

    #[test]
    fn unknown_fuel_is_a_taxonomy_error() {
        let text = write_enriched(&enriched14()).replacen(
            "\"type\": \"CCGT\"",
            "\"type\": \"LIGNITE\"",
            1,
        );
        assert!(matches!(read_enriched(&text), Err(CaseError::Taxonomy(_))));
    }

    #[test]
    fn schema_version_is_checked() {
        let text = write_enriched(&enriched14()).replacen(
            "\"schema_version\": 1",
            "\"schema_version\": 7",
            1,
        );
        assert!(matches!(
            read_enriched(&text),
            Err(CaseError::SchemaVersion { found: 7, .. })
        ));
    }

    #[test]
    fn tampered_intensity_is_rejected() {
        let mut e = enriched14();
        e.network.generators[0].carbon.as_mut().unwrap().intensity = 0.5;
        assert!(matches!(
            read_enriched(&write_enriched(&e)),
            Err(CaseError::IntensityMismatch { id: 0, .. })
        ));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = enriched14();
        let mut b = a.clone();
        b.network.branches[3].flow_max += 1.0;
        assert_eq!(network_fingerprint(&a), network_fingerprint(&a.clone()));
        assert_ne!(network_fingerprint(&a), network_fingerprint(&b));
    }
}
