use std::path::Path;

use carbongrid::case_io::{
    carbon_casefile, cases, fuel_dict_generation, parse_matpower_case, read_enriched,
    EnrichedNetwork, FuelDictionary,
};
use carbongrid::grid::Network;
use carbongrid::mpp::{load_table, load_table_for, LoadDomain, RegionTable};
use carbongrid::opf::CostModel;
use log::warn;

use crate::config::{CostChoice, DomainSpec, RunConfig};
use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })
}

/// Parses `--case`: a `.json` enriched case, a MATPOWER file, or the name
/// of a built-in case (`case2`, `case14`, `case14_congested`, `case118`).
enum Source {
    Matpower(Network),
    Enriched(EnrichedNetwork),
}

fn open_case(path: &Path) -> Result<Source, CliError> {
    if !path.exists() {
        if let Some(name) = path.to_str().filter(|n| cases::NAMES.contains(n)) {
            return Ok(Source::Matpower(cases::load(name)?));
        }
    }
    let text = read(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        Ok(Source::Enriched(read_enriched(&text)?))
    } else {
        Ok(Source::Matpower(parse_matpower_case(&text)?))
    }
}

fn apply_overrides(net: &mut Network, cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(buses) = &cfg.load_buses {
        net.set_load_buses(buses)
            .map_err(|e| CliError::Usage(format!("--load-buses: {e}")))?;
    }
    if let Some(number) = cfg.slack_bus {
        let idx = net
            .bus_index(number)
            .ok_or_else(|| CliError::Usage(format!("--slack-bus: no bus numbered {number}")))?;
        net.slack_bus = idx;
        for (i, bus) in net.buses.iter_mut().enumerate() {
            bus.is_reference = i == idx;
        }
    }
    net.validate().map_err(|e| CliError::Usage(e.to_string()))
}

fn dictionary(net: &Network, cfg: &RunConfig) -> Result<FuelDictionary, CliError> {
    let dict = match &cfg.fuel_dict {
        Some(path) => FuelDictionary::from_json(&read(path)?)?,
        None => {
            if net.generators.iter().all(|g| g.fuel_label.is_none()) {
                warn!("no fuel dictionary and no fuel labels in the case; every generator is assigned {}", cfg.default_fuel);
            }
            fuel_dict_generation(net, cfg.default_fuel)
        }
    };
    Ok(match cfg.metric {
        Some(metric) => dict.with_metric(metric),
        None => dict,
    })
}

/// Builds the enriched network described by the configuration.
pub fn load_network(cfg: &RunConfig) -> Result<EnrichedNetwork, CliError> {
    let path = cfg.case.as_deref().ok_or_else(|| {
        CliError::Usage("no case given; pass --case or set `case` in the config file".into())
    })?;
    match open_case(path)? {
        Source::Matpower(mut net) => {
            apply_overrides(&mut net, cfg)?;
            let dict = dictionary(&net, cfg)?;
            Ok(carbon_casefile(&net, &dict)?)
        }
        Source::Enriched(enriched) => {
            if cfg.load_buses.is_none()
                && cfg.slack_bus.is_none()
                && cfg.metric.is_none()
                && cfg.fuel_dict.is_none()
            {
                return Ok(enriched);
            }
            let mut net = enriched.network;
            apply_overrides(&mut net, cfg)?;
            let dict = match &cfg.fuel_dict {
                Some(_) => dictionary(&net, cfg)?,
                None => match cfg.metric {
                    Some(metric) => enriched.dictionary.with_metric(metric),
                    None => enriched.dictionary,
                },
            };
            Ok(carbon_casefile(&net, &dict)?)
        }
    }
}

pub fn cost_model(cfg: &RunConfig, net: &EnrichedNetwork) -> Result<CostModel, CliError> {
    Ok(match cfg.cost {
        CostChoice::Case => CostModel::from_network(&net.network)?,
        CostChoice::Linear => CostModel::linear_from_network(&net.network),
    })
}

pub fn domain(cfg: &RunConfig, net: &EnrichedNetwork) -> Result<LoadDomain, CliError> {
    let nominal = net.network.nominal_load();
    let domain = match &cfg.domain {
        DomainSpec::Percent { low, high } => LoadDomain::from_percent(&nominal, *low, *high)?,
        DomainSpec::Absolute { lower, upper } => {
            if lower.len() != nominal.len() || upper.len() != nominal.len() {
                return Err(CliError::Usage(format!(
                    "--lower/--upper need {} entries each (one per load bus), got {} and {}",
                    nominal.len(),
                    lower.len(),
                    upper.len()
                )));
            }
            LoadDomain::new(lower.clone(), upper.clone())?
        }
    };
    Ok(domain)
}

/// Opens a region table, checking it against the configured case if any.
pub fn open_table(
    path: &Path,
    cfg: &RunConfig,
) -> Result<(RegionTable, Option<EnrichedNetwork>), CliError> {
    if !path.exists() {
        return Err(CliError::Read {
            path: path.into(),
            source: std::io::ErrorKind::NotFound.into(),
        });
    }
    match cfg.case {
        Some(_) => {
            let net = load_network(cfg)?;
            Ok((load_table_for(path, &net)?, Some(net)))
        }
        None => Ok((load_table(path)?, None)),
    }
}

/// External bus numbers of the parametric loads, in load-vector order.
pub fn load_bus_numbers(net: &EnrichedNetwork) -> Vec<u32> {
    net.network
        .load_buses()
        .iter()
        .map(|&i| net.network.buses[i].number)
        .collect()
}
