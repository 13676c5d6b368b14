//! Run configuration: an optional TOML file overridden by command-line flags.
//!
//! ```toml
//! case = "data/case14_congested.m"
//! metric = "co2e"
//! cost = "case"
//! load_buses = [4, 5, 9, 10, 11, 12, 13, 14]
//! format = "json"
//!
//! [domain]
//! low = 80.0
//! high = 120.0
//!
//! [tolerances]
//! fd_step = 0.1
//! agreement = 1e-9
//! lmp_match = 1e-9
//! ```

use std::path::{Path, PathBuf};

use carbongrid::grid::{EmissionMetric, FuelType};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "CARBONGRID_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Co2,
    Co2e,
}

impl From<Metric> for EmissionMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Co2 => EmissionMetric::Co2,
            Metric::Co2e => EmissionMetric::Co2e,
        }
    }
}

/// Which generation costs to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostChoice {
    /// Costs as stored in the case, quadratic terms included.
    #[default]
    Case,
    /// Linear coefficients only.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Finite-difference step in MW; default `max(0.1, 1e-4·‖load‖∞)`.
    pub fd_step: Option<f64>,
    /// Largest LMCE difference tolerated between exact and table lookups.
    pub agreement: f64,
    /// Relative tolerance for matching prices to a region.
    pub lmp_match: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fd_step: None,
            agreement: 1e-9,
            lmp_match: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TolerancesFile {
    fd_step: Option<f64>,
    agreement: Option<f64>,
    lmp_match: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DomainFile {
    low: Option<f64>,
    high: Option<f64>,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    case: Option<PathBuf>,
    fuel_dict: Option<PathBuf>,
    default_fuel: Option<String>,
    metric: Option<Metric>,
    cost: Option<CostChoice>,
    slack_bus: Option<u32>,
    load_buses: Option<Vec<u32>>,
    domain: DomainFile,
    tolerances: TolerancesFile,
    format: Option<Format>,
}

/// Flags shared by every command that reads a case.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// MATPOWER case file (.m) or enriched case (.json).
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    /// Fuel dictionary JSON: {"<generator index>": {"type": "NG", "emissions": "CO2"}}.
    #[arg(long, global = true)]
    pub fuel_dict: Option<PathBuf>,
    /// Fuel for generators without a dictionary entry or case label.
    #[arg(long, global = true)]
    pub default_fuel: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub metric: Option<Metric>,
    #[arg(long, global = true, value_enum)]
    pub cost: Option<CostChoice>,
    /// External number of the angle reference bus.
    #[arg(long, global = true)]
    pub slack_bus: Option<u32>,
    /// Parametric load buses, comma separated external numbers.
    #[arg(long, global = true, value_delimiter = ',')]
    pub load_buses: Option<Vec<u32>>,
    /// Domain lower bound in percent of nominal load.
    #[arg(long, global = true)]
    pub low: Option<f64>,
    /// Domain upper bound in percent of nominal load.
    #[arg(long, global = true)]
    pub high: Option<f64>,
    /// Absolute domain lower bounds in MW, comma separated, load-bus order.
    #[arg(long, global = true, value_delimiter = ',', conflicts_with = "low")]
    pub lower: Option<Vec<f64>>,
    /// Absolute domain upper bounds in MW, comma separated, load-bus order.
    #[arg(long, global = true, value_delimiter = ',', conflicts_with = "high")]
    pub upper: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    #[arg(long, global = true)]
    pub agreement_tol: Option<f64>,
    #[arg(long, global = true)]
    pub lmp_tol: Option<f64>,
    #[arg(long, short = 'f', global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Percent { low: f64, high: f64 },
    Absolute { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: Option<PathBuf>,
    pub fuel_dict: Option<PathBuf>,
    pub default_fuel: FuelType,
    /// Overrides the metric of every dictionary entry when set.
    pub metric: Option<EmissionMetric>,
    pub cost: CostChoice,
    pub slack_bus: Option<u32>,
    pub load_buses: Option<Vec<u32>>,
    pub domain: DomainSpec,
    pub tolerances: Tolerances,
    pub format: Format,
}

fn read_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Input {
        path: path.into(),
        message: e.to_string(),
    })
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => ConfigFile::default(),
        };
        let fuel_name = args
            .default_fuel
            .clone()
            .or(file.default_fuel)
            .unwrap_or_else(|| "NG".into());
        let default_fuel = FuelType::from_case_label(&fuel_name).ok_or_else(|| {
            CliError::Usage(format!("unknown fuel `{fuel_name}` for --default-fuel"))
        })?;

        let lower = args.lower.clone().or(file.domain.lower);
        let upper = args.upper.clone().or(file.domain.upper);
        let domain = match (lower, upper) {
            (Some(lower), Some(upper)) => DomainSpec::Absolute { lower, upper },
            (None, None) => {
                let low = args.low.or(file.domain.low).unwrap_or(80.0);
                let high = args.high.or(file.domain.high).unwrap_or(120.0);
                if !(low > 0.0 && low <= 100.0 && high >= 100.0 && high.is_finite()) {
                    return Err(CliError::Usage(format!("domain percentages must satisfy 0 < low <= 100 <= high, got {low} and {high}")));
                }
                DomainSpec::Percent { low, high }
            }
            _ => {
                return Err(CliError::Usage(
                    "--lower and --upper must be given together".into(),
                ))
            }
        };

        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            fd_step: args.fd_step.or(file.tolerances.fd_step),
            agreement: args
                .agreement_tol
                .or(file.tolerances.agreement)
                .unwrap_or(defaults.agreement),
            lmp_match: args
                .lmp_tol
                .or(file.tolerances.lmp_match)
                .unwrap_or(defaults.lmp_match),
        };
        if tolerances.fd_step.is_some_and(|h| !(h > 0.0)) {
            return Err(CliError::Usage(
                "finite-difference step must be positive".into(),
            ));
        }

        Ok(Self {
            case: args.case.clone().or(file.case),
            fuel_dict: args.fuel_dict.clone().or(file.fuel_dict),
            default_fuel,
            metric: args.metric.or(file.metric).map(Into::into),
            cost: args.cost.or(file.cost).unwrap_or_default(),
            slack_bus: args.slack_bus.or(file.slack_bus),
            load_buses: args.load_buses.clone().or(file.load_buses),
            domain,
            tolerances,
            format: args.format.or(file.format).unwrap_or_default(),
        })
    }
}
