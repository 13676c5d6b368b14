use std::io::Write;
use std::path::PathBuf;

use carbongrid::mpp::{Facet, RegionTable};
use carbongrid::sensitivity::LmceEngine;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::context::{cost_model, load_bus_numbers, load_network, open_table};
use crate::error::CliError;
use crate::loads::read_loads;
use crate::output::{emit, join, num, short, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Solve and differentiate the optimality conditions.
    Exact,
    /// Look the load up in a region table.
    Mpp,
    /// Central differences of total emissions.
    Fd,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Mpp => "mpp",
            Method::Fd => "fd",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LmceArgs {
    /// Loads CSV; the nominal load is used when omitted.
    #[arg(long)]
    pub loads: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    /// Region table for the mpp method.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Finite-difference step in MW.
    #[arg(long)]
    pub step: Option<f64>,
    /// Compare two methods, e.g. `--compare exact,mpp`.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1..=2, conflicts_with = "method")]
    pub compare: Option<Vec<Method>>,
}

/// Boundary distance, relative to the row offset, below which a table hit
/// counts as lying on a region facet.
const FACET_TOL: f64 = 1e-7;

pub struct Estimate {
    pub lmce: Vec<f64>,
    /// Away from every region boundary, where all methods agree.
    pub interior: bool,
    pub region: Option<usize>,
}

pub enum Estimator {
    Exact(LmceEngine),
    Fd(LmceEngine, Option<f64>),
    Mpp(RegionTable),
}

/// Whether `load` lies strictly inside region `k`, ignoring facets that
/// come from the domain box.
pub fn strictly_inside(table: &RegionTable, k: usize, load: &[f64]) -> bool {
    let p = &table.regions[k].polytope;
    p.facets
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f, Facet::Row(_)))
        .all(|(r, _)| {
            let s: f64 = (0..load.len()).map(|c| p.m[(r, c)] * load[c]).sum();
            s < p.k[r] - FACET_TOL * p.k[r].abs().max(1.0)
        })
}

impl Estimator {
    pub fn estimate(&self, load: &[f64]) -> Result<Estimate, String> {
        match self {
            Estimator::Exact(engine) => {
                let r = engine.exact(load).map_err(|e| e.to_string())?;
                Ok(Estimate {
                    lmce: r.lmce,
                    interior: !r.at_boundary,
                    region: None,
                })
            }
            Estimator::Fd(engine, step) => {
                let r = engine
                    .finite_difference(load, *step)
                    .map_err(|e| e.to_string())?;
                Ok(Estimate {
                    interior: !r.one_sided.iter().any(|&s| s),
                    lmce: r.lmce,
                    region: None,
                })
            }
            Estimator::Mpp(table) => {
                let k = table.locate_region(load).map_err(|e| e.to_string())?;
                Ok(Estimate {
                    lmce: table.regions[k].lmce.clone(),
                    interior: strictly_inside(table, k, load),
                    region: Some(k),
                })
            }
        }
    }
}

#[derive(Serialize)]
struct Record {
    scenario: usize,
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    lmce: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interior: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

#[derive(Serialize)]
struct BusDeviation {
    bus: u32,
    mean: f64,
    max: f64,
}

#[derive(Serialize)]
struct Comparison {
    methods: [Method; 2],
    compared: usize,
    max: f64,
    per_bus: Vec<BusDeviation>,
}

#[derive(Serialize)]
struct LmceReport {
    load_buses: Vec<u32>,
    records: Vec<Record>,
    skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

/// An estimator with its load-bus order and, when a case was loaded, the
/// nominal load.
type Built = (Estimator, Vec<u32>, Option<Vec<f64>>);

fn build(method: Method, cfg: &RunConfig, args: &LmceArgs) -> Result<Built, CliError> {
    match method {
        Method::Mpp => {
            let path = args
                .table
                .as_deref()
                .ok_or_else(|| CliError::Usage("the mpp method needs a region table; build one with `carbongrid mpp build -o TABLE` and pass --table TABLE".into()))?;
            let (table, _) = open_table(path, cfg)?;
            let buses = table.load_buses.clone();
            Ok((Estimator::Mpp(table), buses, None))
        }
        Method::Exact | Method::Fd => {
            let net = load_network(cfg)?;
            let engine = LmceEngine::new(&net, cost_model(cfg, &net)?)?;
            let buses = load_bus_numbers(&net);
            let est = match method {
                Method::Exact => Estimator::Exact(engine),
                _ => Estimator::Fd(engine, args.step.or(cfg.tolerances.fd_step)),
            };
            Ok((est, buses, Some(net.network.nominal_load())))
        }
    }
}

pub fn run(cfg: &RunConfig, args: &LmceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let methods: Vec<Method> = args.compare.clone().unwrap_or_else(|| vec![args.method]);
    if args.compare.is_some() && (methods.len() != 2 || methods[0] == methods[1]) {
        return Err(CliError::Usage(
            "--compare needs two different methods, e.g. --compare exact,mpp".into(),
        ));
    }
    if args.step.is_some_and(|h| !(h > 0.0)) {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    let mut estimators = Vec::new();
    let mut buses: Option<Vec<u32>> = None;
    let mut nominal = None;
    for &m in &methods {
        let (est, b, nom) = build(m, cfg, args)?;
        nominal = nominal.or(nom);
        if buses.as_ref().is_some_and(|prev| *prev != b) {
            return Err(CliError::Usage(format!(
                "table load buses {b:?} differ from the case's {:?}",
                buses.unwrap()
            )));
        }
        buses = Some(b);
        estimators.push(est);
    }
    let buses = buses.expect("at least one method");
    let loads = match &args.loads {
        Some(path) => read_loads(path, &buses)?,
        None => match nominal {
            Some(nominal) => vec![nominal],
            None => {
                return Err(CliError::Usage(
                    "pass --loads, or --case to use the nominal load".into(),
                ))
            }
        },
    };

    let mut records = Vec::new();
    let mut skipped = 0;
    let mut sums = vec![0.0; buses.len()];
    let mut maxes = vec![0.0_f64; buses.len()];
    let mut compared = 0;
    let mut table = Table::new(&["scenario", "method", "region", "interior", "LMCE t/MWh"]);
    for (i, load) in loads.iter().enumerate() {
        let results: Vec<Result<Estimate, String>> =
            estimators.iter().map(|e| e.estimate(load)).collect();
        if results.iter().any(|r| r.is_err()) {
            skipped += 1;
        }
        if let [Ok(a), Ok(b)] = results.as_slice() {
            if a.interior && b.interior {
                compared += 1;
                for (k, (x, y)) in a.lmce.iter().zip(&b.lmce).enumerate() {
                    let d = (x - y).abs();
                    sums[k] += d;
                    maxes[k] = maxes[k].max(d);
                }
            }
        }
        for (&m, r) in methods.iter().zip(results) {
            let rec = match r {
                Ok(e) => Record {
                    scenario: i,
                    method: m,
                    lmce: Some(e.lmce),
                    interior: Some(e.interior),
                    region: e.region,
                    skipped: None,
                },
                Err(reason) => Record {
                    scenario: i,
                    method: m,
                    lmce: None,
                    interior: None,
                    region: None,
                    skipped: Some(reason),
                },
            };
            let fmt = if cfg.format == Format::Csv {
                num
            } else {
                short
            };
            table.push(vec![
                i.to_string(),
                m.name().into(),
                rec.region.map_or("-".into(), |k| k.to_string()),
                rec.interior
                    .map_or("-".into(), |b| if b { "yes".into() } else { "no".into() }),
                match (&rec.lmce, &rec.skipped) {
                    (Some(v), _) => join(v, fmt),
                    (None, Some(reason)) => format!("skipped: {reason}"),
                    (None, None) => String::new(),
                },
            ]);
            records.push(rec);
        }
    }

    let mut notes = vec![format!("{} scenarios, {} skipped", loads.len(), skipped)];
    let comparison = (methods.len() == 2).then(|| {
        let per_bus: Vec<BusDeviation> = buses
            .iter()
            .enumerate()
            .map(|(k, &bus)| BusDeviation {
                bus,
                mean: if compared > 0 {
                    sums[k] / compared as f64
                } else {
                    0.0
                },
                max: maxes[k],
            })
            .collect();
        Comparison {
            methods: [methods[0], methods[1]],
            compared,
            max: maxes.iter().copied().fold(0.0, f64::max),
            per_bus,
        }
    });
    let mut tables = vec![table];
    if let Some(c) = &comparison {
        let mut dev = Table::new(&["bus", "mean |dev|", "max |dev|"]).titled(format!(
            "{} vs {} over {} interior scenarios",
            methods[0].name(),
            methods[1].name(),
            c.compared
        ));
        for b in &c.per_bus {
            dev.push(vec![
                b.bus.to_string(),
                format!("{:.3e}", b.mean),
                format!("{:.3e}", b.max),
            ]);
        }
        notes.push(format!("max deviation {:e}", c.max));
        if cfg.format == Format::Csv {
            tables.insert(0, dev);
        } else {
            tables.push(dev);
        }
    }
    emit(
        out,
        cfg.format,
        &LmceReport {
            load_buses: buses,
            records,
            skipped,
            comparison,
        },
        &tables,
        &notes,
    )
}
