use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use carbongrid::mpp::{
    explore_regions_with, save_table, ExploreOptions, ExploreStats, LocateError,
};
use clap::{Args, Subcommand};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::context::{cost_model, domain, load_network, open_table};
use crate::error::CliError;
use crate::loads::read_loads;
use crate::output::{emit, join, num, short, Table};

#[derive(Debug, Clone, Subcommand)]
pub enum MppCommand {
    /// Enumerate the critical regions over the load domain and save them.
    Build(BuildArgs),
    /// Look scenarios up in a saved region table.
    Query(QueryArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Where to write the region table.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
    #[arg(long, default_value_t = ExploreOptions::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = ExploreOptions::default().max_regions)]
    pub max_regions: usize,
    /// Random points per coverage sweep.
    #[arg(long, default_value_t = ExploreOptions::default().coverage_samples)]
    pub coverage_samples: usize,
    /// Expected region count to report the result against.
    #[arg(long)]
    pub reference: Option<usize>,
}

#[derive(Serialize)]
struct BuildReport {
    output: String,
    regions: usize,
    fingerprint: String,
    load_buses: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<usize>,
    stats: ExploreStats,
}

pub fn build(cfg: &RunConfig, args: &BuildArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let net = load_network(cfg)?;
    let cost = cost_model(cfg, &net)?;
    if !cost.is_linear() {
        return Err(CliError::Usage("region tables need linear costs; the case has quadratic terms, pass --cost linear to drop them".into()));
    }
    let domain = domain(cfg, &net)?;
    let mut seed = net.network.nominal_load();
    if !domain.contains(&seed) {
        seed = domain.center();
    }
    let opts = ExploreOptions {
        seed: args.seed,
        max_regions: args.max_regions,
        coverage_samples: args.coverage_samples,
        ..Default::default()
    };
    let (table, stats) = explore_regions_with(&net, &cost, &domain, &seed, &opts)?;
    save_table(&table, &args.output)?;

    let mut summary = Table::new(&[
        "regions",
        "solves",
        "facets crossed",
        "shared",
        "coverage points",
        "uncovered",
    ]);
    summary.push(vec![
        table.len().to_string(),
        stats.solves.to_string(),
        stats.facets_crossed.to_string(),
        stats.shared_facets.to_string(),
        stats.coverage_points.to_string(),
        stats.uncovered_points.to_string(),
    ]);
    let mut regions = Table::new(&["region", "radius", "facets", "LMCE t/MWh"]).titled("regions");
    for (k, r) in table.regions.iter().enumerate() {
        regions.push(vec![
            k.to_string(),
            short(r.polytope.radius),
            r.polytope.n_rows().to_string(),
            join(&r.lmce, short),
        ]);
    }
    let mut notes = vec![format!(
        "{} regions written to {}",
        table.len(),
        args.output.display()
    )];
    if let Some(reference) = args.reference {
        let verdict = if reference == table.len() {
            "matches".to_string()
        } else {
            format!("differs by {}", table.len().abs_diff(reference))
        };
        notes.push(format!("reference count {reference}: {verdict}"));
    }
    let report = BuildReport {
        output: args.output.display().to_string(),
        regions: table.len(),
        fingerprint: table.fingerprint_hex(),
        load_buses: table.load_buses.clone(),
        reference: args.reference,
        stats,
    };
    emit(out, cfg.format, &report, &[summary, regions], &notes)
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Loads CSV with a header of load-bus numbers.
    #[arg(long)]
    pub loads: PathBuf,
    /// Include per-query latency in JSON and CSV output; table output
    /// always shows it.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Serialize)]
struct QueryRow {
    scenario: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lmce: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lmp: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    not_found: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latency_us: Option<f64>,
}

#[derive(Serialize)]
struct QueryReport {
    fingerprint: String,
    load_buses: Vec<u32>,
    scenarios: Vec<QueryRow>,
    not_found: usize,
}

pub fn locate_kind(e: &LocateError) -> &'static str {
    match e {
        LocateError::Dimension { .. } => "dimension",
        LocateError::Infeasible { .. } => "infeasible",
        LocateError::OutsideDomain => "outside_domain",
        LocateError::Uncovered => "uncovered",
    }
}

pub fn query(cfg: &RunConfig, args: &QueryArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (table, _) = open_table(&args.table, cfg)?;
    let loads = read_loads(&args.loads, &table.load_buses)?;
    let timings = args.timings || cfg.format == Format::Table;

    let mut rows = Vec::with_capacity(loads.len());
    for (i, load) in loads.iter().enumerate() {
        let start = Instant::now();
        let hit = table
            .locate_region(load)
            .map(|k| (k, table.regions[k].lmce.clone()));
        let elapsed = start.elapsed().as_secs_f64() * 1e6;
        let latency_us = timings.then_some(elapsed);
        rows.push(match hit {
            Ok((k, lmce)) => QueryRow {
                scenario: i,
                region: Some(k),
                lmce: Some(lmce),
                lmp: Some(table.regions[k].lmp.clone()),
                not_found: None,
                reason: None,
                latency_us,
            },
            Err(e) => QueryRow {
                scenario: i,
                region: None,
                lmce: None,
                lmp: None,
                not_found: Some(locate_kind(&e)),
                reason: Some(e.to_string()),
                latency_us,
            },
        });
    }

    let fmt = if cfg.format == Format::Csv {
        num
    } else {
        short
    };
    let mut headers = vec!["scenario", "region", "LMCE t/MWh", "LMP /MWh"];
    if timings {
        headers.push("latency us");
    }
    let mut t = Table::new(&headers);
    for r in &rows {
        let mut cells = vec![
            r.scenario.to_string(),
            r.region
                .map_or_else(|| r.not_found.unwrap_or("-").to_string(), |k| k.to_string()),
            r.lmce
                .as_deref()
                .map_or_else(|| r.reason.clone().unwrap_or_default(), |v| join(v, fmt)),
            r.lmp.as_deref().map_or(String::new(), |v| join(v, fmt)),
        ];
        if let Some(us) = r.latency_us {
            cells.push(format!("{us:.3}"));
        }
        t.push(cells);
    }
    let missing = rows.iter().filter(|r| r.region.is_none()).count();
    let mut notes = vec![format!("{} scenarios, {} not found", rows.len(), missing)];
    let times: Vec<f64> = rows.iter().filter_map(|r| r.latency_us).collect();
    if !times.is_empty() {
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let max = times.iter().copied().fold(0.0, f64::max);
        notes.push(format!("query latency mean {mean:.3} us, max {max:.3} us"));
    }
    let report = QueryReport {
        fingerprint: table.fingerprint_hex(),
        load_buses: table.load_buses.clone(),
        scenarios: rows,
        not_found: missing,
    };
    emit(out, cfg.format, &report, &[t], &notes)
}
