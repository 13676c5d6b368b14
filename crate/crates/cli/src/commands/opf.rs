use std::io::Write;
use std::path::PathBuf;

use carbongrid::case_io::EnrichedNetwork;
use carbongrid::metrics::{
    carbon_cost, emission_report, taxed_cost_model, CarbonTax, EmissionReport,
};
use carbongrid::opf::{CostModel, Dcopf, SolveStatus};
use clap::Args;
use serde::Serialize;

use super::scenarios;
use crate::config::RunConfig;
use crate::context::{cost_model, load_network};
use crate::error::CliError;
use crate::output::{emit, join, num, short, Table};

#[derive(Debug, Clone, Args)]
pub struct OpfArgs {
    /// Loads CSV; the nominal load is used when omitted.
    #[arg(long)]
    pub loads: Option<PathBuf>,
    /// Carbon tax in currency per ton, added to every generator's cost.
    #[arg(long)]
    pub tax: Option<f64>,
}

#[derive(Serialize)]
struct Dispatch {
    scenario: usize,
    status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    dispatch: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    emissions: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
}

#[derive(Serialize)]
struct OpfReport {
    tax: Option<f64>,
    scenarios: Vec<Dispatch>,
}

fn dispatcher(
    cfg: &RunConfig,
    net: &EnrichedNetwork,
    tax: Option<f64>,
) -> Result<(Dcopf, Option<CarbonTax>), CliError> {
    let base: CostModel = cost_model(cfg, net)?;
    let tax = tax.map(CarbonTax::new).transpose()?;
    let cost = match tax {
        Some(t) => taxed_cost_model(&base, net, t)?,
        None => base,
    };
    Ok((Dcopf::new(&net.network, cost)?, tax))
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
    }
}

pub fn run(cfg: &RunConfig, args: &OpfArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let net = load_network(cfg)?;
    let loads = scenarios(args.loads.as_deref(), &net)?;
    let (dcopf, _) = dispatcher(cfg, &net, args.tax)?;

    let mut rows = Vec::with_capacity(loads.len());
    let mut table = Table::new(&["scenario", "status", "cost/h", "t/h", "dispatch MW"]);
    for (i, load) in loads.iter().enumerate() {
        let sol = dcopf.solve(load)?;
        let row = if sol.is_optimal() {
            let total = emission_report(&net, &sol.p_gen, load)?.total;
            Dispatch {
                scenario: i,
                status: sol.status,
                objective: Some(sol.objective),
                dispatch: sol.p_gen,
                emissions: Some(total),
                diagnostic: None,
            }
        } else {
            Dispatch {
                scenario: i,
                status: sol.status,
                objective: None,
                dispatch: Vec::new(),
                emissions: None,
                diagnostic: sol.diagnostic,
            }
        };
        table.push(vec![
            i.to_string(),
            status_name(row.status).into(),
            row.objective.map_or("-".into(), short),
            row.emissions.map_or("-".into(), short),
            if row.dispatch.is_empty() {
                row.diagnostic.clone().unwrap_or_default()
            } else {
                join(&row.dispatch, short)
            },
        ]);
        rows.push(row);
    }
    if cfg.format == crate::config::Format::Csv {
        table = csv_table(&rows, net.network.n_generators());
    }
    let failed = rows
        .iter()
        .filter(|r| r.status != SolveStatus::Optimal)
        .count();
    let notes = vec![format!("{} scenarios, {} not optimal", rows.len(), failed)];
    emit(
        out,
        cfg.format,
        &OpfReport {
            tax: args.tax,
            scenarios: rows,
        },
        &[table],
        &notes,
    )
}

fn csv_table(rows: &[Dispatch], n_gen: usize) -> Table {
    let mut headers = vec![
        "scenario".to_string(),
        "status".into(),
        "objective".into(),
        "emissions".into(),
    ];
    headers.extend((0..n_gen).map(|g| format!("p{g}")));
    let mut table = Table {
        title: None,
        headers,
        rows: Vec::new(),
    };
    for r in rows {
        let mut cells = vec![
            r.scenario.to_string(),
            status_name(r.status).into(),
            r.objective.map_or(String::new(), num),
            r.emissions.map_or(String::new(), num),
        ];
        cells.extend(r.dispatch.iter().map(|&p| num(p)));
        cells.resize(4 + n_gen, String::new());
        table.push(cells);
    }
    table
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Loads CSV; the nominal load is used when omitted.
    #[arg(long)]
    pub loads: Option<PathBuf>,
    /// Carbon tax in currency per ton; dispatch is re-optimized under it
    /// and its cost reported.
    #[arg(long)]
    pub tax: Option<f64>,
}

#[derive(Serialize)]
struct MetricsRow {
    scenario: usize,
    #[serde(flatten)]
    report: EmissionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    carbon_cost: Option<f64>,
}

#[derive(Serialize)]
struct MetricsReport {
    tax: Option<f64>,
    scenarios: Vec<MetricsRow>,
    infeasible: Vec<usize>,
}

pub fn run_metrics(
    cfg: &RunConfig,
    args: &MetricsArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let net = load_network(cfg)?;
    let loads = scenarios(args.loads.as_deref(), &net)?;
    let (dcopf, tax) = dispatcher(cfg, &net, args.tax)?;

    let mut rows = Vec::new();
    let mut infeasible = Vec::new();
    let mut summary = Table::new(&["scenario", "t/h", "load MW", "ACE t/MWh", "carbon cost/h"]);
    let mut per_bus = Table::new(&["scenario", "bus", "t/h"]).titled("emissions by bus");
    for (i, load) in loads.iter().enumerate() {
        let sol = dcopf.solve(load)?;
        if !sol.is_optimal() {
            infeasible.push(i);
            continue;
        }
        let report = emission_report(&net, &sol.p_gen, load)?;
        let cost = tax.map(|t| carbon_cost(&net, &sol.p_gen, t)).transpose()?;
        summary.push(vec![
            i.to_string(),
            short(report.total),
            short(report.total_load),
            report.ace.map_or("-".into(), short),
            cost.map_or("-".into(), short),
        ]);
        for (bus, rate) in &report.per_bus {
            per_bus.push(vec![i.to_string(), bus.to_string(), short(*rate)]);
        }
        rows.push(MetricsRow {
            scenario: i,
            report,
            carbon_cost: cost,
        });
    }
    if cfg.format == crate::config::Format::Csv {
        summary = Table::new(&["scenario", "total", "total_load", "ace", "carbon_cost"]);
        for r in &rows {
            summary.push(vec![
                r.scenario.to_string(),
                num(r.report.total),
                num(r.report.total_load),
                r.report.ace.map_or(String::new(), num),
                r.carbon_cost.map_or(String::new(), num),
            ]);
        }
    }
    let notes: Vec<String> = if infeasible.is_empty() {
        Vec::new()
    } else {
        vec![format!(
            "skipped {} infeasible scenarios: {infeasible:?}",
            infeasible.len()
        )]
    };
    emit(
        out,
        cfg.format,
        &MetricsReport {
            tax: args.tax,
            scenarios: rows,
            infeasible,
        },
        &[summary, per_bus],
        &notes,
    )
}
