use std::io::Write;
use std::path::PathBuf;

use carbongrid::case_io::save_enriched;
use clap::Args;
use serde::Serialize;

use crate::config::RunConfig;
use crate::context::load_network;
use crate::error::CliError;
use crate::output::{emit, num, Table};

#[derive(Debug, Clone, Args)]
pub struct EnrichArgs {
    /// Where to write the enriched case JSON.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct Row {
    id: usize,
    bus: u32,
    fuel: String,
    metric: String,
    intensity: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    case: &'a str,
    output: String,
    generators: Vec<Row>,
}

pub fn run(cfg: &RunConfig, args: &EnrichArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let enriched = load_network(cfg)?;
    save_enriched(&enriched, &args.output)?;

    let net = &enriched.network;
    let rows: Vec<Row> = net
        .generators
        .iter()
        .map(|g| {
            let carbon = g
                .carbon
                .expect("enriched generators carry a carbon profile");
            Row {
                id: g.id,
                bus: net.buses[g.bus].number,
                fuel: carbon.fuel.code().into(),
                metric: carbon.metric.code().into(),
                intensity: carbon.intensity,
            }
        })
        .collect();
    let mut table = Table::new(&["gen", "bus", "fuel", "metric", "t/MWh"]);
    for r in &rows {
        table.push(vec![
            r.id.to_string(),
            r.bus.to_string(),
            r.fuel.clone(),
            r.metric.clone(),
            num(r.intensity),
        ]);
    }
    let output = args.output.display().to_string();
    let report = Report {
        case: &net.name,
        output: output.clone(),
        generators: rows,
    };
    emit(
        out,
        cfg.format,
        &report,
        &[table],
        &[format!("wrote {output}")],
    )
}
