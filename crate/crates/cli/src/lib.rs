//! Command-line surface for carbongrid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod context;
pub mod error;
pub mod loads;
pub mod output;
pub mod serve;

use std::io::Write;

use clap::{Parser, Subcommand};

use commands::bench::BenchArgs;
use commands::enrich::EnrichArgs;
use commands::lmce::LmceArgs;
use commands::mpp::MppCommand;
use commands::opf::{MetricsArgs, OpfArgs};
use config::{CommonArgs, RunConfig};
use error::CliError;
use serve::ServeArgs;

#[derive(Debug, Parser)]
#[command(
    name = "carbongrid",
    version,
    about = "Carbon-aware DC optimal power flow and marginal emission signals"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attach fuel types and emission intensities to a case.
    Enrich(EnrichArgs),
    /// Solve the DC OPF for each scenario.
    Opf(OpfArgs),
    /// Emission rates, average carbon emissions and carbon cost.
    Metrics(MetricsArgs),
    /// Locational marginal carbon emissions.
    Lmce(LmceArgs),
    /// Critical-region tables.
    #[command(subcommand)]
    Mpp(MppCommand),
    /// Time exact solves against table lookups.
    Bench(BenchArgs),
    /// Serve table lookups over HTTP.
    Serve(ServeArgs),
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match &cli.command {
        Command::Enrich(a) => commands::enrich::run(&cfg, a, out),
        Command::Opf(a) => commands::opf::run(&cfg, a, out),
        Command::Metrics(a) => commands::opf::run_metrics(&cfg, a, out),
        Command::Lmce(a) => commands::lmce::run(&cfg, a, out),
        Command::Mpp(MppCommand::Build(a)) => commands::mpp::build(&cfg, a, out),
        Command::Mpp(MppCommand::Query(a)) => commands::mpp::query(&cfg, a, out),
        Command::Bench(a) => commands::bench::run(&cfg, a, out),
        Command::Serve(a) => serve::run(&cfg, a, out),
    }
}
