use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use carbongrid::opf::CostModel;
use carbongrid::sensitivity::LmceEngine;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lmce::{strictly_inside, Method};
use crate::config::RunConfig;
use crate::context::open_table;
use crate::error::CliError;
use crate::output::{emit, Table};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Region table built for the configured case.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub scenarios: usize,
    /// Seed for the uniform scenario sampler.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Timed passes per scenario; the fastest is kept.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Write one JSON record per scenario and method to this file.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub scenario: usize,
    pub method: Method,
    pub wall_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmce: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
struct Timing {
    mean_us: f64,
    max_us: f64,
}

impl Timing {
    fn of(times: &[f64]) -> Option<Self> {
        (!times.is_empty()).then(|| Timing {
            mean_us: times.iter().sum::<f64>() / times.len() as f64,
            max_us: times.iter().copied().fold(0.0, f64::max),
        })
    }
}

#[derive(Serialize)]
struct BenchSummary {
    scenarios: usize,
    /// Interior scenarios on which both methods were checked for agreement.
    compared: usize,
    max_deviation: f64,
    exact_failed: usize,
    mpp_not_found: usize,
    exact: Option<Timing>,
    mpp: Option<Timing>,
    speedup: Option<f64>,
}

fn time<T>(reps: usize, mut f: impl FnMut() -> T) -> (T, f64) {
    let mut best = f64::INFINITY;
    let mut value = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let v = f();
        best = best.min(start.elapsed().as_secs_f64() * 1e6);
        value = Some(v);
    }
    (value.expect("at least one repetition"), best)
}

pub fn run(cfg: &RunConfig, args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (table, net) = open_table(&args.table, cfg)?;
    let net =
        net.ok_or_else(|| CliError::Usage("bench needs --case to run the exact method".into()))?;
    let engine = LmceEngine::new(&net, CostModel::linear(table.cost.clone()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let loads: Vec<Vec<f64>> = (0..args.scenarios)
        .map(|_| table.domain.sample(&mut rng))
        .collect();

    for load in &loads {
        let _ = table.locate_region(load);
    }

    let mut records = Vec::with_capacity(2 * loads.len());
    let mut exact_times = Vec::new();
    let mut mpp_times = Vec::new();
    let mut compared = 0;
    let mut max_dev = 0.0_f64;
    let mut exact_failed = 0;
    let mut not_found = 0;
    for (i, load) in loads.iter().enumerate() {
        let (exact, t_exact) = time(args.reps, || engine.exact(load));
        let (hit, t_mpp) = time(args.reps, || {
            table
                .locate_region(load)
                .map(|k| (k, table.regions[k].lmce.clone()))
        });
        let exact = exact.ok();
        let hit = hit.ok();
        if exact.is_some() {
            exact_times.push(t_exact);
        } else {
            exact_failed += 1;
        }
        if hit.is_some() {
            mpp_times.push(t_mpp);
        } else {
            not_found += 1;
        }
        if let (Some(e), Some((k, lmce))) = (&exact, &hit) {
            if !e.at_boundary && strictly_inside(&table, *k, load) {
                compared += 1;
                let dev = e
                    .lmce
                    .iter()
                    .zip(lmce)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                max_dev = max_dev.max(dev);
                if !(dev <= cfg.tolerances.agreement) {
                    return Err(CliError::Compute(format!(
                        "exact and table LMCE disagree by {dev:e} (tolerance {:e}) at scenario {i}: load {load:?}, exact {:?}, table region {k} {:?}",
                        cfg.tolerances.agreement, e.lmce, lmce
                    )));
                }
            }
        }
        records.push(BenchRecord {
            scenario: i,
            method: Method::Exact,
            wall_us: t_exact,
            lmce: exact.map(|e| e.lmce),
            region: None,
        });
        let (region, lmce) = hit.map_or((None, None), |(k, v)| (Some(k), Some(v)));
        records.push(BenchRecord {
            scenario: i,
            method: Method::Mpp,
            wall_us: t_mpp,
            lmce,
            region,
        });
    }

    if let Some(path) = &args.records {
        let file = std::fs::File::create(path).map_err(|e| CliError::Input {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let mut w = BufWriter::new(file);
        for r in &records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        w.flush()?;
    }

    let exact = Timing::of(&exact_times);
    let mpp = Timing::of(&mpp_times);
    let speedup = match (&exact, &mpp) {
        (Some(e), Some(m)) if m.mean_us > 0.0 => Some(e.mean_us / m.mean_us),
        _ => None,
    };
    let mut t = Table::new(&["method", "mean us", "max us", "max/mean"]);
    for (name, timing) in [("exact", &exact), ("mpp", &mpp)] {
        match timing {
            Some(x) => t.push(vec![
                name.into(),
                format!("{:.3}", x.mean_us),
                format!("{:.3}", x.max_us),
                format!("{:.2}", x.max_us / x.mean_us),
            ]),
            None => t.push(vec![name.into(), "-".into(), "-".into(), "-".into()]),
        }
    }
    let mut notes = vec![
        format!(
            "{} scenarios, {} compared on region interiors, max deviation {:e}",
            loads.len(),
            compared,
            max_dev
        ),
        format!("{exact_failed} exact failures, {not_found} not found in the table"),
    ];
    if let Some(s) = speedup {
        notes.push(format!("speedup {s:.1}x"));
    }
    let summary = BenchSummary {
        scenarios: loads.len(),
        compared,
        max_deviation: max_dev,
        exact_failed,
        mpp_not_found: not_found,
        exact,
        mpp,
        speedup,
    };
    emit(out, cfg.format, &summary, &[t], &notes)
}
