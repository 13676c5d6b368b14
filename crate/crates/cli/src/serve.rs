//! Read-only HTTP endpoint over a region table.
//!
//! | route | body | answer |
//! |---|---|---|
//! | `POST /lmce` | `{"loads": [..]}` | `{"region", "lmce", "lmp"}` |
//! | `POST /lmce/from-lmp` | `{"lmp": [..]}` | `{"region", "lmce", "lmp"}` |
//! | `GET /regions` | | table metadata |
//!
//! Malformed bodies get 400. Loads the table cannot answer get 422 with an
//! `error` of `infeasible`, `outside_domain` or `uncovered`; price lookups
//! that fail get `no_match` or `ambiguous`.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use carbongrid::mpp::{LocateError, MppError, RegionTable};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::mpp::locate_kind;
use crate::config::RunConfig;
use crate::context::open_table;
use crate::error::CliError;

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
}

struct AppState {
    table: RegionTable,
    lmp_tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadsBody {
    loads: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LmpBody {
    lmp: Vec<f64>,
}

#[derive(Serialize)]
struct RegionAnswer<'a> {
    region: usize,
    lmce: &'a [f64],
    lmp: &'a [f64],
}

fn error(status: StatusCode, kind: &str, message: String) -> Response {
    (status, Json(json!({ "error": kind, "message": message }))).into_response()
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, Box<Response>> {
    serde_json::from_slice(body)
        .map_err(|e| Box::new(error(StatusCode::BAD_REQUEST, "malformed", e.to_string())))
}

fn answer(table: &RegionTable, k: usize) -> Response {
    let r = &table.regions[k];
    Json(RegionAnswer {
        region: k,
        lmce: &r.lmce,
        lmp: &r.lmp,
    })
    .into_response()
}

async fn lmce(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: LoadsBody = match parse(&body) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    match state.table.locate_region(&req.loads) {
        Ok(k) => answer(&state.table, k),
        Err(e @ LocateError::Dimension { .. }) => {
            error(StatusCode::BAD_REQUEST, locate_kind(&e), e.to_string())
        }
        Err(e) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            locate_kind(&e),
            e.to_string(),
        ),
    }
}

async fn from_lmp(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: LmpBody = match parse(&body) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    match state.table.region_from_lmp(&req.lmp, state.lmp_tol) {
        Ok(k) => answer(&state.table, k),
        Err(e @ MppError::Dimension { .. }) => error(StatusCode::BAD_REQUEST, "dimension", e.to_string()),
        Err(MppError::AmbiguousPrice(candidates)) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "error": "ambiguous", "message": "prices match several regions", "candidates": candidates })),
        )
            .into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, "no_match", e.to_string()),
    }
}

async fn regions(State(state): State<Arc<AppState>>) -> Response {
    let t = &state.table;
    let domain: Vec<[f64; 2]> = t
        .domain
        .lower
        .iter()
        .zip(&t.domain.upper)
        .map(|(&lo, &hi)| [lo, hi])
        .collect();
    Json(json!({
        "regions": t.len(),
        "load_buses": t.load_buses,
        "domain": domain,
        "fingerprint": t.fingerprint_hex(),
        "n_gen": t.n_gen(),
    }))
    .into_response()
}

pub fn router(table: RegionTable, lmp_tol: f64) -> Router {
    let state = Arc::new(AppState { table, lmp_tol });
    Router::new()
        .route("/lmce", post(lmce))
        .route("/lmce/from-lmp", post(from_lmp))
        .route("/regions", get(regions))
        .with_state(state)
}

pub fn run(cfg: &RunConfig, args: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (table, _) = open_table(&args.table, cfg)?;
    let app = router(table, cfg.tolerances.lmp_match);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {}: {e}", args.bind)))?;
        writeln!(out, "serving on http://{}", listener.local_addr()?)?;
        out.flush()?;
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
