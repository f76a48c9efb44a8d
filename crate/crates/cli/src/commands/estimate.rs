//! `estimate`: run the randomized-measurement estimator on one
//! (state, observable) pair and write the report.
//!
//! Outputs: `estimate.json` (estimate, dispersion, configuration echo, and
//! — with `--oracle` — the dense ground truth and absolute gap), plus
//! `shadow.bin`/`shadow.csv` when `--keep-log` is set.

use serde::Serialize;

use ddb_shadow::ensemble::build_ensemble;
use ddb_shadow::estimator::log::{serialize_shadow, shadow_csv};
use ddb_shadow::estimator::{estimate_from_entries, EstimationConfig, EstimationReport};
use ddb_shadow::linalg::trace_inner;
use ddb_shadow::Result;

use crate::inputs::{build_state, load_observable, parse_strategy, resolve_seed};
use crate::manifest::{config_echo, csv_comment, Emitter, ARTIFACT_VERSION};
use crate::EstimateArgs;

#[derive(Serialize)]
struct EstimateOutput<'a> {
    artifact_version: &'a str,
    dim: usize,
    state: &'a str,
    observable: String,
    oracle: Option<f64>,
    abs_error: Option<f64>,
    report: &'a EstimationReport,
}

pub fn run(args: &EstimateArgs) -> Result<()> {
    let seed = resolve_seed(args.common.seed)?;
    let strategy = parse_strategy(&args.strategy)?;
    let mut emitter = Emitter::new(&args.common.out)?;

    ddb_shadow::check_dim(args.dim)?;
    let obs = load_observable(&args.observable)?;
    if obs.dim() != args.dim {
        return Err(ddb_shadow::Error::DimensionMismatch {
            left: args.dim,
            right: obs.dim(),
        });
    }
    let rho = build_state(
        &args.state,
        args.dim,
        args.rho_a_bound,
        args.state_file.as_deref(),
        seed,
    )?;
    let ensemble = build_ensemble(args.dim)?;

    let mut cfg = EstimationConfig::new(args.shots, seed);
    cfg.strategy = strategy;
    cfg.batches = args.batches;
    cfg.workers = args.common.workers;
    cfg.keep_log = args.keep_log;

    let mut report = estimate_from_entries(&rho, &obs, &ensemble, &cfg)?;
    if let Some(log) = report.shadow_log.take() {
        // The record goes to dedicated files; the JSON report stays small.
        emitter.write_bytes("shadow.bin", &serialize_shadow(&log, args.dim)?)?;
        let csv = format!("{}{}", csv_comment(seed), shadow_csv(&log));
        emitter.write_text("shadow.csv", &csv)?;
    }

    let oracle = if args.oracle {
        Some(trace_inner(rho.matrix(), obs.matrix())?.re)
    } else {
        None
    };
    let output = EstimateOutput {
        artifact_version: ARTIFACT_VERSION,
        dim: args.dim,
        state: &args.state,
        observable: args.observable.display().to_string(),
        oracle,
        abs_error: oracle.map(|o| (report.estimate - o).abs()),
        report: &report,
    };
    emitter.write_json("estimate.json", &output)?;
    emitter.finish("estimate", config_echo(args)?, seed)
}
