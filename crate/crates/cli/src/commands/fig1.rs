//! `fig1`: fraction of randomly sampled states whose worst snapshot
//! deviation from the flat value 1/d stays within s/d, per qubit count and
//! threshold rule.
//!
//! Outputs: `proportions.csv` (rows `n,d,s,fraction,trials`) and
//! `proportions.json` (plot-ready series keyed by threshold label).

use ddb_shadow::average::{run_proportion_study, AverageStudyConfig};
use ddb_shadow::Result;

use crate::inputs::{parse_family, parse_qubit_range, parse_thresholds, resolve_seed};
use crate::manifest::{config_echo, Emitter, ARTIFACT_VERSION};
use crate::Fig1Args;

pub fn run(args: &Fig1Args) -> Result<()> {
    let seed = resolve_seed(args.common.seed)?;
    let cfg = AverageStudyConfig {
        qubit_range: parse_qubit_range(&args.n_range)?,
        trials_per_dim: args.trials,
        thresholds: parse_thresholds(&args.thresholds)?,
        seed,
        state_family: parse_family(&args.family)?,
        workers: args.common.workers,
    };
    let mut emitter = Emitter::new(&args.common.out)?;
    let table = run_proportion_study(&cfg)?;
    emitter.write_text("proportions.csv", &table.to_csv(ARTIFACT_VERSION))?;
    emitter.write_json("proportions.json", &table.to_json(ARTIFACT_VERSION))?;
    emitter.finish("fig1", config_echo(args)?, seed)
}
