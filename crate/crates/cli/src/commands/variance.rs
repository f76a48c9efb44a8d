//! `variance`: audit the per-shot variance bounds over sampled states.
//!
//! Outputs: `bound_audit.csv` — one row per audited state (the maximally
//! mixed reference row first) with the exact second moment and its
//! distance to the 2·tr(O0^2) and 2d·tr(O0^2) bounds. A bound violation
//! aborts the run with the offending state embedded in the error.
//! `--worst-case-demo` adds `worst_case.csv`: the exact variance of the
//! pair state sigma = O = projector onto (|0> + |1>)/sqrt2 at doubling
//! dimensions, the configuration with the largest known variance-to-d
//! ratio.

use ddb_shadow::average::StateFamily;
use ddb_shadow::linalg::{haar_random_pure, hs_random_mixed, DensityMatrix, RandomStream};
use ddb_shadow::variance::{check_bounds, real_plus_projector, variance_exact};
use ddb_shadow::Result;

use num_complex::Complex;

use crate::inputs::{load_observable, parse_family, resolve_seed, STATE_STREAM};
use crate::manifest::{config_echo, csv_comment, Emitter, ARTIFACT_VERSION};
use crate::VarianceArgs;

pub fn run(args: &VarianceArgs) -> Result<()> {
    let seed = resolve_seed(args.common.seed)?;
    let family = parse_family(&args.family)?;
    let mut emitter = Emitter::new(&args.common.out)?;

    ddb_shadow::check_dim(args.dim)?;
    let obs = load_observable(&args.observable)?;
    if obs.dim() != args.dim {
        return Err(ddb_shadow::Error::DimensionMismatch {
            left: args.dim,
            right: obs.dim(),
        });
    }

    let mut rng = RandomStream::new(seed, STATE_STREAM);
    let states: Vec<DensityMatrix<f64>> = (0..args.states)
        .map(|_| match family {
            StateFamily::HaarPure => haar_random_pure(args.dim, &mut rng),
            StateFamily::HsMixed => hs_random_mixed(args.dim, &mut rng),
        })
        .collect::<Result<_>>()?;
    let audit = check_bounds(&obs, &states)?;
    emitter.write_text("bound_audit.csv", &audit.to_csv(ARTIFACT_VERSION, seed))?;

    if args.worst_case_demo {
        emitter.write_text("worst_case.csv", &worst_case_table(args.dim, seed)?)?;
    }
    emitter.finish("variance", config_echo(args)?, seed)
}

/// Exact variance of sigma = O = P for the two-level superposition
/// projector P, at d = 2, 4, 8, ... up to and including `dim`.
fn worst_case_table(dim: usize, seed: u64) -> Result<String> {
    let mut out = csv_comment(seed);
    out.push_str("d,diag_term,v_diag,variance_exact,v_diag_over_d\n");
    let mut d = 2usize;
    loop {
        let obs = real_plus_projector::<f64>(d)?;
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex::new(0.0, 0.0); d];
        amps[0] = Complex::new(half, 0.0);
        amps[1] = Complex::new(half, 0.0);
        let sigma = DensityMatrix::from_pure(&amps)?;
        let report = variance_exact(&sigma, &obs)?;
        out.push_str(&format!(
            "{d},{:.12e},{:.12e},{:.12e},{:.6}\n",
            report.diag_term,
            report.v_diag,
            report.variance_exact,
            report.v_diag / d as f64
        ));
        if d >= dim {
            break;
        }
        d = (d * 2).min(dim);
    }
    Ok(out)
}
