//! Flag-value parsing and input loading shared by the subcommands.
//!
//! String-typed flag values (families, strategies, ranges, lists) are
//! parsed here so a bad value reports as an invalid parameter (exit 2),
//! distinct from unreadable files (exit 3) and from inputs that decode but
//! violate numeric invariants (exit 4).

use std::path::Path;
use std::str::FromStr;

use ddb_shadow::average::{StateFamily, Threshold};
use ddb_shadow::estimator::Strategy;
use ddb_shadow::io::{read_json, MatrixFile};
use ddb_shadow::linalg::{
    haar_random_pure, hs_random_mixed, make_rho_a, DensityMatrix, HermitianObservable,
    RandomStream,
};
use ddb_shadow::{Error, Result};

/// Stream id for state sampling, kept clear of the estimator's per-chunk
/// shot streams (which count up from 0).
pub const STATE_STREAM: u64 = u64::MAX;

/// `--seed` flag, else `$DDB_SHADOW_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("DDB_SHADOW_SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| Error::InvalidParameter {
            name: "DDB_SHADOW_SEED",
            message: format!("expected an unsigned integer, got {text:?}"),
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(std::env::VarError::NotUnicode(_)) => Err(Error::InvalidParameter {
            name: "DDB_SHADOW_SEED",
            message: "value is not valid UTF-8".into(),
        }),
    }
}

/// Inclusive qubit range: `2..8`, `2..=8`, or a single `5`.
pub fn parse_qubit_range(text: &str) -> Result<Vec<u32>> {
    let bad = |message: String| Error::InvalidParameter {
        name: "n-range",
        message,
    };
    let text = text.trim();
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo, hi.strip_prefix('=').unwrap_or(hi)),
        None => (text, text),
    };
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|_| bad(format!("bad lower bound in {text:?}")))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|_| bad(format!("bad upper bound in {text:?}")))?;
    if lo == 0 || hi < lo {
        return Err(bad(format!("need 1 <= lo <= hi, got {text:?}")));
    }
    Ok((lo..=hi).collect())
}

/// Comma-separated dimension list, e.g. `16,64,256`.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| Error::InvalidParameter {
                name: "dims",
                message: format!("bad dimension {part:?}"),
            })
        })
        .collect()
}

/// Comma-separated threshold list, e.g. `4,2n,n^2`.
pub fn parse_thresholds(text: &str) -> Result<Vec<Threshold>> {
    text.split(',').map(|part| Threshold::from_str(part)).collect()
}

pub fn parse_family(text: &str) -> Result<StateFamily> {
    StateFamily::from_str(text)
}

pub fn parse_strategy(text: &str) -> Result<Strategy> {
    match text.trim().to_ascii_lowercase().as_str() {
        "mean" => Ok(Strategy::Mean),
        "median-of-means" | "median_of_means" | "mom" => Ok(Strategy::MedianOfMeans),
        other => Err(Error::InvalidParameter {
            name: "strategy",
            message: format!("unknown strategy `{other}` (expected mean|median-of-means)"),
        }),
    }
}

pub fn load_observable(path: &Path) -> Result<HermitianObservable<f64>> {
    read_json::<MatrixFile>(path)?.to_observable()
}

pub fn load_density(path: &Path) -> Result<DensityMatrix<f64>> {
    read_json::<MatrixFile>(path)?.to_density()
}

/// Builds the state named by `--state` for the estimate command.
pub fn build_state(
    name: &str,
    dim: usize,
    rho_a_bound: f64,
    state_file: Option<&Path>,
    seed: u64,
) -> Result<DensityMatrix<f64>> {
    let mut rng = RandomStream::new(seed, STATE_STREAM);
    match name.trim().to_ascii_lowercase().as_str() {
        "maximally-mixed" | "mixed" => DensityMatrix::maximally_mixed(dim),
        "haar" => haar_random_pure(dim, &mut rng),
        "hs" => hs_random_mixed(dim, &mut rng),
        "rho-a" => make_rho_a(dim, rho_a_bound, &mut rng),
        "file" => {
            let path = state_file.ok_or(Error::InvalidParameter {
                name: "state-file",
                message: "--state file requires --state-file PATH".into(),
            })?;
            let rho = load_density(path)?;
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: rho.dim(),
                });
            }
            Ok(rho)
        }
        other => Err(Error::InvalidParameter {
            name: "state",
            message: format!(
                "unknown state family `{other}` (expected maximally-mixed|haar|hs|rho-a|file)"
            ),
        }),
    }
}

/// Least-squares slope of `ln y` against `ln x`; used by the bench tables.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
