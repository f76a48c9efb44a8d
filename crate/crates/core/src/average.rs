//! Snapshot-deviation classification and the threshold-proportion study.
//!
//! For a state `rho` in dimension `d`, every snapshot overlap satisfies
//! `tr((I/d) s) = 1/d`, so the quantity
//!
//! ```text
//!     max_dev(rho) = max_s | tr(rho s) - 1/d |
//! ```
//!
//! measures how far `rho` sits from the maximally mixed state as seen by
//! the measurement ensemble. A state is *`s`-deviation-bounded* when
//! `max_dev(rho) <= s/d`; for such states the per-shot second moment of
//! the traceless-part estimate obeys `2 (s + 1) tr(O0^2)` uniformly in the
//! observable (audited by [`audit_deviation_bounded_variance`]).
//!
//! The scan is closed-form in `O(d^2)`: the four snapshots on a pair
//! `(j, k)` have overlaps `a/2 +- Re rho_jk` and `a/2 -+ Im rho_jk` with
//! `a = rho_jj + rho_kk`, so their worst deviation is
//! `|a/2 - 1/d| + max(|Re rho_jk|, |Im rho_jk|)`, and computational
//! snapshots contribute `|rho_tt - 1/d|`.
//!
//! [`run_proportion_study`] samples random states per qubit count `n`
//! (`d = 2^n`) and tabulates the fraction classified as bounded at each
//! threshold `s(n)`, e.g. constant `4`, linear `2n`, or quadratic `n^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ensemble::DdbEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{
    haar_random_pure, hs_random_mixed, DensityMatrix, HermitianObservable, RandomStream,
};
use crate::scalar::Scalar;
use crate::variance::variance_exact;
use crate::{io, tol};

/// Deviation threshold `s` as a function of the qubit count `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    /// `s(n) = c`.
    Const(f64),
    /// `s(n) = a * n`.
    TimesN(f64),
    /// `s(n) = n^p`.
    PowN(f64),
}

impl Threshold {
    /// Threshold value at qubit count `n >= 1`.
    pub fn value(&self, n: u32) -> f64 {
        let nf = f64::from(n);
        match *self {
            Threshold::Const(c) => c,
            Threshold::TimesN(a) => a * nf,
            Threshold::PowN(p) => nf.powf(p),
        }
    }

    /// Canonical textual form, parseable by [`FromStr`]: `"4"`, `"2n"`,
    /// `"n"`, `"n^2"`, ...
    pub fn label(&self) -> String {
        match *self {
            Threshold::Const(c) => fmt_num(c),
            Threshold::TimesN(a) if a == 1.0 => "n".into(),
            Threshold::TimesN(a) => format!("{}n", fmt_num(a)),
            Threshold::PowN(p) => format!("n^{}", fmt_num(p)),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn parse_positive(text: &str, whole: &str) -> Result<f64> {
    let v: f64 = text.parse().map_err(|_| Error::InvalidParameter {
        name: "threshold".into(),
        message: format!("cannot parse `{whole}`"),
    })?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name: "threshold".into(),
            message: format!("`{whole}` must be finite and positive"),
        })
    }
}

impl FromStr for Threshold {
    type Err = Error;

    /// Accepts `"<c>"`, `"<a>n"`, `"n"`, and `"n^<p>"` (e.g. `4`, `2n`,
    /// `n^2`). Coefficients must be positive so the classifier input
    /// `s > 0` holds at every `n`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "n" {
            return Ok(Threshold::TimesN(1.0));
        }
        if let Some(p) = t.strip_prefix("n^") {
            let p: f64 = p.parse().map_err(|_| Error::InvalidParameter {
                name: "threshold".into(),
                message: format!("cannot parse exponent in `{t}`"),
            })?;
            if !p.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "threshold".into(),
                    message: format!("exponent in `{t}` must be finite"),
                });
            }
            return Ok(Threshold::PowN(p));
        }
        if let Some(a) = t.strip_suffix('n') {
            return Ok(Threshold::TimesN(parse_positive(a, t)?));
        }
        Ok(Threshold::Const(parse_positive(t, t)?))
    }
}

/// Random-state family used by the proportion study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateFamily {
    /// Haar-random pure states.
    HaarPure,
    /// Mixed states with Hilbert-Schmidt-distributed spectra.
    HsMixed,
}

impl StateFamily {
    pub fn label(&self) -> &'static str {
        match self {
            StateFamily::HaarPure => "haar",
            StateFamily::HsMixed => "hs",
        }
    }

    fn draw(&self, dim: usize, rng: &mut RandomStream) -> Result<DensityMatrix<f64>> {
        match self {
            StateFamily::HaarPure => haar_random_pure(dim, rng),
            StateFamily::HsMixed => hs_random_mixed(dim, rng),
        }
    }
}

impl FromStr for StateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" | "haar-pure" | "pure" => Ok(StateFamily::HaarPure),
            "hs" | "hs-mixed" | "mixed" => Ok(StateFamily::HsMixed),
            other => Err(Error::InvalidParameter {
                name: "family".into(),
                message: format!("unknown state family `{other}` (expected haar|hs)"),
            }),
        }
    }
}

/// Largest deviation `max_s |tr(rho s) - 1/d|` over all snapshots, via the
/// `O(d^2)` closed-form scan described in the module docs.
pub fn max_deviation<S: Scalar>(
    rho: &DensityMatrix<S>,
    ensemble: &DdbEnsemble,
) -> Result<S> {
    let d = rho.dim();
    if d != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            left: d,
            right: ensemble.dim(),
        });
    }
    let inv_d = S::from_f64_lossy(d as f64).recip();
    let half = S::from_f64_lossy(0.5);
    let mut max = S::zero();
    for j in 0..d {
        let rjj = rho.entry(j, j).re;
        max = max.max((rjj - inv_d).abs());
        for k in (j + 1)..d {
            let a = rjj + rho.entry(k, k).re;
            let e = rho.entry(j, k);
            // Worst of the four pair overlaps a/2 +- Re and a/2 -+ Im.
            let dev = (a * half - inv_d).abs() + e.re.abs().max(e.im.abs());
            max = max.max(dev);
        }
    }
    Ok(max)
}

/// Whether `rho` is `s`-deviation-bounded: `max_dev(rho) <= s/d`, with
/// ties classified as bounded. Requires `s > 0`.
pub fn classify<S: Scalar>(
    rho: &DensityMatrix<S>,
    s: f64,
    ensemble: &DdbEnsemble,
) -> Result<bool> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "s".into(),
            message: format!("threshold must be positive (got {s})"),
        });
    }
    let dev = max_deviation(rho, ensemble)?;
    let cut = S::from_f64_lossy(s / ensemble.dim() as f64);
    Ok(dev <= cut)
}

/// Configuration of the threshold-proportion study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AverageStudyConfig {
    /// Qubit counts `n` to evaluate; each uses dimension `d = 2^n`.
    pub qubit_range: Vec<u32>,
    /// Random states per qubit count; must be at least 1.
    pub trials_per_dim: usize,
    pub thresholds: Vec<Threshold>,
    pub seed: u64,
    pub state_family: StateFamily,
    /// Worker threads; 0 uses the global thread pool.
    pub workers: usize,
}

impl AverageStudyConfig {
    fn validate(&self) -> Result<()> {
        if self.trials_per_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "trials_per_dim".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.qubit_range.is_empty() {
            return Err(Error::InvalidParameter {
                name: "qubit_range".into(),
                message: "must name at least one qubit count".into(),
            });
        }
        if self.thresholds.is_empty() {
            return Err(Error::InvalidParameter {
                name: "thresholds".into(),
                message: "must name at least one threshold".into(),
            });
        }
        for &n in &self.qubit_range {
            if n == 0 || (1usize << n) > crate::MAX_DIM {
                return Err(Error::InvalidParameter {
                    name: "qubit_range".into(),
                    message: format!(
                        "n = {n} maps outside the supported dimensions 2..={}",
                        crate::MAX_DIM
                    ),
                });
            }
        }
        Ok(())
    }
}

/// One `(n, threshold)` cell of the study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProportionRow {
    pub n: u32,
    pub dim: usize,
    /// Canonical threshold label, e.g. `"n^2"`.
    pub threshold: String,
    /// Numeric threshold value `s(n)`.
    pub s: f64,
    /// Fraction of sampled states classified as `s`-deviation-bounded.
    pub fraction: f64,
    pub trials: usize,
}

/// Full study output: one row per `(n, threshold)` pair, in configuration
/// order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProportionTable {
    pub family: StateFamily,
    pub seed: u64,
    pub rows: Vec<ProportionRow>,
}

impl ProportionTable {
    /// CSV with columns `n,d,s,fraction,trials` and a leading comment line
    /// carrying the artifact version, seed, and family.
    pub fn to_csv(&self, artifact_version: &str) -> String {
        let mut out = format!(
            "# ddb-shadow {artifact_version} seed={} family={}\n",
            self.seed,
            self.family.label()
        );
        out.push_str("n,d,s,fraction,trials\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.dim, r.s, r.fraction, r.trials
            ));
        }
        out
    }

    /// Plot-ready JSON: one series per threshold label, points ordered by
    /// `n`.
    pub fn to_json(&self, artifact_version: &str) -> serde_json::Value {
        let mut labels: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !labels.contains(&r.threshold.as_str()) {
                labels.push(&r.threshold);
            }
        }
        let series: Vec<serde_json::Value> = labels
            .iter()
            .map(|label| {
                let points: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .filter(|r| r.threshold == *label)
                    .map(|r| {
                        json!({
                            "n": r.n,
                            "d": r.dim,
                            "s": r.s,
                            "fraction": r.fraction,
                            "trials": r.trials,
                        })
                    })
                    .collect();
                json!({ "threshold": label, "points": points })
            })
            .collect();
        json!({
            "artifact": format!("ddb-shadow {artifact_version}"),
            "family": self.family.label(),
            "seed": self.seed,
            "series": series,
        })
    }
}

/// Runs the proportion study: for each `n`, draws `trials_per_dim` states
/// (stream id `(n << 32) | trial`, so every trial is reproducible in
/// isolation) and classifies the *same* state set against every threshold.
///
/// Output is bit-identical for any worker count. Within a row, `fraction`
/// is nondecreasing in `s` by construction (the threshold relaxes over the
/// same states).
pub fn run_proportion_study(cfg: &AverageStudyConfig) -> Result<ProportionTable> {
    cfg.validate()?;
    let run = || -> Result<Vec<ProportionRow>> {
        let mut rows = Vec::new();
        for &n in &cfg.qubit_range {
            let dim = 1usize << n;
            let ensemble = crate::ensemble::build_ensemble(dim)?;
            let deviations: Vec<f64> = {
                use rayon::prelude::*;
                (0..cfg.trials_per_dim)
                    .into_par_iter()
                    .map(|trial| {
                        let stream = (u64::from(n) << 32) | trial as u64;
                        let mut rng = RandomStream::new(cfg.seed, stream);
                        let rho = cfg.state_family.draw(dim, &mut rng)?;
                        max_deviation(&rho, &ensemble)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            for thr in &cfg.thresholds {
                let s = thr.value(n);
                if !(s > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "threshold".into(),
                        message: format!("{thr} is not positive at n = {n}"),
                    });
                }
                let cut = s / dim as f64;
                let hits = deviations.iter().filter(|&&dev| dev <= cut).count();
                rows.push(ProportionRow {
                    n,
                    dim,
                    threshold: thr.label(),
                    s,
                    fraction: hits as f64 / cfg.trials_per_dim as f64,
                    trials: cfg.trials_per_dim,
                });
            }
        }
        Ok(rows)
    };
    let rows = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(run)?
    } else {
        run()?
    };
    Ok(ProportionTable {
        family: cfg.state_family,
        seed: cfg.seed,
        rows,
    })
}

/// One audited state in [`DeviationAudit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationAuditRow {
    pub state_id: String,
    pub max_deviation: f64,
    /// Per-shot second moment of the traceless-part estimate.
    pub variance_exact: f64,
    /// `2 (s + 1) tr(O0^2)`.
    pub bound: f64,
    /// `variance_exact / bound`; must not exceed 1.
    pub ratio: f64,
}

/// Verdict of [`audit_deviation_bounded_variance`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationAudit {
    pub dim: usize,
    pub s: f64,
    /// The common bound `2 (s + 1) tr(O0^2)`.
    pub bound: f64,
    pub hs_norm_sq_traceless: f64,
    pub rows: Vec<DeviationAuditRow>,
}

/// Checks the deviation-bounded variance guarantee: every state must first
/// classify as `s`-deviation-bounded (otherwise the audit's precondition
/// fails), and then satisfy `variance_exact <= 2 (s + 1) tr(O0^2)`.
///
/// A violated bound is reported as [`Error::BoundViolation`] carrying the
/// offending state, so the counterexample can be replayed.
pub fn audit_deviation_bounded_variance<S: Scalar>(
    states: &[DensityMatrix<S>],
    obs: &HermitianObservable<S>,
    s: f64,
    ensemble: &DdbEnsemble,
) -> Result<DeviationAudit> {
    let d = obs.dim();
    if d != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            left: d,
            right: ensemble.dim(),
        });
    }
    let t = obs.traceless_part().hs_norm_sq().to_f64_lossy();
    let bound = 2.0 * (s + 1.0) * t;
    let slack = tol::STATISTICAL * (1.0 + t);
    let mut rows = Vec::with_capacity(states.len());
    for (i, sigma) in states.iter().enumerate() {
        let state_id = format!("state{i}");
        if !classify(sigma, s, ensemble)? {
            return Err(Error::Precondition(format!(
                "{state_id} is not {s}-deviation-bounded; the bound does not apply"
            )));
        }
        let report = variance_exact(sigma, obs)?;
        if report.variance_exact > bound + slack {
            return Err(Error::BoundViolation {
                state_id,
                variance: report.variance_exact,
                bound,
                state_json: io::density_to_json(sigma)?.to_string(),
            });
        }
        rows.push(DeviationAuditRow {
            state_id,
            max_deviation: max_deviation(sigma, ensemble)?.to_f64_lossy(),
            variance_exact: report.variance_exact,
            bound,
            ratio: if bound > 0.0 {
                report.variance_exact / bound
            } else {
                0.0
            },
        });
    }
    Ok(DeviationAudit {
        dim: d,
        s,
        bound,
        hs_norm_sq_traceless: t,
        rows,
    })
}
