//! Measurement simulation and trace estimation.
//!
//! A run draws a basis by its ensemble weight, Born-samples an outcome
//! inside that basis, and feeds the resulting snapshot through the
//! constant-time single-shot formulas. Per-shot values average (or
//! median-of-means combine) to an estimate of `tr(rho O)`.
//!
//! Reproducibility contract: shots are generated in fixed-size chunks, one
//! random stream per chunk keyed by `(seed, chunk index)`, and reduced in
//! chunk order. Results are bit-identical for a given seed regardless of
//! worker count or scheduling.

pub mod log;

use serde::{Deserialize, Serialize};

use crate::channel::{single_shot_estimate, ObservableEntries};
use crate::ensemble::{DdbEnsemble, SnapshotId};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, RandomStream, StateEntries};
use crate::scalar::Scalar;

/// Shots per random stream; fixed so that results do not depend on the
/// number of workers.
const SHOTS_PER_CHUNK: usize = 4096;

/// How per-shot values aggregate into the final estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mean,
    MedianOfMeans,
}

/// Configuration for one estimation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Number of measurement shots `m >= 1`.
    pub shots: usize,
    pub strategy: Strategy,
    /// Batch count `K` for median-of-means (`K = 1` reduces to the mean).
    pub batches: usize,
    pub seed: u64,
    /// Target additive accuracy (echoed into reports and shot planning).
    pub epsilon: f64,
    /// Target failure probability, in (0, 1).
    pub sigma: f64,
    /// Worker threads; 0 uses the global thread pool.
    pub workers: usize,
    /// Record the per-shot snapshots into the report's shadow log.
    pub keep_log: bool,
}

impl EstimationConfig {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self {
            shots,
            strategy: Strategy::Mean,
            batches: 1,
            seed,
            epsilon: 0.1,
            sigma: 0.05,
            workers: 0,
            keep_log: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidParameter {
                name: "shots".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.batches == 0 || self.batches > self.shots {
            return Err(Error::InvalidParameter {
                name: "batches".into(),
                message: format!(
                    "must satisfy 1 <= batches <= shots (got {} with {} shots)",
                    self.batches, self.shots
                ),
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon".into(),
                message: "must be positive".into(),
            });
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidParameter {
                name: "sigma".into(),
                message: "must lie strictly between 0 and 1".into(),
            });
        }
        Ok(())
    }
}

/// One recorded measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub snapshot: SnapshotId,
    pub shot_index: u64,
}

/// Outcome of an estimation run. All numeric fields are reported in f64
/// regardless of the working scalar type.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimationReport {
    pub estimate: f64,
    /// Mean strategy: sample standard deviation / sqrt(shots).
    /// Median-of-means: standard deviation of batch means / sqrt(batches)
    /// (a dispersion summary, not a rigorous confidence interval).
    pub std_error: f64,
    pub shots_used: u64,
    pub strategy: Strategy,
    pub batches: usize,
    pub seed: u64,
    pub shadow_log: Option<Vec<ShotRecord>>,
}

/// Exact outcome law of the measurement: probability per snapshot, indexed
/// by canonical snapshot index.
#[derive(Clone, Debug)]
pub struct SnapshotDistribution<S: Scalar> {
    dim: usize,
    probs: Vec<S>,
}

impl<S: Scalar> SnapshotDistribution<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Probability of one snapshot.
    pub fn prob(&self, s: &SnapshotId) -> Result<S> {
        Ok(self.probs[s.canonical_index(self.dim)?])
    }

    /// Probabilities in canonical snapshot order.
    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn total(&self) -> S {
        self.probs.iter().copied().sum()
    }
}

/// Computes `Pr(s | rho)` for every snapshot: the prior weight of the bases
/// containing `s` times the Born overlap `tr(rho s)`. Computational
/// snapshots carry prior `2/(2d)`, superposition snapshots `1/(2d)`.
pub fn exact_snapshot_distribution<S: Scalar>(
    rho: &DensityMatrix<S>,
    ensemble: &DdbEnsemble,
) -> Result<SnapshotDistribution<S>> {
    exact_snapshot_distribution_entries(rho, ensemble)
}

/// [`exact_snapshot_distribution`] over any [`StateEntries`] implementation.
pub fn exact_snapshot_distribution_entries<S: Scalar>(
    state: &impl StateEntries<S>,
    ensemble: &DdbEnsemble,
) -> Result<SnapshotDistribution<S>> {
    let d = ensemble.dim();
    if state.dim() != d {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: d,
        });
    }
    let mut probs = Vec::with_capacity(crate::ensemble::snapshot_count(d));
    for s in crate::ensemble::enumerate_snapshots(d)? {
        let w = ensemble.membership_weight(&s)?;
        let overlap = crate::ensemble::snapshot_overlap_entries(state, &s)?;
        probs.push(w.as_float::<S>() * overlap);
    }
    Ok(SnapshotDistribution { dim: d, probs })
}

/// Cached per-basis Born tables enabling O(log d) sampling per shot after an
/// O(d^2) build.
pub struct ShotSampler<S: Scalar> {
    dim: usize,
    even: bool,
    /// Per basis: members plus the running sum of their Born probabilities.
    tables: Vec<(Vec<SnapshotId>, Vec<S>)>,
}

impl<S: Scalar> ShotSampler<S> {
    pub fn new(state: &impl StateEntries<S>, ensemble: &DdbEnsemble) -> Result<Self> {
        let d = ensemble.dim();
        if state.dim() != d {
            return Err(Error::DimensionMismatch {
                left: state.dim(),
                right: d,
            });
        }
        let mut tables = Vec::with_capacity(ensemble.num_bases());
        for basis in ensemble.bases() {
            let mut cum = Vec::with_capacity(basis.members.len());
            let mut acc = S::zero();
            for s in &basis.members {
                let p = crate::ensemble::snapshot_overlap_entries(state, s)?;
                // Clamp tiny negative floating-point residue.
                acc += p.max(S::zero());
                cum.push(acc);
            }
            tables.push((basis.members.clone(), cum));
        }
        Ok(Self {
            dim: d,
            even: d % 2 == 0,
            tables,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws one snapshot: basis by exact rational weight, then a Born
    /// outcome within the basis.
    pub fn sample(&self, rng: &mut RandomStream) -> SnapshotId {
        let two_d = 2 * self.dim as u64;
        let r = rng.next_below(two_d) as usize;
        // Even d: lots {0,1} select the computational basis (weight 2/2d).
        let basis_idx = if self.even {
            if r < 2 {
                0
            } else {
                r - 1
            }
        } else {
            r
        };
        let (members, cum) = &self.tables[basis_idx];
        let u = S::from_f64_lossy(rng.next_unit());
        let target = u * *cum.last().expect("bases are nonempty");
        let pos = cum.partition_point(|&c| c < target);
        members[pos.min(members.len() - 1)]
    }
}

/// Simulates a single measurement: weighted basis choice, then Born sampling
/// within the chosen basis. Builds the Born tables on every call; use
/// [`ShotSampler`] directly for shot loops.
pub fn simulate_shot<S: Scalar>(
    rho: &DensityMatrix<S>,
    ensemble: &DdbEnsemble,
    rng: &mut RandomStream,
) -> Result<SnapshotId> {
    Ok(ShotSampler::new(rho, ensemble)?.sample(rng))
}

/// Estimates `tr(rho O)` by simulated DDB measurements on a known state.
pub fn estimate<S: Scalar>(
    rho: &DensityMatrix<S>,
    obs: &impl ObservableEntries<S>,
    ensemble: &DdbEnsemble,
    cfg: &EstimationConfig,
) -> Result<EstimationReport> {
    estimate_from_entries(rho, obs, ensemble, cfg)
}

/// [`estimate`] over any (thread-shareable) [`StateEntries`] implementation.
pub fn estimate_from_entries<S, St>(
    state: &St,
    obs: &impl ObservableEntries<S>,
    ensemble: &DdbEnsemble,
    cfg: &EstimationConfig,
) -> Result<EstimationReport>
where
    S: Scalar,
    St: StateEntries<S> + Sync,
{
    cfg.validate()?;
    if obs.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            left: obs.dim(),
            right: ensemble.dim(),
        });
    }
    let sampler = ShotSampler::new(state, ensemble)?;

    let run = || -> Result<(Vec<f64>, Option<Vec<ShotRecord>>)> {
        let m = cfg.shots;
        let num_chunks = m.div_ceil(SHOTS_PER_CHUNK);
        let chunks: Vec<(Vec<f64>, Vec<SnapshotId>)> = {
            use rayon::prelude::*;
            (0..num_chunks)
                .into_par_iter()
                .map(|chunk| {
                    let start = chunk * SHOTS_PER_CHUNK;
                    let len = SHOTS_PER_CHUNK.min(m - start);
                    let mut rng = RandomStream::new(cfg.seed, chunk as u64);
                    let mut values = Vec::with_capacity(len);
                    let mut snaps = if cfg.keep_log {
                        Vec::with_capacity(len)
                    } else {
                        Vec::new()
                    };
                    for _ in 0..len {
                        let s = sampler.sample(&mut rng);
                        let est = single_shot_estimate(obs, &s)
                            .expect("sampled snapshots are valid by construction");
                        values.push(est.value.to_f64_lossy());
                        if cfg.keep_log {
                            snaps.push(s);
                        }
                    }
                    (values, snaps)
                })
                .collect()
        };
        // Chunk-order reduction keeps the result independent of scheduling.
        let mut values = Vec::with_capacity(m);
        let mut log = cfg.keep_log.then(|| Vec::with_capacity(m));
        for (vals, snaps) in chunks {
            values.extend_from_slice(&vals);
            if let Some(log) = log.as_mut() {
                for s in snaps {
                    log.push(ShotRecord {
                        snapshot: s,
                        shot_index: log.len() as u64,
                    });
                }
            }
        }
        Ok((values, log))
    };

    let (values, shadow_log) = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(run)?
    } else {
        run()?
    };

    let (estimate, std_error) = aggregate(&values, cfg)?;
    Ok(EstimationReport {
        estimate,
        std_error,
        shots_used: values.len() as u64,
        strategy: cfg.strategy,
        batches: match cfg.strategy {
            Strategy::Mean => 1,
            Strategy::MedianOfMeans => cfg.batches,
        },
        seed: cfg.seed,
        shadow_log,
    })
}

fn aggregate(values: &[f64], cfg: &EstimationConfig) -> Result<(f64, f64)> {
    match cfg.strategy {
        Strategy::Mean => Ok(mean_and_stderr(values)),
        Strategy::MedianOfMeans => {
            let k = cfg.batches;
            let means = batch_means(values, k);
            let estimate = median(&means);
            let std_error = if k > 1 {
                let (_, se) = mean_and_stderr(&means);
                se
            } else {
                0.0
            };
            Ok((estimate, std_error))
        }
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Contiguous batches; the first `m mod K` batches hold one extra shot.
fn batch_means(values: &[f64], k: usize) -> Vec<f64> {
    let m = values.len();
    let base = m / k;
    let extra = m % k;
    let mut means = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let len = base + usize::from(b < extra);
        let slice = &values[start..start + len];
        means.push(slice.iter().sum::<f64>() / len as f64);
        start += len;
    }
    means
}

/// Median with the even-length convention of averaging the middle two.
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("estimates are finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// A planned shot budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub shots: u64,
    /// Median-of-means batch count `ceil(2 ln(2L/sigma))`.
    pub batches: u64,
    /// The absolute constant in the sample-complexity formula, echoed for
    /// audit.
    pub constant: f64,
}

/// Shot budget `ceil(C ln(2L/sigma) / epsilon^2 * variance_bound)` with
/// `C = 34`, sufficient for estimating `L` observables to accuracy
/// `epsilon` at failure probability `sigma` under the given per-shot
/// variance bound, using median-of-means with the returned batch count.
pub fn plan_shots(
    num_observables: u64,
    sigma: f64,
    epsilon: f64,
    variance_bound: f64,
) -> Result<ShotPlan> {
    const C: f64 = 34.0;
    if num_observables < 1 {
        return Err(Error::InvalidParameter {
            name: "num_observables".into(),
            message: "must be at least 1".into(),
        });
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter {
            name: "sigma".into(),
            message: "must lie strictly between 0 and 1".into(),
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon".into(),
            message: "must be positive".into(),
        });
    }
    if !(variance_bound >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "variance_bound".into(),
            message: "must be nonnegative".into(),
        });
    }
    let log_term = (2.0 * num_observables as f64 / sigma).ln();
    let shots = (C * log_term / (epsilon * epsilon) * variance_bound).ceil() as u64;
    let batches = (2.0 * log_term).ceil().max(1.0) as u64;
    Ok(ShotPlan {
        shots,
        batches,
        constant: C,
    })
}
