//! Affine-form stabilizer states and block-reduced expectation estimation.
//!
//! A state on `n` qubits is stored in affine form: its support is the
//! coset `{ R u + t : u in F_2^r }` of a rank-`r` binary column space, and
//! the amplitude at `R u + t` is
//!
//! ```text
//!     i^p * i^{ (l . u + 2 u^T Q u) mod 4 } / sqrt(2^r)
//! ```
//!
//! with `l in Z_4^r`, `Q` strictly upper triangular over F_2, and a global
//! phase `i^p`. All amplitudes share magnitude `2^{-r/2}` and their ratios
//! are fourth roots of unity.
//!
//! Estimating `tr(|psi><psi| O)` never needs the full `2^n` space: an
//! invertible affine index map `pi(x) = M x + c` with `M R = [e_0..e_{r-1}]`
//! and `c = M t` relabels the support onto `{0, .., 2^r - 1}`, so the
//! expectation equals `tr(|phi><phi| B)` for the reduced `r`-qubit state
//! `phi` and the conjugated block `B_{uv} = O_{pi^{-1}(u), pi^{-1}(v)}`.
//! Small blocks are summed directly; larger ones go through the randomized
//! estimator, where the block's diagonal trace term (cost `2^r`) can be
//! corrected exactly, neglected, or replaced by the bound
//! `tr(O^2) / sqrt(2^r)`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::ObservableEntries;
use crate::ensemble::{build_ensemble, enumerate_snapshots, snapshot_overlap_entries, SnapshotId};
use crate::error::{Error, Result};
use crate::estimator::{estimate_from_entries, plan_shots, EstimationConfig, Strategy};
use crate::gf2::{complete_to_basis, BitMatrix};
use crate::io::{self, StabilizerStateFile};
use crate::linalg::{PureState, RandomStream};
use crate::scalar::Scalar;
use crate::{MAX_AMPLITUDE_QUBITS, MAX_STRUCTURAL_QUBITS};

/// Stabilizer state in affine support form (see module docs).
///
/// Structural operations (validation, reduction, index maps) work up to
/// [`MAX_STRUCTURAL_QUBITS`]; materializing amplitudes additionally
/// requires `n <=` [`MAX_AMPLITUDE_QUBITS`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineStabilizerState {
    n: usize,
    r: usize,
    /// Columns of the binary support matrix `R`, each an `n`-bit mask.
    basis: Vec<u64>,
    /// Affine shift `t`, an `n`-bit mask.
    shift: u64,
    /// Linear phase coefficients over `Z_4`, one per support coordinate.
    lin: Vec<u8>,
    /// Strictly upper-triangular quadratic form: `quad[j]` masks the
    /// coordinates `k > j` coupled to `j`.
    quad: Vec<u64>,
    /// Global phase `i^phase_power`.
    phase_power: u8,
}

fn width_mask(bits: usize) -> u64 {
    if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl AffineStabilizerState {
    pub fn new(
        n: usize,
        r: usize,
        basis: Vec<u64>,
        shift: u64,
        lin: Vec<u8>,
        quad: Vec<u64>,
        phase_power: u8,
    ) -> Result<Self> {
        if n == 0 || n > MAX_STRUCTURAL_QUBITS {
            return Err(Error::QubitCapExceeded {
                n,
                cap: MAX_STRUCTURAL_QUBITS,
            });
        }
        if r > n {
            return Err(Error::InvalidParameter {
                name: "r".into(),
                message: format!("support rank {r} exceeds qubit count {n}"),
            });
        }
        let n_mask = width_mask(n);
        let r_mask = width_mask(r);
        if basis.len() != r || lin.len() != r || quad.len() != r {
            return Err(Error::InvalidParameter {
                name: "basis/lin/quad".into(),
                message: format!(
                    "expected {r} entries each, got {}/{}/{}",
                    basis.len(),
                    lin.len(),
                    quad.len()
                ),
            });
        }
        if basis.iter().any(|&c| c & !n_mask != 0) || shift & !n_mask != 0 {
            return Err(Error::InvalidParameter {
                name: "basis/shift".into(),
                message: format!("columns and shift must fit in {n} bits"),
            });
        }
        if lin.iter().any(|&l| l >= 4) || phase_power >= 4 {
            return Err(Error::InvalidParameter {
                name: "lin/phase_power".into(),
                message: "phase coefficients live in Z_4".into(),
            });
        }
        for (j, &q) in quad.iter().enumerate() {
            // Strictly upper: row j may couple only to coordinates k > j.
            let allowed = r_mask & !width_mask(j + 1);
            if q & !allowed != 0 {
                return Err(Error::InvalidParameter {
                    name: "quad".into(),
                    message: format!("row {j} couples outside the strict upper triangle"),
                });
            }
        }
        let rank = BitMatrix::from_columns(&basis, n)?.rank();
        if rank != r {
            return Err(Error::RankDeficient { rank, expected: r });
        }
        Ok(Self {
            n,
            r,
            basis,
            shift,
            lin,
            quad,
            phase_power,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    /// Basis-state index `R u + t` supporting coordinate `u`.
    pub fn support_index(&self, u: u64) -> u64 {
        let mut x = self.shift;
        for (j, &col) in self.basis.iter().enumerate() {
            if (u >> j) & 1 == 1 {
                x ^= col;
            }
        }
        x
    }

    /// Exponent of `i` contributed by coordinate `u` (excluding the global
    /// phase): `(l . u + 2 u^T Q u) mod 4`.
    pub fn phase_exponent(&self, u: u64) -> u8 {
        let mut e = 0u32;
        for j in 0..self.r {
            if (u >> j) & 1 == 1 {
                e += u32::from(self.lin[j]) + 2 * (self.quad[j] & u).count_ones();
            }
        }
        (e % 4) as u8
    }

    /// Dense amplitude vector of length `2^n`; requires
    /// `n <=` [`MAX_AMPLITUDE_QUBITS`].
    pub fn amplitudes<S: Scalar>(&self) -> Result<Vec<Complex<S>>> {
        if self.n > MAX_AMPLITUDE_QUBITS {
            return Err(Error::QubitCapExceeded {
                n: self.n,
                cap: MAX_AMPLITUDE_QUBITS,
            });
        }
        let zero = Complex::new(S::zero(), S::zero());
        let mut amps = vec![zero; 1usize << self.n];
        let norm = S::from_f64_lossy(0.5f64.powi(self.r as i32)).sqrt();
        let table = [
            Complex::new(norm, S::zero()),
            Complex::new(S::zero(), norm),
            Complex::new(-norm, S::zero()),
            Complex::new(S::zero(), -norm),
        ];
        for u in 0..(1u64 << self.r) {
            let p = (self.phase_power + self.phase_exponent(u)) % 4;
            amps[self.support_index(u) as usize] = table[p as usize];
        }
        Ok(amps)
    }
}

const RANK_SAMPLE_ATTEMPTS: usize = 256;

/// Uniformly random affine-form state: support basis rejection-sampled to
/// full rank, phases uniform.
pub fn random_affine_stabilizer(
    n: usize,
    r: usize,
    rng: &mut RandomStream,
) -> Result<AffineStabilizerState> {
    if n == 0 || n > MAX_STRUCTURAL_QUBITS {
        return Err(Error::QubitCapExceeded {
            n,
            cap: MAX_STRUCTURAL_QUBITS,
        });
    }
    if r > n {
        return Err(Error::InvalidParameter {
            name: "r".into(),
            message: format!("support rank {r} exceeds qubit count {n}"),
        });
    }
    let n_mask = width_mask(n);
    let r_mask = width_mask(r);
    let mut basis = Vec::with_capacity(r);
    'attempts: for attempt in 0.. {
        if attempt >= RANK_SAMPLE_ATTEMPTS {
            return Err(Error::Precondition(format!(
                "no rank-{r} basis found in {RANK_SAMPLE_ATTEMPTS} draws"
            )));
        }
        basis.clear();
        for _ in 0..r {
            basis.push(rng.next_u64() & n_mask);
        }
        if BitMatrix::from_columns(&basis, n)?.rank() == r {
            break 'attempts;
        }
    }
    let shift = rng.next_u64() & n_mask;
    let lin: Vec<u8> = (0..r).map(|_| rng.next_below(4) as u8).collect();
    let quad: Vec<u64> = (0..r)
        .map(|j| rng.next_u64() & r_mask & !width_mask(j + 1))
        .collect();
    let phase_power = rng.next_below(4) as u8;
    AffineStabilizerState::new(n, r, basis, shift, lin, quad, phase_power)
}

/// The single-qubit state `(|0> + |1>) / sqrt(2)`: every amplitude shares
/// one phase, so its best snapshot overlap is 1 -- far above `1/2^r`.
pub fn uniform_phase_counterexample() -> AffineStabilizerState {
    AffineStabilizerState::new(1, 1, vec![1], 0, vec![0], vec![0], 0)
        .expect("static state is valid")
}

impl AffineStabilizerState {
    /// Serializable text form; inverse of [`AffineStabilizerState::from_file`].
    pub fn to_file(&self) -> StabilizerStateFile {
        let row = |i: usize| -> u64 {
            let mut m = 0u64;
            for (j, &col) in self.basis.iter().enumerate() {
                m |= ((col >> i) & 1) << j;
            }
            m
        };
        StabilizerStateFile {
            n: self.n,
            r: self.r,
            r_rows: (0..self.n).map(|i| io::render_bits(row(i), self.r)).collect(),
            t: io::render_bits(self.shift, self.n),
            lin: self.lin.clone(),
            quad_rows: (0..self.r)
                .map(|j| io::render_bits(self.quad[j], self.r))
                .collect(),
            global_phase: io::render_phase(self.phase_power).into(),
        }
    }

    pub fn from_file(file: &StabilizerStateFile) -> Result<Self> {
        let (n, r) = (file.n, file.r);
        if file.r_rows.len() != n {
            return Err(Error::Malformed(format!(
                "expected {n} support-matrix rows, got {}",
                file.r_rows.len()
            )));
        }
        if file.quad_rows.len() != r {
            return Err(Error::Malformed(format!(
                "expected {r} quadratic rows, got {}",
                file.quad_rows.len()
            )));
        }
        let mut basis = vec![0u64; r];
        for (i, row) in file.r_rows.iter().enumerate() {
            let mask = io::parse_bits(row, r, "support-matrix row")?;
            for (j, b) in basis.iter_mut().enumerate() {
                *b |= ((mask >> j) & 1) << i;
            }
        }
        let shift = io::parse_bits(&file.t, n, "shift")?;
        let quad = file
            .quad_rows
            .iter()
            .map(|row| io::parse_bits(row, r, "quadratic row"))
            .collect::<Result<Vec<_>>>()?;
        let phase_power = io::parse_phase(&file.global_phase)?;
        AffineStabilizerState::new(n, r, basis, shift, file.lin.clone(), quad, phase_power)
    }
}

/// Invertible affine relabeling `pi(x) = M x + c` of basis-state indices.
#[derive(Clone, Debug)]
pub struct AffineIndexMap {
    forward: BitMatrix,
    backward: BitMatrix,
    offset: u64,
}

impl AffineIndexMap {
    /// Number of index bits `n`.
    pub fn bits(&self) -> usize {
        self.forward.rows()
    }

    pub fn apply(&self, x: u64) -> u64 {
        self.forward.mul_vec(x) ^ self.offset
    }

    pub fn apply_inverse(&self, y: u64) -> u64 {
        self.backward.mul_vec(y ^ self.offset)
    }
}

/// Builds the index map sending the support of `psi` onto `{0..2^r - 1}`
/// (so `pi(R u + t) = u`) together with the reduced `r`-qubit state, which
/// keeps the phase data verbatim over the identity support.
///
/// Rejects `r = 0`: a rank-0 state is the single basis vector `|t>` and
/// needs no reduction.
pub fn reduce_to_block(
    psi: &AffineStabilizerState,
) -> Result<(AffineIndexMap, AffineStabilizerState)> {
    if psi.r == 0 {
        return Err(Error::Precondition(
            "rank-0 support needs no block reduction; read the single entry directly".into(),
        ));
    }
    let mut cols = psi.basis.clone();
    cols.extend(complete_to_basis(&psi.basis, psi.n)?);
    let backward = BitMatrix::from_columns(&cols, psi.n)?;
    let forward = backward.inverted()?;
    let offset = forward.mul_vec(psi.shift);
    let map = AffineIndexMap {
        forward,
        backward,
        offset,
    };
    let reduced = AffineStabilizerState::new(
        psi.r,
        psi.r,
        (0..psi.r).map(|j| 1u64 << j).collect(),
        0,
        psi.lin.clone(),
        psi.quad.clone(),
        psi.phase_power,
    )?;
    Ok((map, reduced))
}

/// Entry of the relabeled observable: `(pi . O)(i, j) = O(pi^{-1} i, pi^{-1} j)`.
pub fn conjugated_entry<S: Scalar>(
    map: &AffineIndexMap,
    obs: &impl ObservableEntries<S>,
    i: u64,
    j: u64,
) -> Complex<S> {
    obs.entry(
        map.apply_inverse(i) as usize,
        map.apply_inverse(j) as usize,
    )
}

/// The leading `2^r x 2^r` block of the relabeled observable, exposed as
/// an observable in its own right.
///
/// The declared trace is configurable: declaring 0 makes the randomized
/// estimator return the *uncorrected* value `tr(rho B) + tr(B)/2^r`, so
/// the diagonal trace sum (cost `2^r`) can be handled separately.
pub struct BlockObservable<'a, S: Scalar, O: ObservableEntries<S>> {
    parent: &'a O,
    map: &'a AffineIndexMap,
    dim: usize,
    trace: S,
    hs_bound: Option<S>,
}

impl<'a, S: Scalar, O: ObservableEntries<S>> BlockObservable<'a, S, O> {
    /// `trace` is the value reported to consumers, not recomputed; the
    /// Hilbert-Schmidt bound is inherited from the parent (a principal
    /// block never has a larger norm).
    pub fn new(parent: &'a O, map: &'a AffineIndexMap, r: usize, trace: S) -> Result<Self> {
        if r > map.bits() || parent.dim() != 1usize << map.bits() {
            return Err(Error::DimensionMismatch {
                left: parent.dim(),
                right: 1usize << map.bits(),
            });
        }
        Ok(Self {
            parent,
            map,
            dim: 1usize << r,
            trace,
            hs_bound: parent.hs_norm_sq_bound(),
        })
    }
}

impl<'a, S: Scalar, O: ObservableEntries<S>> ObservableEntries<S>
    for BlockObservable<'a, S, O>
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn entry(&self, r: usize, c: usize) -> Complex<S> {
        conjugated_entry(self.map, self.parent, r as u64, c as u64)
    }

    fn trace(&self) -> S {
        self.trace
    }

    fn hs_norm_sq_bound(&self) -> Option<S> {
        self.hs_bound
    }
}

/// Exact diagonal correction `tr(B)/2^r = (1/2^r) sum_{y < 2^r} O_{x_y x_y}`
/// with `x_y = pi^{-1}(y)`; costs `2^r` entry lookups.
pub fn l2_exact<S: Scalar>(
    map: &AffineIndexMap,
    obs: &impl ObservableEntries<S>,
    r: usize,
) -> Result<S> {
    if r > map.bits() {
        return Err(Error::DimensionMismatch {
            left: 1usize << r,
            right: 1usize << map.bits(),
        });
    }
    let mut sum = S::zero();
    for y in 0..(1u64 << r) {
        let x = map.apply_inverse(y) as usize;
        sum += obs.entry(x, x).re;
    }
    Ok(sum * S::from_f64_lossy(0.5f64.powi(r as i32)))
}

/// A-priori magnitude bound `tr(O^2) / sqrt(2^r)` on the diagonal
/// correction. By Cauchy-Schwarz `|tr(B)/2^r| <= sqrt(tr(O^2)) / sqrt(2^r)`,
/// so this dominates the correction whenever `tr(O^2) >= 1`.
pub fn diag_correction_bound(hs_norm_sq: f64, r: usize) -> f64 {
    hs_norm_sq / (r as f64 / 2.0).exp2()
}

/// How the block's diagonal trace correction enters the final estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagCorrectionMode {
    /// Skip the `2^r` diagonal sum; the estimate carries a systematic
    /// offset of at most [`diag_correction_bound`].
    Neglect,
    /// Subtract the exact correction.
    Exact,
    /// Skip the sum but direct consumers to the reported bound as an
    /// uncertainty window.
    BoundReport,
}

impl DiagCorrectionMode {
    pub fn label(&self) -> &'static str {
        match self {
            DiagCorrectionMode::Neglect => "neglect",
            DiagCorrectionMode::Exact => "exact",
            DiagCorrectionMode::BoundReport => "bound-report",
        }
    }
}

impl fmt::Display for DiagCorrectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DiagCorrectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neglect" => Ok(DiagCorrectionMode::Neglect),
            "exact" => Ok(DiagCorrectionMode::Exact),
            "bound-report" | "bound_report" => Ok(DiagCorrectionMode::BoundReport),
            other => Err(Error::InvalidParameter {
                name: "l2_mode".into(),
                message: format!("unknown mode `{other}` (expected neglect|exact|bound-report)"),
            }),
        }
    }
}

/// Where the sampled path's shot count comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotBudget {
    /// Derive shots and batches from `(epsilon, sigma)` via [`plan_shots`]
    /// with the stabilizer variance bound `4 tr(O^2)`.
    Planned,
    /// Use `shots`, `strategy`, and `batches` from the estimation config
    /// as given.
    FromConfig,
}

/// Options of [`estimate_stabilizer_expectation`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StabilizerOptions {
    pub l2_mode: DiagCorrectionMode,
    /// Blocks with `r <= r_direct` are summed exactly (`4^r` entry
    /// lookups) instead of sampled.
    pub r_direct: usize,
    pub budget: ShotBudget,
}

impl Default for StabilizerOptions {
    fn default() -> Self {
        Self {
            l2_mode: DiagCorrectionMode::Exact,
            r_direct: 10,
            budget: ShotBudget::Planned,
        }
    }
}

/// Which evaluation path produced the estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvaluationPath {
    /// Exact `4^r` block summation (zero shots).
    Direct,
    /// Randomized measurement of the reduced state.
    Sampled,
}

/// Outcome of [`estimate_stabilizer_expectation`].
///
/// `l1_estimate` is the uncorrected block value with mean
/// `tr(rho O) + tr(B)/2^r`; `l2_value` is the exact correction when it was
/// computed; `final_estimate` is `l1 - l2` in exact mode and `l1`
/// otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerEstimateReport {
    pub final_estimate: f64,
    pub l1_estimate: f64,
    pub l2_value: Option<f64>,
    pub l2_bound: f64,
    pub r_used: usize,
    pub n: usize,
    pub shots: u64,
    pub std_error: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub l2_mode: DiagCorrectionMode,
    pub path: EvaluationPath,
    /// Wall time of the GF(2) reduction, for complexity benchmarks.
    pub reduction_nanos: u128,
}

/// Estimates `tr(|psi><psi| O)` through the block reduction.
///
/// Path selection: `r = 0` reads the single diagonal entry; `r <= r_direct`
/// sums the block exactly; otherwise the reduced state is measured with
/// the randomized estimator. The reduced state deviates from its
/// maximally mixed state by at most `1/2^r` per snapshot, so the per-shot
/// variance is bounded by `4 tr(O^2)` -- the bound used by the planned
/// budget.
pub fn estimate_stabilizer_expectation<S: Scalar>(
    psi: &AffineStabilizerState,
    obs: &impl ObservableEntries<S>,
    cfg: &EstimationConfig,
    opts: &StabilizerOptions,
) -> Result<StabilizerEstimateReport> {
    let (n, r) = (psi.n(), psi.r());
    if n >= usize::BITS as usize || obs.dim() != 1usize << n {
        return Err(Error::DimensionMismatch {
            left: obs.dim(),
            right: 1usize
                .checked_shl(n as u32)
                .unwrap_or(usize::MAX),
        });
    }
    let hs = obs
        .hs_norm_sq_bound()
        .ok_or_else(|| {
            Error::Precondition(
                "stabilizer estimation needs an observable with a known tr(O^2) bound".into(),
            )
        })?
        .to_f64_lossy();
    let l2_bound = diag_correction_bound(hs, r);

    if r == 0 {
        // Support is the single basis vector |t>.
        let value = obs.entry(psi.shift() as usize, psi.shift() as usize).re.to_f64_lossy();
        let (final_estimate, l2_value) = match opts.l2_mode {
            DiagCorrectionMode::Exact => (value, Some(value)),
            _ => (2.0 * value, None),
        };
        return Ok(StabilizerEstimateReport {
            final_estimate,
            l1_estimate: 2.0 * value,
            l2_value,
            l2_bound,
            r_used: 0,
            n,
            shots: 0,
            std_error: 0.0,
            epsilon: cfg.epsilon,
            sigma: cfg.sigma,
            l2_mode: opts.l2_mode,
            path: EvaluationPath::Direct,
            reduction_nanos: 0,
        });
    }

    let started = Instant::now();
    let (map, reduced) = reduce_to_block(psi)?;
    let reduction_nanos = started.elapsed().as_nanos();

    if r <= opts.r_direct {
        let amps = reduced.amplitudes::<S>()?;
        let mut acc = Complex::new(S::zero(), S::zero());
        for u in 0..(1u64 << r) {
            for v in 0..(1u64 << r) {
                acc = acc
                    + amps[u as usize].conj()
                        * conjugated_entry(&map, obs, u, v)
                        * amps[v as usize];
            }
        }
        let value = acc.re.to_f64_lossy();
        let l2 = l2_exact(&map, obs, r)?.to_f64_lossy();
        let l1 = value + l2;
        let (final_estimate, l2_value) = match opts.l2_mode {
            DiagCorrectionMode::Exact => (l1 - l2, Some(l2)),
            _ => (l1, None),
        };
        return Ok(StabilizerEstimateReport {
            final_estimate,
            l1_estimate: l1,
            l2_value,
            l2_bound,
            r_used: r,
            n,
            shots: 0,
            std_error: 0.0,
            epsilon: cfg.epsilon,
            sigma: cfg.sigma,
            l2_mode: opts.l2_mode,
            path: EvaluationPath::Direct,
            reduction_nanos,
        });
    }

    let pure = PureState::new(reduced.amplitudes::<S>()?)?;
    let ensemble = build_ensemble(1usize << r)?;
    let block = BlockObservable::new(obs, &map, r, S::zero())?;
    let (shots, strategy, batches) = match opts.budget {
        ShotBudget::FromConfig => (cfg.shots, cfg.strategy, cfg.batches),
        ShotBudget::Planned => {
            let plan = plan_shots(1, cfg.sigma, cfg.epsilon, 4.0 * hs)?;
            let shots = plan.shots.max(1) as usize;
            (
                shots,
                Strategy::MedianOfMeans,
                (plan.batches.max(1) as usize).min(shots),
            )
        }
    };
    let run_cfg = EstimationConfig {
        shots,
        strategy,
        batches,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        sigma: cfg.sigma,
        workers: cfg.workers,
        keep_log: false,
    };
    let inner = estimate_from_entries(&pure, &block, &ensemble, &run_cfg)?;
    let l1 = inner.estimate;
    let (final_estimate, l2_value) = match opts.l2_mode {
        DiagCorrectionMode::Exact => {
            let l2 = l2_exact(&map, obs, r)?.to_f64_lossy();
            (l1 - l2, Some(l2))
        }
        DiagCorrectionMode::Neglect | DiagCorrectionMode::BoundReport => (l1, None),
    };
    Ok(StabilizerEstimateReport {
        final_estimate,
        l1_estimate: l1,
        l2_value,
        l2_bound,
        r_used: r,
        n,
        shots: inner.shots_used,
        std_error: inner.std_error,
        epsilon: cfg.epsilon,
        sigma: cfg.sigma,
        l2_mode: opts.l2_mode,
        path: EvaluationPath::Sampled,
        reduction_nanos,
    })
}

/// Best snapshot overlap `max_s tr(|psi><psi| s)` and its witness, by
/// exhaustive scan; requires amplitudes (`n <=` [`MAX_AMPLITUDE_QUBITS`]).
///
/// For `r >= 1` the maximum is exactly `2/2^r`: all amplitude ratios are
/// fourth roots of unity, so some superposition snapshot on two support
/// points aligns perfectly. For `r = 0` it is 1.
pub fn max_ddb_overlap<S: Scalar>(
    psi: &AffineStabilizerState,
) -> Result<(S, SnapshotId)> {
    let pure = PureState::new(psi.amplitudes::<S>()?)?;
    let mut best_value = S::zero();
    let mut best_snapshot = SnapshotId::Comp(0);
    for s in enumerate_snapshots(1usize << psi.n())? {
        let v = snapshot_overlap_entries(&pure, &s)?;
        if v > best_value {
            best_value = v;
            best_snapshot = s;
        }
    }
    Ok((best_value, best_snapshot))
}

/// Outcome of [`overlap_bound_audit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapAudit {
    pub n: usize,
    pub r: usize,
    pub states: usize,
    pub max_observed: f64,
    /// The bound that actually holds: `2/2^r` (1 for `r = 0`).
    pub tight_bound: f64,
    /// The stricter commonly quoted level `1/2^r`, reported for contrast.
    pub stated_bound: f64,
    /// Audited states exceeding `tight_bound` (must stay 0).
    pub violations_of_tight: usize,
    /// Fraction of audited states with max overlap within `1/2^r`.
    pub fraction_within_stated: f64,
    /// Best overlap of [`uniform_phase_counterexample`] in its own
    /// dimension (equals 1).
    pub counterexample_overlap: f64,
    /// Whether that counterexample exceeds its `1/2^r` level (it does).
    pub counterexample_exceeds_stated: bool,
}

/// Draws `states` random rank-`r` states on `n` qubits and audits their
/// best snapshot overlaps against `2/2^r` and `1/2^r`.
pub fn overlap_bound_audit(
    n: usize,
    r: usize,
    states: usize,
    rng: &mut RandomStream,
) -> Result<OverlapAudit> {
    if states == 0 {
        return Err(Error::InvalidParameter {
            name: "states".into(),
            message: "must audit at least one state".into(),
        });
    }
    let tight = if r == 0 { 1.0 } else { 2.0 / (1u64 << r) as f64 };
    let stated = 1.0 / (1u64 << r) as f64;
    let slack = crate::tol::ALGEBRAIC;
    let mut max_observed = 0.0f64;
    let mut violations = 0usize;
    let mut within_stated = 0usize;
    for _ in 0..states {
        let psi = random_affine_stabilizer(n, r, rng)?;
        let (value, _) = max_ddb_overlap::<f64>(&psi)?;
        max_observed = max_observed.max(value);
        if value > tight + slack {
            violations += 1;
        }
        if value <= stated + slack {
            within_stated += 1;
        }
    }
    let counter = uniform_phase_counterexample();
    let (counter_overlap, _) = max_ddb_overlap::<f64>(&counter)?;
    let counter_stated = 1.0 / (1u64 << counter.r()) as f64;
    Ok(OverlapAudit {
        n,
        r,
        states,
        max_observed,
        tight_bound: tight,
        stated_bound: stated,
        violations_of_tight: violations,
        fraction_within_stated: within_stated as f64 / states as f64,
        counterexample_overlap: counter_overlap,
        counterexample_exceeds_stated: counter_overlap > counter_stated + slack,
    })
}
