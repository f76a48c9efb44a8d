//! The dense-dual-bases (DDB) measurement ensemble.
//!
//! For dimension `d` the snapshot set contains `2d^2 - d` rank-1 projectors:
//! the `d` computational projectors and, for every index pair `j < k`, the
//! four superposition projectors onto `(|j> +/- |k>)/sqrt(2)` and
//! `(|j> +/- i|k>)/sqrt(2)`.
//!
//! Snapshots are grouped into orthonormal bases driven by pair partitions
//! (a 1-factorization of the complete graph on `{0..d-1}`; for odd `d` each
//! partition leaves one element over and that element's computational vector
//! completes the basis). Sampling weights are exact rationals:
//!
//! - even `d`: the computational basis with weight `2/(2d)` plus two bases
//!   (real and imaginary superpositions) per partition, weight `1/(2d)` each,
//!   `2d - 1` bases in total;
//! - odd `d`: two bases per partition, weight `1/(2d)` each, `2d` in total.
//!
//! Under these weights the marginal of any snapshot at the maximally mixed
//! state is `1/d^2` (computational) or `1/(2d^2)` (superposition), which is
//! what [`draw_random_snapshot`] samples in O(1) without touching a state.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::check_dim;
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, RandomStream, StateEntries};
use crate::scalar::Scalar;

/// Identifier of one DDB snapshot projector.
///
/// Pair variants carry `(j, k)` with `j < k`:
/// - `RealPlus` / `RealMinus`: projectors onto `(|j> +/- |k>)/sqrt(2)`;
/// - `ImagPlus` / `ImagMinus`: projectors onto `(|j> +/- i|k>)/sqrt(2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SnapshotId {
    Comp(usize),
    RealPlus(usize, usize),
    RealMinus(usize, usize),
    ImagPlus(usize, usize),
    ImagMinus(usize, usize),
}

impl SnapshotId {
    /// Checks index bounds and pair canonicality (`j < k`).
    pub fn validate(&self, dim: usize) -> Result<()> {
        check_dim(dim)?;
        let ok = match *self {
            SnapshotId::Comp(t) => t < dim,
            SnapshotId::RealPlus(j, k)
            | SnapshotId::RealMinus(j, k)
            | SnapshotId::ImagPlus(j, k)
            | SnapshotId::ImagMinus(j, k) => j < k && k < dim,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSnapshot {
                detail: format!("{self:?}"),
                dim,
            })
        }
    }

    pub fn is_computational(&self) -> bool {
        matches!(self, SnapshotId::Comp(_))
    }

    /// `(first index, second index if any)`.
    pub fn indices(&self) -> (usize, Option<usize>) {
        match *self {
            SnapshotId::Comp(t) => (t, None),
            SnapshotId::RealPlus(j, k)
            | SnapshotId::RealMinus(j, k)
            | SnapshotId::ImagPlus(j, k)
            | SnapshotId::ImagMinus(j, k) => (j, Some(k)),
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            SnapshotId::Comp(_) => "comp",
            SnapshotId::RealPlus(..) => "real_plus",
            SnapshotId::RealMinus(..) => "real_minus",
            SnapshotId::ImagPlus(..) => "imag_plus",
            SnapshotId::ImagMinus(..) => "imag_minus",
        }
    }

    fn kind_index(&self) -> usize {
        match self {
            SnapshotId::Comp(_) => unreachable!("computational snapshots have no pair kind"),
            SnapshotId::RealPlus(..) => 0,
            SnapshotId::RealMinus(..) => 1,
            SnapshotId::ImagPlus(..) => 2,
            SnapshotId::ImagMinus(..) => 3,
        }
    }

    fn from_kind_index(kind: usize, j: usize, k: usize) -> Self {
        match kind {
            0 => SnapshotId::RealPlus(j, k),
            1 => SnapshotId::RealMinus(j, k),
            2 => SnapshotId::ImagPlus(j, k),
            3 => SnapshotId::ImagMinus(j, k),
            _ => unreachable!("pair kind index is taken mod 4"),
        }
    }

    /// Bijection onto `0..2d^2-d`: computational snapshots first, then the
    /// four kinds per pair in lexicographic pair order.
    pub fn canonical_index(&self, dim: usize) -> Result<usize> {
        self.validate(dim)?;
        Ok(match *self {
            SnapshotId::Comp(t) => t,
            _ => {
                let (j, k) = match self.indices() {
                    (j, Some(k)) => (j, k),
                    _ => unreachable!(),
                };
                dim + 4 * pair_rank(dim, j, k) + self.kind_index()
            }
        })
    }

    /// Inverse of [`SnapshotId::canonical_index`].
    pub fn from_canonical_index(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= snapshot_count(dim) {
            return Err(Error::InvalidSnapshot {
                detail: format!("canonical index {index}"),
                dim,
            });
        }
        if index < dim {
            return Ok(SnapshotId::Comp(index));
        }
        let q = index - dim;
        let (j, k) = pair_unrank(dim, q / 4);
        Ok(SnapshotId::from_kind_index(q % 4, j, k))
    }
}

/// `2d^2 - d`, the number of snapshots at dimension `d`.
pub fn snapshot_count(dim: usize) -> usize {
    2 * dim * dim - dim
}

/// Lexicographic rank of the pair `(j, k)`, `j < k < d`.
#[inline]
pub(crate) fn pair_rank(dim: usize, j: usize, k: usize) -> usize {
    j * dim - j * (j + 1) / 2 + (k - j - 1)
}

/// Inverse of [`pair_rank`].
#[inline]
pub(crate) fn pair_unrank(dim: usize, rank: usize) -> (usize, usize) {
    // Closed-form first index with an integer correction step, so the float
    // estimate can never leak an off-by-one.
    let df = dim as f64;
    let disc = (2.0 * df - 1.0) * (2.0 * df - 1.0) - 8.0 * rank as f64;
    let mut j = ((2.0 * df - 1.0 - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
    loop {
        let row_start = pair_rank(dim, j, j + 1);
        if rank < row_start {
            j -= 1;
            continue;
        }
        if j + 1 < dim && rank >= pair_rank(dim, j, j + 1) + (dim - j - 1) {
            j += 1;
            continue;
        }
        let k = j + 1 + (rank - row_start);
        return (j, k);
    }
}

/// All snapshots in canonical-index order.
pub fn enumerate_snapshots(dim: usize) -> Result<Vec<SnapshotId>> {
    check_dim(dim)?;
    let mut out = Vec::with_capacity(snapshot_count(dim));
    for t in 0..dim {
        out.push(SnapshotId::Comp(t));
    }
    for j in 0..dim {
        for k in (j + 1)..dim {
            out.push(SnapshotId::RealPlus(j, k));
            out.push(SnapshotId::RealMinus(j, k));
            out.push(SnapshotId::ImagPlus(j, k));
            out.push(SnapshotId::ImagMinus(j, k));
        }
    }
    Ok(out)
}

/// One round of the pair schedule: disjoint pairs covering all of `{0..d-1}`
/// except, for odd `d`, a single leftover element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPartition {
    pub pairs: Vec<(usize, usize)>,
    pub leftover: Option<usize>,
}

/// Exact rational sampling weight of one basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisWeight {
    pub num: u64,
    pub den: u64,
}

impl BasisWeight {
    pub fn as_float<S: Scalar>(&self) -> S {
        S::from_f64_lossy(self.num as f64 / self.den as f64)
    }
}

/// One orthonormal measurement basis, stored as its member snapshots.
#[derive(Clone, Debug)]
pub struct DdbBasis {
    pub members: Vec<SnapshotId>,
    pub weight: BasisWeight,
}

/// The full DDB ensemble for one dimension.
#[derive(Clone, Debug)]
pub struct DdbEnsemble {
    dim: usize,
    partitions: Vec<PairPartition>,
    bases: Vec<DdbBasis>,
}

/// Serializable summary of an ensemble (dimensions, weights, partitions).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DdbEnsembleSummary {
    pub dim: usize,
    pub num_bases: usize,
    pub weights: Vec<BasisWeight>,
    pub partitions: Vec<PairPartition>,
}

/// Builds the pair schedule for dimension `d`.
///
/// The rounds come from the modular round-robin construction, relabeled so
/// the first partition is always `{(0,1), (2,3), ...}` (with leftover `d-1`
/// when `d` is odd). Even `d` yields `d-1` partitions covering every pair
/// exactly once; odd `d` yields `d` partitions and every element sits out
/// exactly once.
pub fn build_partitions(dim: usize) -> Result<Vec<PairPartition>> {
    check_dim(dim)?;
    let rounds = if dim % 2 == 0 {
        raw_rounds_even(dim)
    } else {
        raw_rounds_odd(dim)
    };

    // Relabel so round 0 becomes consecutive pairs.
    let mut sigma = vec![0usize; dim];
    {
        let mut first: Vec<(usize, usize)> = rounds[0].pairs.clone();
        first.sort_unstable();
        for (i, &(a, b)) in first.iter().enumerate() {
            sigma[a] = 2 * i;
            sigma[b] = 2 * i + 1;
        }
        if let Some(l) = rounds[0].leftover {
            sigma[l] = dim - 1;
        }
    }

    let mut out = Vec::with_capacity(rounds.len());
    for round in &rounds {
        let mut pairs: Vec<(usize, usize)> = round
            .pairs
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (sigma[a], sigma[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        pairs.sort_unstable();
        out.push(PairPartition {
            pairs,
            leftover: round.leftover.map(|l| sigma[l]),
        });
    }
    Ok(out)
}

/// Even `d`: element `d-1` is fixed; in round `k` it pairs with the unique
/// `x` solving `2x = k (mod d-1)` and the rest pair by `i + j = k (mod d-1)`.
fn raw_rounds_even(dim: usize) -> Vec<PairPartition> {
    let m = dim - 1;
    (0..m)
        .map(|k| {
            let mut pairs = Vec::with_capacity(dim / 2);
            let x = solve_double(k, m);
            pairs.push((x.min(dim - 1), x.max(dim - 1)));
            for i in 0..m {
                let j = (k + m - i % m) % m;
                if i < j && i != x && j != x {
                    pairs.push((i, j));
                }
            }
            PairPartition {
                pairs,
                leftover: None,
            }
        })
        .collect()
}

/// Odd `d`: in round `k` the unique `x` with `2x = k (mod d)` sits out and
/// the rest pair by `i + j = k (mod d)`.
fn raw_rounds_odd(dim: usize) -> Vec<PairPartition> {
    (0..dim)
        .map(|k| {
            let x = solve_double(k, dim);
            let mut pairs = Vec::with_capacity(dim / 2);
            for i in 0..dim {
                let j = (k + dim - i % dim) % dim;
                if i < j && i != x && j != x {
                    pairs.push((i, j));
                }
            }
            PairPartition {
                pairs,
                leftover: Some(x),
            }
        })
        .collect()
}

/// Unique solution of `2x = k (mod m)` for odd modulus `m`.
fn solve_double(k: usize, m: usize) -> usize {
    debug_assert!(m % 2 == 1);
    if k % 2 == 0 {
        k / 2
    } else {
        (k + m) / 2
    }
}

/// Builds the weighted basis ensemble for dimension `d`.
pub fn build_ensemble(dim: usize) -> Result<DdbEnsemble> {
    let partitions = build_partitions(dim)?;
    let den = 2 * dim as u64;
    let mut bases = Vec::new();

    if dim % 2 == 0 {
        bases.push(DdbBasis {
            members: (0..dim).map(SnapshotId::Comp).collect(),
            weight: BasisWeight { num: 2, den },
        });
    }
    for part in &partitions {
        let mut real = Vec::with_capacity(dim);
        let mut imag = Vec::with_capacity(dim);
        for &(j, k) in &part.pairs {
            real.push(SnapshotId::RealPlus(j, k));
            real.push(SnapshotId::RealMinus(j, k));
            imag.push(SnapshotId::ImagPlus(j, k));
            imag.push(SnapshotId::ImagMinus(j, k));
        }
        if let Some(l) = part.leftover {
            real.push(SnapshotId::Comp(l));
            imag.push(SnapshotId::Comp(l));
        }
        bases.push(DdbBasis {
            members: real,
            weight: BasisWeight { num: 1, den },
        });
        bases.push(DdbBasis {
            members: imag,
            weight: BasisWeight { num: 1, den },
        });
    }

    Ok(DdbEnsemble {
        dim,
        partitions,
        bases,
    })
}

impl DdbEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn partitions(&self) -> &[PairPartition] {
        &self.partitions
    }

    pub fn bases(&self) -> &[DdbBasis] {
        &self.bases
    }

    /// `2d` for odd `d`, `2d - 1` for even `d`.
    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn summary(&self) -> DdbEnsembleSummary {
        DdbEnsembleSummary {
            dim: self.dim,
            num_bases: self.bases.len(),
            weights: self.bases.iter().map(|b| b.weight).collect(),
            partitions: self.partitions.clone(),
        }
    }

    /// Total prior weight of the bases containing `s`: `2/(2d)` for
    /// computational snapshots, `1/(2d)` for superposition snapshots.
    pub fn membership_weight(&self, s: &SnapshotId) -> Result<BasisWeight> {
        s.validate(self.dim)?;
        let den = 2 * self.dim as u64;
        Ok(match s {
            SnapshotId::Comp(_) => BasisWeight { num: 2, den },
            _ => BasisWeight { num: 1, den },
        })
    }
}

/// Amplitude vector of a snapshot's defining unit vector.
pub fn snapshot_vector<S: Scalar>(s: &SnapshotId, dim: usize) -> Result<Vec<Complex<S>>> {
    s.validate(dim)?;
    let zero = Complex::new(S::zero(), S::zero());
    let mut v = vec![zero; dim];
    let inv_sqrt2 = S::from_f64_lossy(std::f64::consts::FRAC_1_SQRT_2);
    match *s {
        SnapshotId::Comp(t) => v[t] = Complex::new(S::one(), S::zero()),
        SnapshotId::RealPlus(j, k) => {
            v[j] = Complex::new(inv_sqrt2, S::zero());
            v[k] = Complex::new(inv_sqrt2, S::zero());
        }
        SnapshotId::RealMinus(j, k) => {
            v[j] = Complex::new(inv_sqrt2, S::zero());
            v[k] = Complex::new(-inv_sqrt2, S::zero());
        }
        SnapshotId::ImagPlus(j, k) => {
            v[j] = Complex::new(inv_sqrt2, S::zero());
            v[k] = Complex::new(S::zero(), inv_sqrt2);
        }
        SnapshotId::ImagMinus(j, k) => {
            v[j] = Complex::new(inv_sqrt2, S::zero());
            v[k] = Complex::new(S::zero(), -inv_sqrt2);
        }
    }
    Ok(v)
}

/// `tr(rho s)` from at most four state entries.
///
/// Closed forms, with `a = rho_jj + rho_kk`:
/// `tr(rho P_jk^+/-) = a/2 +/- Re(rho_jk)`,
/// `tr(rho Q_jk^+) = a/2 - Im(rho_jk)`, `tr(rho Q_jk^-) = a/2 + Im(rho_jk)`.
pub fn snapshot_overlap<S: Scalar>(rho: &DensityMatrix<S>, s: &SnapshotId) -> Result<S> {
    snapshot_overlap_entries(rho, s)
}

/// [`snapshot_overlap`] over any [`StateEntries`] implementation.
pub fn snapshot_overlap_entries<S: Scalar>(
    state: &impl StateEntries<S>,
    s: &SnapshotId,
) -> Result<S> {
    s.validate(state.dim())?;
    let half = S::from_f64_lossy(0.5);
    Ok(match *s {
        SnapshotId::Comp(t) => state.entry(t, t).re,
        SnapshotId::RealPlus(j, k) => {
            let a = state.entry(j, j).re + state.entry(k, k).re;
            a * half + state.entry(j, k).re
        }
        SnapshotId::RealMinus(j, k) => {
            let a = state.entry(j, j).re + state.entry(k, k).re;
            a * half - state.entry(j, k).re
        }
        SnapshotId::ImagPlus(j, k) => {
            let a = state.entry(j, j).re + state.entry(k, k).re;
            a * half - state.entry(j, k).im
        }
        SnapshotId::ImagMinus(j, k) => {
            let a = state.entry(j, j).re + state.entry(k, k).re;
            a * half + state.entry(j, k).im
        }
    })
}

/// O(1) draw from the snapshot marginal at the maximally mixed state:
/// probability `1/d` of a uniform computational snapshot, else a uniform
/// pair and one of the four kinds.
pub fn draw_random_snapshot(dim: usize, rng: &mut RandomStream) -> Result<SnapshotId> {
    check_dim(dim)?;
    let d = dim as u64;
    if rng.next_below(d) == 0 {
        return Ok(SnapshotId::Comp(rng.next_below(d) as usize));
    }
    let pairs = (dim * (dim - 1) / 2) as u64;
    let (j, k) = pair_unrank(dim, rng.next_below(pairs) as usize);
    Ok(SnapshotId::from_kind_index(
        rng.next_below(4) as usize,
        j,
        k,
    ))
}
