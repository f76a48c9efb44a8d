//! The DDB measurement channel, its inverse, and single-shot estimates.
//!
//! Averaging the projective outcome over the weighted basis ensemble defines
//! the linear map
//!
//! ```text
//! M(X) = (1/2d) [ X + tr(X) I + (d - 1) diag(X) ]   (diag keeps X_kk only)
//! ```
//!
//! whose inverse is again local in the matrix entries:
//!
//! ```text
//! M^-1(X) = 2d X - 2(d - 1) diag(X) - (tr(X)/d) I.
//! ```
//!
//! Applying `M^-1` to a snapshot projector gives a matrix supported on at
//! most two rows/columns, so the single-shot estimate `tr(M^-1(P_s) O)`
//! needs only a constant number of observable entries: 3 arithmetic
//! operations for a computational snapshot, 5 for a superposition snapshot,
//! independent of dimension.

use num_complex::Complex;

use crate::check_dim;
use crate::ensemble::SnapshotId;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianObservable};
use crate::scalar::Scalar;

/// Applies the measurement channel `M` to an arbitrary square matrix.
pub fn channel_apply<S: Scalar>(x: &ComplexMatrix<S>) -> Result<ComplexMatrix<S>> {
    let d = x.dim();
    check_dim(d)?;
    let tr = x.trace();
    let df = S::from_f64_lossy(d as f64);
    let inv2d = (df + df).recip();
    let dm1 = df - S::one();
    ComplexMatrix::from_fn(d, |r, c| {
        let mut v = x.get(r, c);
        if r == c {
            v = v + tr + x.get(r, r).scale(dm1);
        }
        v.scale(inv2d)
    })
}

/// Applies the inverse channel `M^-1` to an arbitrary square matrix.
pub fn inverse_channel_apply<S: Scalar>(x: &ComplexMatrix<S>) -> Result<ComplexMatrix<S>> {
    let d = x.dim();
    check_dim(d)?;
    let tr = x.trace();
    let df = S::from_f64_lossy(d as f64);
    let two_d = df + df;
    let two_dm1 = (df - S::one()) + (df - S::one());
    let tr_over_d = tr.scale(df.recip());
    ComplexMatrix::from_fn(d, |r, c| {
        let mut v = x.get(r, c).scale(two_d);
        if r == c {
            v = v - x.get(r, r).scale(two_dm1) - tr_over_d;
        }
        v
    })
}

/// Dense `M^-1(P_s)` from its closed form.
///
/// With `m < n` and cross terms scaled by `d`:
/// - `Comp(t)`: `2 P_t - I/d`;
/// - `RealPlus`: `P_m + P_n + d(|m><n| + |n><m|) - I/d` (minus flips the
///   cross sign);
/// - `ImagPlus`: `P_m + P_n + d(i|n><m| - i|m><n|) - I/d` (minus flips the
///   cross sign).
pub fn inverse_snapshot_dense<S: Scalar>(
    s: &SnapshotId,
    dim: usize,
) -> Result<ComplexMatrix<S>> {
    s.validate(dim)?;
    let df = S::from_f64_lossy(dim as f64);
    let inv_d = df.recip();
    let mut out = ComplexMatrix::from_fn(dim, |r, c| {
        if r == c {
            Complex::new(-inv_d, S::zero())
        } else {
            Complex::new(S::zero(), S::zero())
        }
    })?;
    let bump = |m: &mut ComplexMatrix<S>, r: usize, c: usize, v: Complex<S>| {
        let x = m.get(r, c) + v;
        m.set(r, c, x);
    };
    let one = Complex::new(S::one(), S::zero());
    match *s {
        SnapshotId::Comp(t) => bump(&mut out, t, t, one + one),
        SnapshotId::RealPlus(m, n) | SnapshotId::RealMinus(m, n) => {
            let sign = if matches!(s, SnapshotId::RealPlus(..)) {
                S::one()
            } else {
                -S::one()
            };
            bump(&mut out, m, m, one);
            bump(&mut out, n, n, one);
            bump(&mut out, m, n, Complex::new(sign * df, S::zero()));
            bump(&mut out, n, m, Complex::new(sign * df, S::zero()));
        }
        SnapshotId::ImagPlus(m, n) | SnapshotId::ImagMinus(m, n) => {
            let sign = if matches!(s, SnapshotId::ImagPlus(..)) {
                S::one()
            } else {
                -S::one()
            };
            bump(&mut out, m, n, Complex::new(S::zero(), -sign * df));
            bump(&mut out, n, m, Complex::new(S::zero(), sign * df));
            bump(&mut out, m, m, one);
            bump(&mut out, n, n, one);
        }
    }
    Ok(out)
}

/// Read access to observable entries, decoupled from dense storage.
///
/// Estimation touches at most two entries per shot, so observables too large
/// (or too structured) to materialize can implement this directly.
pub trait ObservableEntries<S: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// `O_rc`. Implementations must be Hermitian: `entry(c, r) = conj(entry(r, c))`.
    fn entry(&self, r: usize, c: usize) -> Complex<S>;
    /// `tr(O)`, exact.
    fn trace(&self) -> S;
    /// An upper bound on `tr(O^2)` when one is available (used by shot
    /// planners and variance bounds); `None` when unknown.
    fn hs_norm_sq_bound(&self) -> Option<S>;
}

impl<S: Scalar> ObservableEntries<S> for HermitianObservable<S> {
    fn dim(&self) -> usize {
        self.matrix().dim()
    }

    fn entry(&self, r: usize, c: usize) -> Complex<S> {
        self.matrix().get(r, c)
    }

    fn trace(&self) -> S {
        HermitianObservable::trace(self)
    }

    fn hs_norm_sq_bound(&self) -> Option<S> {
        Some(self.hs_norm_sq())
    }
}

/// Observable defined by an entry formula instead of a stored matrix.
pub struct FnObservable<S: Scalar, F>
where
    F: Fn(usize, usize) -> Complex<S> + Sync,
{
    dim: usize,
    trace: S,
    hs_norm_sq_bound: Option<S>,
    entry_fn: F,
}

impl<S: Scalar, F> FnObservable<S, F>
where
    F: Fn(usize, usize) -> Complex<S> + Sync,
{
    /// `trace` must equal the exact trace of the formula; the formula must
    /// be Hermitian. Neither is checked (the point is not to enumerate it).
    pub fn new(dim: usize, trace: S, hs_norm_sq_bound: Option<S>, entry_fn: F) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            trace,
            hs_norm_sq_bound,
            entry_fn,
        })
    }
}

impl<S: Scalar, F> ObservableEntries<S> for FnObservable<S, F>
where
    F: Fn(usize, usize) -> Complex<S> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn entry(&self, r: usize, c: usize) -> Complex<S> {
        (self.entry_fn)(r, c)
    }

    fn trace(&self) -> S {
        self.trace
    }

    fn hs_norm_sq_bound(&self) -> Option<S> {
        self.hs_norm_sq_bound
    }
}

/// One shot's unbiased contribution `tr(M^-1(P_s) O)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleShotEstimate<S: Scalar> {
    pub value: S,
    pub snapshot: SnapshotId,
    /// Arithmetic operations spent, excluding the cached `tr(O)/d`.
    pub ops_count: u8,
}

/// Evaluates `tr(M^-1(P_s) O)` in constant time.
///
/// Closed forms (diagonal entries of `O` are real by Hermiticity):
/// - `Comp(t)`: `2 O_tt - tr(O)/d` (3 ops);
/// - `RealPlus/Minus(m, n)`: `O_mm + O_nn +/- 2d Re(O_mn) - tr(O)/d` (5 ops);
/// - `ImagPlus/Minus(m, n)`: `O_mm + O_nn -/+ 2d Im(O_mn) - tr(O)/d` (5 ops).
pub fn single_shot_estimate<S: Scalar>(
    obs: &impl ObservableEntries<S>,
    s: &SnapshotId,
) -> Result<SingleShotEstimate<S>> {
    let d = obs.dim();
    s.validate(d)?;
    let df = S::from_f64_lossy(d as f64);
    let tr_over_d = obs.trace() * df.recip();
    let two = S::one() + S::one();
    let (value, ops_count) = match *s {
        SnapshotId::Comp(t) => (two * obs.entry(t, t).re - tr_over_d, 3),
        SnapshotId::RealPlus(m, n) => {
            let diag = obs.entry(m, m).re + obs.entry(n, n).re;
            (diag + two * df * obs.entry(m, n).re - tr_over_d, 5)
        }
        SnapshotId::RealMinus(m, n) => {
            let diag = obs.entry(m, m).re + obs.entry(n, n).re;
            (diag - two * df * obs.entry(m, n).re - tr_over_d, 5)
        }
        SnapshotId::ImagPlus(m, n) => {
            let diag = obs.entry(m, m).re + obs.entry(n, n).re;
            (diag - two * df * obs.entry(m, n).im - tr_over_d, 5)
        }
        SnapshotId::ImagMinus(m, n) => {
            let diag = obs.entry(m, m).re + obs.entry(n, n).re;
            (diag + two * df * obs.entry(m, n).im - tr_over_d, 5)
        }
    };
    Ok(SingleShotEstimate {
        value,
        snapshot: *s,
        ops_count,
    })
}

/// `tr(M^-1(X) Y)` without forming `M^-1(X)`, using that `M^-1` is
/// self-adjoint for the trace inner product:
/// `2d tr(XY) - 2(d-1) sum_k X_kk Y_kk - tr(X) tr(Y) / d`.
pub fn inverse_channel_pairing<S: Scalar>(
    x: &ComplexMatrix<S>,
    y: &ComplexMatrix<S>,
) -> Result<Complex<S>> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let d = x.dim();
    check_dim(d)?;
    let df = S::from_f64_lossy(d as f64);
    let txy = crate::linalg::trace_inner(&x.adjoint(), y)?;
    let mut diag = Complex::new(S::zero(), S::zero());
    for k in 0..d {
        diag = diag + x.get(k, k) * y.get(k, k);
    }
    let two_d = df + df;
    let two_dm1 = (df - S::one()) + (df - S::one());
    Ok(txy.scale(two_d) - diag.scale(two_dm1) - (x.trace() * y.trace()).scale(df.recip()))
}
