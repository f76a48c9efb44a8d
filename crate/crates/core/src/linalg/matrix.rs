//! Dense square complex matrices and the validated Hermitian / density types
//! built on top of them.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::eig::min_hermitian_eigenvalue;
use crate::scalar::Scalar;
use crate::{check_dim, tol};

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<S: Scalar> {
    dim: usize,
    data: Vec<Complex<S>>,
}

impl<S: Scalar> ComplexMatrix<S> {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![Complex::new(S::zero(), S::zero()); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, Complex::new(S::one(), S::zero()));
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<S>) -> Result<Self> {
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from row-major data; `data.len()` must be `dim^2`.
    pub fn from_row_major(dim: usize, data: Vec<Complex<S>>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::Malformed(format!(
                "row-major buffer has {} entries, expected {}",
                data.len(),
                dim * dim
            )));
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<S> {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<S>) {
        self.data[r * self.dim + c] = v;
    }

    #[inline]
    pub fn data(&self) -> &[Complex<S>] {
        &self.data
    }

    pub fn trace(&self) -> Complex<S> {
        let mut t = Complex::new(S::zero(), S::zero());
        for i in 0..self.dim {
            t = t + self.get(i, i);
        }
        t
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj()).expect("dim already validated")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn scale(&self, factor: Complex<S>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| *a * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: S) -> Self {
        self.scale(Complex::new(factor, S::zero()))
    }

    /// Dense matrix product, `O(d^3)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d)?;
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a.re == S::zero() && a.im == S::zero() {
                    continue;
                }
                for c in 0..d {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> S {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(S::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// Largest `|A[r][c] - conj(A[c][r])|` over all entries.
    pub fn hermiticity_deviation(&self) -> S {
        let mut dev = S::zero();
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                if d > dev {
                    dev = d;
                }
            }
        }
        dev
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

/// Frobenius inner product `tr(A^dagger B)`, `O(d^2)`.
pub fn trace_inner<S: Scalar>(a: &ComplexMatrix<S>, b: &ComplexMatrix<S>) -> Result<Complex<S>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut acc = Complex::new(S::zero(), S::zero());
    for (x, y) in a.data().iter().zip(b.data()) {
        acc = acc + x.conj() * *y;
    }
    Ok(acc)
}

/// Read access to the entries of a (conceptual) density operator.
///
/// Implemented by [`DensityMatrix`] and by [`PureState`], which derives
/// entries from an amplitude vector without materializing the outer product.
pub trait StateEntries<S: Scalar> {
    fn dim(&self) -> usize;
    fn entry(&self, r: usize, c: usize) -> Complex<S>;
}

/// Hermitian observable with the hermiticity check done once at wrap time.
///
/// Caches `tr(O)` and `tr(O^2)` so entry oracles built on top never rescan
/// the matrix.
#[derive(Clone, Debug)]
pub struct HermitianObservable<S: Scalar> {
    matrix: ComplexMatrix<S>,
    trace: S,
    hs_norm_sq: S,
}

impl<S: Scalar> HermitianObservable<S> {
    pub fn new(matrix: ComplexMatrix<S>) -> Result<Self> {
        let scale = {
            let m = matrix.max_abs();
            if m > S::one() {
                m
            } else {
                S::one()
            }
        };
        let dev = matrix.hermiticity_deviation();
        if dev > tol::scaled::<S>(tol::HERMITIAN) * scale {
            return Err(Error::NotHermitian {
                max_dev: dev.to_f64_lossy(),
            });
        }
        let trace = matrix.trace().re;
        // tr(O^2) = sum |O_jk|^2 for Hermitian O.
        let hs_norm_sq = matrix
            .data()
            .iter()
            .map(|z| z.norm_sqr())
            .fold(S::zero(), |a, b| a + b);
        Ok(Self {
            matrix,
            trace,
            hs_norm_sq,
        })
    }

    /// Builds from upper-triangle entries `(row, col, value)` with `row <= col`;
    /// the strict lower triangle is filled by conjugation.
    pub fn from_upper_entries(dim: usize, entries: &[(usize, usize, Complex<S>)]) -> Result<Self> {
        let mut m = ComplexMatrix::zeros(dim)?;
        for &(r, c, v) in entries {
            if r > c || c >= dim {
                return Err(Error::Malformed(format!(
                    "entry ({r}, {c}) is not in the upper triangle of a {dim}x{dim} matrix"
                )));
            }
            if r == c && v.im != S::zero() {
                return Err(Error::NotHermitian {
                    max_dev: v.im.to_f64_lossy().abs(),
                });
            }
            m.set(r, c, v);
            if r != c {
                m.set(c, r, v.conj());
            }
        }
        Self::new(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<S> {
        &self.matrix
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> Complex<S> {
        self.matrix.get(r, c)
    }

    /// `tr(O)` (real by hermiticity).
    #[inline]
    pub fn trace(&self) -> S {
        self.trace
    }

    /// `tr(O^2)`, the squared Hilbert-Schmidt norm.
    #[inline]
    pub fn hs_norm_sq(&self) -> S {
        self.hs_norm_sq
    }

    /// `O - tr(O)/d * I`.
    pub fn traceless_part(&self) -> Self {
        let d = self.dim();
        let shift = self.trace / S::from_f64_lossy(d as f64);
        let mut m = self.matrix.clone();
        for i in 0..d {
            let v = m.get(i, i) - Complex::new(shift, S::zero());
            m.set(i, i, v);
        }
        Self::new(m).expect("shifting the diagonal by a real constant preserves hermiticity")
    }
}

/// Validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug)]
pub struct DensityMatrix<S: Scalar> {
    matrix: ComplexMatrix<S>,
}

impl<S: Scalar> DensityMatrix<S> {
    /// Full validation including an eigenvalue positivity check.
    pub fn new(matrix: ComplexMatrix<S>) -> Result<Self> {
        let dm = Self::new_psd_trusted(matrix)?;
        let min_eig = min_hermitian_eigenvalue(&dm.matrix)?;
        if min_eig < tol::scaled::<S>(-tol::PSD_MIN_EIGENVALUE).neg() {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min_eig.to_f64_lossy(),
            });
        }
        Ok(dm)
    }

    /// Validates hermiticity and unit trace but trusts positivity; reserved
    /// for constructions that are positive semidefinite by algebra.
    pub(crate) fn new_psd_trusted(matrix: ComplexMatrix<S>) -> Result<Self> {
        let dev = matrix.hermiticity_deviation();
        if dev > tol::scaled::<S>(tol::HERMITIAN) {
            return Err(Error::NotHermitian {
                max_dev: dev.to_f64_lossy(),
            });
        }
        let trace = matrix.trace();
        let one = Complex::new(S::one(), S::zero());
        if (trace - one).norm() > tol::scaled::<S>(tol::TRACE) {
            return Err(Error::InvalidTrace {
                trace: trace.re.to_f64_lossy(),
            });
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` from a normalized amplitude vector.
    pub fn from_pure(state: &[Complex<S>]) -> Result<Self> {
        let dim = state.len();
        check_dim(dim)?;
        let norm_sq: S = state.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - S::one()).abs() > tol::scaled::<S>(tol::TRACE) {
            return Err(Error::NotNormalized {
                norm_sq: norm_sq.to_f64_lossy(),
            });
        }
        let m = ComplexMatrix::from_fn(dim, |r, c| state[r] * state[c].conj())?;
        Self::new_psd_trusted(m)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let inv = S::one() / S::from_f64_lossy(dim as f64);
        let m = ComplexMatrix::identity(dim)?.scale_re(inv);
        Self::new_psd_trusted(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<S> {
        &self.matrix
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> Complex<S> {
        self.matrix.get(r, c)
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> S {
        self.matrix
            .data()
            .iter()
            .map(|z| z.norm_sqr())
            .fold(S::zero(), |a, b| a + b)
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.dim()).map(|i| self.matrix.get(i, i).re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<S> {
        min_hermitian_eigenvalue(&self.matrix)
    }
}

impl<S: Scalar> StateEntries<S> for DensityMatrix<S> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn entry(&self, r: usize, c: usize) -> Complex<S> {
        self.matrix.get(r, c)
    }
}

/// Pure state presented through its amplitude vector; density entries are
/// `a_r * conj(a_c)` computed on demand.
#[derive(Clone, Debug)]
pub struct PureState<S: Scalar> {
    amplitudes: Vec<Complex<S>>,
}

impl<S: Scalar> PureState<S> {
    pub fn new(amplitudes: Vec<Complex<S>>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm_sq: S = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - S::one()).abs() > tol::scaled::<S>(tol::TRACE) {
            return Err(Error::NotNormalized {
                norm_sq: norm_sq.to_f64_lossy(),
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex<S>] {
        &self.amplitudes
    }

    pub fn to_density(&self) -> Result<DensityMatrix<S>> {
        DensityMatrix::from_pure(&self.amplitudes)
    }
}

impl<S: Scalar> StateEntries<S> for PureState<S> {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn entry(&self, r: usize, c: usize) -> Complex<S> {
        self.amplitudes[r] * self.amplitudes[c].conj()
    }
}
