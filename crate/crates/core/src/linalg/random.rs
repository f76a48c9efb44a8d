//! Deterministic random streams and random-state samplers.
//!
//! A [`RandomStream`] is addressed by `(seed, stream_id)`. Distinct stream ids
//! under the same seed yield statistically independent sequences, which is how
//! parallel workers stay deterministic: each worker owns one stream and the
//! reduction happens in worker order.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::matrix::{ComplexMatrix, DensityMatrix};
use crate::scalar::Scalar;
use crate::check_dim;

/// Seeded, stream-addressed source of randomness.
#[derive(Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw from `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Standard normal draw.
    pub fn next_std_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw from `{0, 1, ..., n-1}`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        self.rng.gen_range(0..n)
    }

    /// Uniform u64 (for bit masks).
    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }

    /// Complex Gaussian with independent standard-normal parts.
    pub fn next_complex_normal<S: Scalar>(&mut self) -> Complex<S> {
        Complex::new(
            S::from_f64_lossy(self.next_std_normal()),
            S::from_f64_lossy(self.next_std_normal()),
        )
    }
}

/// Haar-random unit vector: a normalized complex Gaussian vector.
pub fn haar_random_unit_vector<S: Scalar>(
    dim: usize,
    rng: &mut RandomStream,
) -> Result<Vec<Complex<S>>> {
    check_dim(dim)?;
    loop {
        let mut v: Vec<Complex<S>> = (0..dim).map(|_| rng.next_complex_normal()).collect();
        let norm_sq: S = v.iter().map(|z| z.norm_sqr()).sum();
        // Resample on the (measure-zero) degenerate draw.
        if norm_sq <= S::epsilon() {
            continue;
        }
        let inv = S::one() / norm_sq.sqrt();
        for z in &mut v {
            *z = *z * Complex::new(inv, S::zero());
        }
        return Ok(v);
    }
}

/// Haar-random pure state as a density matrix.
pub fn haar_random_pure<S: Scalar>(dim: usize, rng: &mut RandomStream) -> Result<DensityMatrix<S>> {
    let v = haar_random_unit_vector::<S>(dim, rng)?;
    DensityMatrix::from_pure(&v)
}

/// Hilbert-Schmidt-random mixed state: `G G^dagger / tr(G G^dagger)` with `G`
/// a square complex Ginibre matrix.
pub fn hs_random_mixed<S: Scalar>(dim: usize, rng: &mut RandomStream) -> Result<DensityMatrix<S>> {
    check_dim(dim)?;
    let g = ComplexMatrix::from_fn(dim, |_, _| rng.next_complex_normal::<S>())?;
    let gram = g.mul(&g.adjoint())?;
    let trace = gram.trace().re;
    if trace <= S::epsilon() {
        return Err(Error::PsdRetriesExhausted { attempts: 1 });
    }
    let rho = gram.scale_re(S::one() / trace);
    // Symmetrize round-off so the hermiticity gate never trips at large d.
    let sym = ComplexMatrix::from_fn(dim, |r, c| {
        (rho.get(r, c) + rho.get(c, r).conj()).scale(S::from_f64_lossy(0.5))
    })?;
    DensityMatrix::new_psd_trusted(sym)
}

/// `(1 - p) rho + p I/d`.
pub fn depolarize<S: Scalar>(rho: &DensityMatrix<S>, p: S) -> Result<DensityMatrix<S>> {
    if p < S::zero() || p > S::one() {
        return Err(Error::InvalidParameter {
            name: "p",
            message: format!("depolarizing weight must lie in [0, 1], got {p}"),
        });
    }
    let d = rho.dim();
    let mixed = S::one() / S::from_f64_lossy(d as f64);
    let m = ComplexMatrix::from_fn(d, |r, c| {
        let v = rho.entry(r, c).scale(S::one() - p);
        if r == c {
            v + Complex::new(p * mixed, S::zero())
        } else {
            v
        }
    })?;
    DensityMatrix::new_psd_trusted(m)
}

const RHO_A_MAX_ATTEMPTS: usize = 64;

/// Random state with diagonal exactly `1/d` and every off-diagonal magnitude
/// strictly below `offdiag_bound`.
///
/// Off-diagonals are drawn at scale `min(offdiag_bound, d^{-3/2}) / 3`, which
/// keeps the perturbation's spectral norm below `1/d` with high probability;
/// positivity is still verified by an eigenvalue check, retrying up to a cap.
pub fn make_rho_a<S: Scalar>(
    dim: usize,
    offdiag_bound: f64,
    rng: &mut RandomStream,
) -> Result<DensityMatrix<S>> {
    check_dim(dim)?;
    if !(0.0..=1.0).contains(&offdiag_bound) {
        return Err(Error::InvalidParameter {
            name: "offdiag_bound",
            message: format!("must lie in [0, 1], got {offdiag_bound}"),
        });
    }
    let inv_d = S::one() / S::from_f64_lossy(dim as f64);
    if offdiag_bound == 0.0 {
        return DensityMatrix::maximally_mixed(dim);
    }
    let scale = offdiag_bound.min((dim as f64).powf(-1.5)) / 3.0;

    for _ in 0..RHO_A_MAX_ATTEMPTS {
        let mut m = ComplexMatrix::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, Complex::new(inv_d, S::zero()));
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                let z = loop {
                    let re = scale * rng.next_std_normal();
                    let im = scale * rng.next_std_normal();
                    if (re * re + im * im).sqrt() < offdiag_bound {
                        break Complex::new(S::from_f64_lossy(re), S::from_f64_lossy(im));
                    }
                };
                m.set(r, c, z);
                m.set(c, r, z.conj());
            }
        }
        match DensityMatrix::new(m) {
            Ok(rho) => return Ok(rho),
            Err(Error::NotPositiveSemidefinite { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::PsdRetriesExhausted {
        attempts: RHO_A_MAX_ATTEMPTS,
    })
}

/// Largest off-diagonal magnitude.
#[cfg(test)]
pub(crate) fn max_offdiag<S: Scalar>(m: &ComplexMatrix<S>) -> S {
    let mut best = S::zero();
    for r in 0..m.dim() {
        for c in 0..m.dim() {
            if r != c {
                let v = m.get(r, c).norm();
                if v > best {
                    best = v;
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = RandomStream::new(42, 0);
        let mut b = RandomStream::new(42, 0);
        let mut c = RandomStream::new(42, 1);
        let xs: Vec<f64> = (0..8).map(|_| a.next_unit()).collect();
        let ys: Vec<f64> = (0..8).map(|_| b.next_unit()).collect();
        let zs: Vec<f64> = (0..8).map(|_| c.next_unit()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn haar_pure_states_are_pure_and_valid() {
        let mut rng = RandomStream::new(1, 0);
        for d in [2usize, 3, 5, 8] {
            let rho = haar_random_pure::<f64>(d, &mut rng).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-10);
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hs_mixed_states_are_strictly_mixed() {
        let mut rng = RandomStream::new(2, 0);
        for _ in 0..20 {
            let rho = hs_random_mixed::<f64>(4, &mut rng).unwrap();
            assert!(rho.purity() < 1.0 - 1e-6);
            assert!(rho.min_eigenvalue().unwrap() > -1e-12);
        }
    }

    #[test]
    fn depolarize_endpoints() {
        let mut rng = RandomStream::new(3, 0);
        let rho = haar_random_pure::<f64>(2, &mut rng).unwrap();
        let full = depolarize(&rho, 1.0).unwrap();
        assert!((full.entry(0, 0).re - 0.5).abs() < 1e-14);
        assert!(full.entry(0, 1).norm() < 1e-14);
        let none = depolarize(&rho, 0.0).unwrap();
        assert!((none.entry(0, 1) - rho.entry(0, 1)).norm() < 1e-14);
        assert!(depolarize(&rho, 1.5).is_err());

        // p = 0.5 on |0><0| at d = 2 gives diag(3/4, 1/4).
        let zero =
            DensityMatrix::<f64>::from_pure(&[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)])
                .unwrap();
        let half = depolarize(&zero, 0.5).unwrap();
        assert!((half.entry(0, 0).re - 0.75).abs() < 1e-14);
        assert!((half.entry(1, 1).re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn rho_a_has_exact_diagonal_and_bounded_offdiag() {
        let mut rng = RandomStream::new(4, 0);
        for d in [4usize, 16, 64] {
            let bound = 2.0 / d as f64;
            let rho = make_rho_a::<f64>(d, bound, &mut rng).unwrap();
            for i in 0..d {
                assert_eq!(rho.entry(i, i).re, 1.0 / d as f64);
                assert_eq!(rho.entry(i, i).im, 0.0);
            }
            assert!(max_offdiag(rho.matrix()) < bound);
        }
        let exact = make_rho_a::<f64>(8, 0.0, &mut rng).unwrap();
        assert!((exact.purity() - 0.125).abs() < 1e-14);
    }
}
