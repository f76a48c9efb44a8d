//! Cyclic Jacobi eigensolver for dense Hermitian matrices.
//!
//! Each rotation zeroes one off-diagonal pair: the entry is first made real
//! by a phase, then annihilated by a real Givens rotation. Convergence is
//! quadratic once the off-diagonal mass is small; the sweep cap is generous.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::matrix::ComplexMatrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a Hermitian matrix, ascending. The input's strict lower
/// triangle is ignored; the upper triangle and real diagonal are used.
pub fn hermitian_eigenvalues<S: Scalar>(m: &ComplexMatrix<S>) -> Result<Vec<S>> {
    let d = m.dim();
    let mut a = m.clone();
    // Mirror the upper triangle so rotations act on an exactly Hermitian copy.
    for r in 0..d {
        a.set(r, r, Complex::new(a.get(r, r).re, S::zero()));
        for c in (r + 1)..d {
            let v = a.get(r, c);
            a.set(c, r, v.conj());
        }
    }

    let scale = {
        let f = a.frobenius_norm();
        if f > S::one() {
            f
        } else {
            S::one()
        }
    };
    let stop = S::epsilon() * scale * S::from_f64_lossy(d as f64);

    for _ in 0..MAX_SWEEPS {
        let mut off = S::zero();
        for r in 0..d {
            for c in (r + 1)..d {
                off = off + a.get(r, c).norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            let mut eigs: Vec<S> = (0..d).map(|i| a.get(i, i).re).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
            return Ok(eigs);
        }

        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut a, p, q);
            }
        }
    }
    Err(Error::EigenNoConvergence { sweeps: MAX_SWEEPS })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue<S: Scalar>(m: &ComplexMatrix<S>) -> Result<S> {
    Ok(hermitian_eigenvalues(m)?[0])
}

/// Applies one two-sided rotation annihilating `a[p][q]`.
///
/// The unitary is `G = D * J` restricted to coordinates `(p, q)`, where
/// `D = diag(1, e^{-i phi})` makes `a[p][q]` real and `J` is the real Jacobi
/// rotation `[[c, s], [-s, c]]` with `t = tan(theta)` the small root of
/// `t^2 + 2 tau t - 1 = 0`, `tau = (a_qq - a_pp) / (2 |a_pq|)`.
fn rotate<S: Scalar>(a: &mut ComplexMatrix<S>, p: usize, q: usize) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag == S::zero() {
        return;
    }
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;

    let phase = apq / Complex::new(mag, S::zero());
    let tau = (aqq - app) / (S::from_f64_lossy(2.0) * mag);
    let t = {
        let sign = if tau < S::zero() { -S::one() } else { S::one() };
        sign / (tau.abs() + (S::one() + tau * tau).sqrt())
    };
    let c = S::one() / (S::one() + t * t).sqrt();
    let s = t * c;

    let d = a.dim();
    let cr = Complex::new(c, S::zero());
    let sr = Complex::new(s, S::zero());
    let ph_inv = phase.conj();

    // A <- A G: new col p = c*colp - s*e^{-i phi}*colq,
    //           new col q = s*colp + c*e^{-i phi}*colq.
    for r in 0..d {
        let arp = a.get(r, p);
        let arq = a.get(r, q);
        a.set(r, p, arp * cr - arq * ph_inv * sr);
        a.set(r, q, arp * sr + arq * ph_inv * cr);
    }
    // A <- G^dagger A: new row p = c*rowp - s*e^{i phi}*rowq,
    //                  new row q = s*rowp + c*e^{i phi}*rowq.
    for r in 0..d {
        let apr = a.get(p, r);
        let aqr = a.get(q, r);
        a.set(p, r, apr * cr - aqr * phase * sr);
        a.set(q, r, apr * sr + aqr * phase * cr);
    }
    // Clean the rotated pair against round-off drift.
    a.set(p, q, Complex::new(S::zero(), S::zero()));
    a.set(q, p, Complex::new(S::zero(), S::zero()));
    a.set(p, p, Complex::new(a.get(p, p).re, S::zero()));
    a.set(q, q, Complex::new(a.get(q, q).re, S::zero()));
}
