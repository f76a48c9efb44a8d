//! JSON interchange formats for matrices and stabilizer states.
//!
//! Hermitian matrices travel as their upper triangle:
//!
//! ```json
//! { "dim": 2, "entries": [[0, 0, 0.5, 0.0], [0, 1, 0.25, -0.1], [1, 1, 0.5, 0.0]] }
//! ```
//!
//! Each entry is `[row, col, re, im]` with `row <= col`; the lower triangle
//! is completed by conjugation. Missing entries are zero. Exact, textual,
//! and diff-friendly.
//!
//! Stabilizer states travel as bitstring rows (see [`StabilizerStateFile`]);
//! bit `j` of a bitstring is its `j`-th character from the left, so `"10"`
//! sets bit 0 and clears bit 1.

use std::path::Path;

use num_complex::Complex;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianObservable};
use crate::scalar::Scalar;

/// Upper-triangle JSON form of a Hermitian matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl MatrixFile {
    /// Builds the dense Hermitian matrix, rejecting malformed entry lists.
    pub fn to_matrix<S: Scalar>(&self) -> Result<ComplexMatrix<S>> {
        let d = self.dim;
        crate::check_dim(d)?;
        let mut m = ComplexMatrix::<S>::zeros(d)?;
        let mut seen = vec![false; d * d];
        for &(r, c, re, im) in &self.entries {
            if r >= d || c >= d {
                return Err(Error::Malformed(format!(
                    "entry ({r},{c}) out of range for dim {d}"
                )));
            }
            if r > c {
                return Err(Error::Malformed(format!(
                    "entry ({r},{c}) lies below the diagonal; supply the upper triangle"
                )));
            }
            if seen[r * d + c] {
                return Err(Error::Malformed(format!("duplicate entry ({r},{c})")));
            }
            seen[r * d + c] = true;
            if r == c && im.abs() > 1e-12 {
                return Err(Error::Malformed(format!(
                    "diagonal entry ({r},{r}) has imaginary part {im}"
                )));
            }
            let v = Complex::new(S::from_f64_lossy(re), S::from_f64_lossy(im));
            m.set(r, c, v);
            if r != c {
                m.set(c, r, v.conj());
            }
        }
        Ok(m)
    }

    pub fn to_observable<S: Scalar>(&self) -> Result<HermitianObservable<S>> {
        HermitianObservable::new(self.to_matrix()?)
    }

    pub fn to_density<S: Scalar>(&self) -> Result<DensityMatrix<S>> {
        DensityMatrix::new(self.to_matrix()?)
    }

    /// Captures the upper triangle of a Hermitian matrix, skipping exact
    /// zeros.
    pub fn from_matrix<S: Scalar>(m: &ComplexMatrix<S>) -> Self {
        let d = m.dim();
        let mut entries = Vec::new();
        for r in 0..d {
            for c in r..d {
                let v = m.get(r, c);
                if v.re != S::zero() || v.im != S::zero() {
                    entries.push((r, c, v.re.to_f64_lossy(), v.im.to_f64_lossy()));
                }
            }
        }
        Self { dim: d, entries }
    }
}

/// JSON string of a density matrix (upper triangle), used when reports must
/// embed the offending state.
pub fn density_to_json<S: Scalar>(rho: &DensityMatrix<S>) -> Result<String> {
    Ok(serde_json::to_string(&MatrixFile::from_matrix(
        rho.matrix(),
    ))?)
}

/// JSON form of an affine stabilizer state.
///
/// `r_rows` holds the `n` rows of the binary basis matrix as `r`-character
/// bitstrings; `t` is an `n`-character bitstring; `lin` lists the `r`
/// linear phase coefficients over Z4; `quad_rows` holds the strictly
/// upper-triangular binary quadratic form as `r` rows of `r`-character
/// bitstrings; `global_phase` is one of `"1"`, `"i"`, `"-1"`, `"-i"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerStateFile {
    pub n: usize,
    pub r: usize,
    pub r_rows: Vec<String>,
    pub t: String,
    pub lin: Vec<u8>,
    pub quad_rows: Vec<String>,
    pub global_phase: String,
}

/// Parses an LSB-first bitstring ("10" -> bit 0 set) of an expected width.
pub(crate) fn parse_bits(s: &str, width: usize, what: &str) -> Result<u64> {
    if s.len() != width {
        return Err(Error::Malformed(format!(
            "{what}: expected {width} bits, got {}",
            s.len()
        )));
    }
    let mut out = 0u64;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '1' => out |= 1 << i,
            '0' => {}
            other => {
                return Err(Error::Malformed(format!(
                    "{what}: invalid character {other:?}"
                )))
            }
        }
    }
    Ok(out)
}

/// Renders `width` bits of a mask, LSB first.
pub(crate) fn render_bits(mask: u64, width: usize) -> String {
    (0..width)
        .map(|i| if (mask >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub(crate) fn parse_phase(s: &str) -> Result<u8> {
    match s {
        "1" => Ok(0),
        "i" => Ok(1),
        "-1" => Ok(2),
        "-i" => Ok(3),
        other => Err(Error::Malformed(format!(
            "global_phase must be one of 1, i, -1, -i (got {other:?})"
        ))),
    }
}

pub(crate) fn render_phase(power: u8) -> &'static str {
    match power % 4 {
        0 => "1",
        1 => "i",
        2 => "-1",
        _ => "-i",
    }
}

/// Reads and deserializes a JSON file.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Serializes a value as pretty JSON and writes it to a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}
