//! Binary linear algebra on bit-packed vectors.
//!
//! Vectors over GF(2) are `u64` masks (bit `i` = coordinate `i`); matrices
//! store one mask per row, so a matrix-vector product is one AND plus a
//! parity per row. Capacity is [`crate::MAX_STRUCTURAL_QUBITS`] columns.

use crate::error::{Error, Result};

/// Dense binary matrix, row-major bitmasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if cols > crate::MAX_STRUCTURAL_QUBITS || rows > crate::MAX_STRUCTURAL_QUBITS {
            return Err(Error::QubitCapExceeded {
                n: rows.max(cols),
                cap: crate::MAX_STRUCTURAL_QUBITS,
            });
        }
        Ok(Self {
            rows,
            cols,
            data: vec![0; rows],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::new(n, n)?;
        for i in 0..n {
            m.data[i] = 1 << i;
        }
        Ok(m)
    }

    pub fn from_rows(rows: Vec<u64>, cols: usize) -> Result<Self> {
        let mut m = Self::new(rows.len(), cols)?;
        let mask = width_mask(cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r & !mask != 0 {
                return Err(Error::Malformed(format!(
                    "row {i} has bits beyond column {cols}"
                )));
            }
            m.data[i] = r;
        }
        Ok(m)
    }

    /// Builds an `n x k` matrix from `k` column masks of `n` bits each.
    pub fn from_columns(columns: &[u64], n: usize) -> Result<Self> {
        let mut m = Self::new(n, columns.len())?;
        for (j, &col) in columns.iter().enumerate() {
            if col & !width_mask(n) != 0 {
                return Err(Error::Malformed(format!(
                    "column {j} has bits beyond row {n}"
                )));
            }
            for i in 0..n {
                if (col >> i) & 1 == 1 {
                    m.data[i] |= 1 << j;
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r] >> c) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        if v {
            self.data[r] |= 1 << c;
        } else {
            self.data[r] &= !(1 << c);
        }
    }

    pub fn row(&self, r: usize) -> u64 {
        self.data[r]
    }

    pub fn column(&self, c: usize) -> u64 {
        let mut out = 0;
        for i in 0..self.rows {
            out |= ((self.data[i] >> c) & 1) << i;
        }
        out
    }

    /// `y = M x` with `y_i = parity(row_i & x)`.
    pub fn mul_vec(&self, x: u64) -> u64 {
        let mut y = 0u64;
        for i in 0..self.rows {
            y |= (((self.data[i] & x).count_ones() as u64) & 1) << i;
        }
        y
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                left: self.cols,
                right: other.rows,
            });
        }
        let mut out = BitMatrix::new(self.rows, other.cols)?;
        for i in 0..self.rows {
            let mut acc = 0u64;
            let mut row = self.data[i];
            while row != 0 {
                let k = row.trailing_zeros() as usize;
                acc ^= other.data[k];
                row &= row - 1;
            }
            out.data[i] = acc;
        }
        Ok(out)
    }

    /// Rank by row elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let Some(p) = (rank..rows.len()).find(|&i| (rows[i] >> c) & 1 == 1) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && (*row >> c) & 1 == 1 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse by Gauss-Jordan elimination; requires a square full-rank
    /// matrix.
    pub fn inverted(&self) -> Result<BitMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                left: self.rows,
                right: self.cols,
            });
        }
        let n = self.rows;
        let mut work = self.data.clone();
        let mut inv: Vec<u64> = (0..n).map(|i| 1u64 << i).collect();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| (work[i] >> c) & 1 == 1) else {
                return Err(Error::RankDeficient {
                    rank: self.rank(),
                    expected: n,
                });
            };
            work.swap(c, p);
            inv.swap(c, p);
            let (wp, ip) = (work[c], inv[c]);
            for i in 0..n {
                if i != c && (work[i] >> c) & 1 == 1 {
                    work[i] ^= wp;
                    inv[i] ^= ip;
                }
            }
        }
        BitMatrix::from_rows(inv, n)
    }
}

fn width_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Given `k` linearly independent `n`-bit column vectors, returns standard
/// basis vectors `e_i` completing them to a basis of the full space.
///
/// The returned indices are exactly the non-pivot coordinates of the input's
/// column space, so `[columns | completion]` is always invertible.
pub fn complete_to_basis(columns: &[u64], n: usize) -> Result<Vec<u64>> {
    if columns.len() > n {
        return Err(Error::RankDeficient {
            rank: n,
            expected: columns.len(),
        });
    }
    // Reduce the spanning vectors so every pivot coordinate appears in
    // exactly one of them.
    let mut reduced: Vec<u64> = Vec::with_capacity(columns.len());
    let mut pivots = 0u64;
    for &col in columns {
        let mut v = col;
        for &w in &reduced {
            let p = w.trailing_zeros();
            if (v >> p) & 1 == 1 {
                v ^= w;
            }
        }
        if v == 0 {
            return Err(Error::RankDeficient {
                rank: reduced.len(),
                expected: columns.len(),
            });
        }
        let p = v.trailing_zeros();
        for w in reduced.iter_mut() {
            if (*w >> p) & 1 == 1 {
                *w ^= v;
            }
        }
        pivots |= 1 << p;
        reduced.push(v);
    }
    Ok((0..n as u32)
        .filter(|&i| (pivots >> i) & 1 == 0)
        .map(|i| 1u64 << i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RandomStream;

    fn random_matrix(n: usize, rng: &mut RandomStream) -> BitMatrix {
        let rows: Vec<u64> = (0..n).map(|_| rng.next_u64() & width_mask(n)).collect();
        BitMatrix::from_rows(rows, n).unwrap()
    }

    #[test]
    fn identity_is_its_own_inverse() {
        let id = BitMatrix::identity(7).unwrap();
        assert_eq!(id.inverted().unwrap(), id);
        assert_eq!(id.rank(), 7);
        assert_eq!(id.mul_vec(0b1011001), 0b1011001);
    }

    #[test]
    fn inverse_round_trips_on_random_invertible_matrices() {
        let mut rng = RandomStream::new(61, 0);
        let id = BitMatrix::identity(12).unwrap();
        let mut found = 0;
        while found < 20 {
            let m = random_matrix(12, &mut rng);
            if m.rank() < 12 {
                continue;
            }
            found += 1;
            let inv = m.inverted().unwrap();
            assert_eq!(m.mul(&inv).unwrap(), id);
            assert_eq!(inv.mul(&m).unwrap(), id);
            for _ in 0..16 {
                let x = rng.next_u64() & width_mask(12);
                assert_eq!(inv.mul_vec(m.mul_vec(x)), x);
            }
        }
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let m = BitMatrix::from_rows(vec![0b11, 0b11], 2).unwrap();
        assert_eq!(m.rank(), 1);
        assert!(matches!(
            m.inverted(),
            Err(Error::RankDeficient {
                rank: 1,
                expected: 2
            })
        ));
    }

    #[test]
    fn mul_vec_is_linear() {
        let mut rng = RandomStream::new(62, 0);
        let m = random_matrix(20, &mut rng);
        for _ in 0..50 {
            let x = rng.next_u64() & width_mask(20);
            let y = rng.next_u64() & width_mask(20);
            assert_eq!(m.mul_vec(x ^ y), m.mul_vec(x) ^ m.mul_vec(y));
        }
    }

    #[test]
    fn from_columns_transposes_correctly() {
        // Columns (1,1,0) and (0,1,1) as 3-bit masks.
        let m = BitMatrix::from_columns(&[0b011, 0b110], 3).unwrap();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 2);
        assert!(m.get(0, 0) && !m.get(0, 1));
        assert!(m.get(1, 0) && m.get(1, 1));
        assert!(!m.get(2, 0) && m.get(2, 1));
        assert_eq!(m.column(0), 0b011);
        assert_eq!(m.column(1), 0b110);
    }

    #[test]
    fn basis_completion_always_yields_an_invertible_square() {
        let mut rng = RandomStream::new(63, 0);
        for n in [1usize, 2, 5, 9, 16] {
            for r in 0..=n {
                // Draw r independent columns by rejection.
                let mut cols: Vec<u64> = Vec::new();
                while cols.len() < r {
                    let cand = rng.next_u64() & width_mask(n);
                    let mut trial = cols.clone();
                    trial.push(cand);
                    if BitMatrix::from_columns(&trial, n).unwrap().rank() == trial.len() {
                        cols = trial;
                    }
                }
                let completion = complete_to_basis(&cols, n).unwrap();
                assert_eq!(completion.len(), n - r);
                let mut all = cols.clone();
                all.extend_from_slice(&completion);
                let b = BitMatrix::from_columns(&all, n).unwrap();
                assert_eq!(b.rank(), n, "completion failed at n={n}, r={r}");
                assert!(b.inverted().is_ok());
            }
        }
    }

    #[test]
    fn dependent_columns_are_detected_during_completion() {
        assert!(complete_to_basis(&[0b01, 0b01], 2).is_err());
        assert!(complete_to_basis(&[0b11, 0b10, 0b01], 2).is_err());
    }
}
