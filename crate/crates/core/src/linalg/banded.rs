//! Band LU with partial pivoting.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// LU factors of a band matrix, stored column-major with `2·kl + ku + 1` rows
/// per column (the extra `kl` rows hold pivoting fill).
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    /// Factor `a` after symmetric permutation by `perm` (new → old), if given.
    pub fn factor(a: &CsrMatrix, perm: Option<&[usize]>) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.n_cols(),
            });
        }
        let iperm = perm.map(|p| {
            let mut ip = vec![0; n];
            for (new, &old) in p.iter().enumerate() {
                ip[old] = new;
            }
            ip
        });
        let map = |i: usize| iperm.as_ref().map_or(i, |ip| ip[i]);
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            for (j, _) in a.row(i) {
                let (r, c) = (map(i), map(j));
                if r > c {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ab: Vec::new(),
            ipiv: vec![0; n],
        };
        let ld = lu.ld();
        let kv = kl + ku;
        lu.ab = vec![0.0; ld * n];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (r, c) = (map(i), map(j));
                lu.ab[c * ld + kv + r - c] += v;
            }
        }
        lu.factor_in_place()?;
        Ok(lu)
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let (n, kl, ld) = (self.n, self.kl, self.ld());
        let kv = self.kl + self.ku;
        let scale = self.ab.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * 1e-3;
        let ab = &mut self.ab;
        let at = |r: usize, c: usize| c * ld + kv + r - c;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = ab[at(j, j)].abs();
            for i in 1..=km {
                let v = ab[at(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            self.ipiv[j] = j + jp;
            if !(best > tiny) {
                return Err(Error::Singular { index: j });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(at(j, c), at(j + jp, c));
                }
            }
            let piv = ab[at(j, j)];
            for i in 1..=km {
                ab[at(j + i, j)] /= piv;
            }
            for c in j + 1..=ju {
                let t = ab[at(j, c)];
                if t != 0.0 {
                    for i in 1..=km {
                        let l = ab[at(j + i, j)];
                        ab[at(j + i, c)] -= l * t;
                    }
                }
            }
        }
        Ok(())
    }

    /// Solve in the permuted numbering.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ld) = (self.n, self.kl, self.ld());
        let kv = self.kl + self.ku;
        let at = |r: usize, c: usize| c * ld + kv + r - c;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            for i in 1..=km {
                b[j + i] -= self.ab[at(j + i, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[at(j, j)];
            let bj = b[j];
            for i in 1..=kv.min(j) {
                b[j - i] -= self.ab[at(j - i, j)] * bj;
            }
        }
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_needing_pivots() {
        // leading zero forces a row swap
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 1, 1.0),
                (1, 0, 2.0),
                (1, 1, 1.0),
                (1, 2, 1.0),
                (2, 1, 3.0),
                (2, 2, 4.0),
            ],
        )
        .unwrap();
        let lu = BandedLu::factor(&a, None).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b = a.mul_vec(&x);
        lu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn detects_zero_row() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        assert!(matches!(
            BandedLu::factor(&a, None),
            Err(Error::Singular { .. })
        ));
    }
}
