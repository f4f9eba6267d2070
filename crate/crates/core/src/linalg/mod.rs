//! Sparse direct factorizations with Krylov refinement.

pub mod banded;
pub mod krylov;
pub mod multifrontal;
pub mod ordering;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use banded::BandedLu;
use multifrontal::{MultifrontalLu, Symbolic};

/// Factorization used by [`solve_sparse`] and [`DirectSolver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Band LU when the (possibly reordered) bandwidth is small, multifrontal otherwise.
    #[default]
    Auto,
    Banded,
    Multifrontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target relative residual `‖b − A x‖ / ‖b‖`.
    pub rtol: f64,
    /// Cap on preconditioned GMRES iterations after the direct solve.
    pub max_iter: usize,
    pub method: Method,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rtol: 1e-10,
            max_iter: 100,
            method: Method::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Numeric factors of one matrix.
#[derive(Debug, Clone)]
pub enum Factors {
    Banded {
        lu: BandedLu,
        perm: Option<Vec<usize>>,
    },
    Multifrontal(MultifrontalLu),
}

impl Factors {
    /// Apply `A⁻¹` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            Factors::Banded { lu, perm: None } => lu.solve_in_place(b),
            Factors::Banded { lu, perm: Some(p) } => {
                let mut y: Vec<f64> = p.iter().map(|&o| b[o]).collect();
                lu.solve_in_place(&mut y);
                for (new, &old) in p.iter().enumerate() {
                    b[old] = y[new];
                }
            }
            Factors::Multifrontal(lu) => lu.solve_in_place(b),
        }
    }
}

/// Factorization driver that keeps the ordering and symbolic analysis for
/// repeated solves with one sparsity pattern.
#[derive(Debug, Clone, Default)]
pub struct DirectSolver {
    method: Method,
    ordering: Option<Vec<usize>>,
    resolved: Option<Resolved>,
}

#[derive(Debug, Clone)]
enum Resolved {
    Banded(Option<Vec<usize>>),
    Multifrontal {
        symbolic: Arc<Symbolic>,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
    },
}

const BAND_WORK_LIMIT: f64 = 2e8;

fn bandwidth(a: &CsrMatrix, iperm: Option<&[usize]>) -> usize {
    let map = |i: usize| iperm.map_or(i, |p| p[i]);
    let mut bw = 0;
    for i in 0..a.n_rows() {
        for (j, _) in a.row(i) {
            bw = bw.max(map(i).abs_diff(map(j)));
        }
    }
    bw
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut ip = vec![0; p.len()];
    for (new, &old) in p.iter().enumerate() {
        ip[old] = new;
    }
    ip
}

fn matrix_graph(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); a.n_rows()];
    for i in 0..a.n_rows() {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

impl DirectSolver {
    pub fn new(method: Method) -> Self {
        DirectSolver {
            method,
            ordering: None,
            resolved: None,
        }
    }

    /// Fill-reducing ordering (new → old) to use instead of the built-in choice.
    pub fn with_ordering(mut self, order: Vec<usize>) -> Self {
        self.ordering = Some(order);
        self
    }

    /// Drop cached analysis (call when the sparsity pattern changes size).
    pub fn reset(&mut self) {
        self.resolved = None;
    }

    fn resolve(&mut self, a: &CsrMatrix) -> Result<()> {
        let n = a.n_rows();
        if let Some(ord) = &self.ordering {
            if ord.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: ord.len(),
                });
            }
        }
        let fits_band = |bw: usize| (2 * bw + 1) as f64 * bw as f64 * n as f64 <= BAND_WORK_LIMIT;
        let resolved = match self.method {
            Method::Banded => Resolved::Banded(self.ordering.clone()),
            Method::Multifrontal => self.multifrontal(a)?,
            Method::Auto => {
                if let Some(ord) = &self.ordering {
                    if fits_band(bandwidth(a, Some(&inverse(ord)))) {
                        Resolved::Banded(Some(ord.clone()))
                    } else {
                        self.multifrontal(a)?
                    }
                } else if fits_band(bandwidth(a, None)) {
                    Resolved::Banded(None)
                } else {
                    let rcm = ordering::reverse_cuthill_mckee(&matrix_graph(a));
                    if fits_band(bandwidth(a, Some(&inverse(&rcm)))) {
                        Resolved::Banded(Some(rcm))
                    } else {
                        self.multifrontal(a)?
                    }
                }
            }
        };
        self.resolved = Some(resolved);
        Ok(())
    }

    fn multifrontal(&self, a: &CsrMatrix) -> Result<Resolved> {
        let order = match &self.ordering {
            Some(o) => o.clone(),
            None => ordering::reverse_cuthill_mckee(&matrix_graph(a)),
        };
        let symbolic = Arc::new(Symbolic::analyze(a, &order)?);
        log::debug!(
            "multifrontal analysis: n = {}, factor entries = {}",
            symbolic.n(),
            symbolic.factor_nnz()
        );
        Ok(Resolved::Multifrontal {
            symbolic,
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
        })
    }

    pub fn factor(&mut self, a: &CsrMatrix) -> Result<Factors> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        let stale = match &self.resolved {
            None => true,
            Some(Resolved::Banded(p)) => p.as_ref().is_some_and(|p| p.len() != a.n_rows()),
            Some(Resolved::Multifrontal {
                row_ptr, col_idx, ..
            }) => row_ptr.as_slice() != a.row_ptr() || col_idx.as_slice() != a.col_idx(),
        };
        if stale {
            self.resolve(a)?;
        }
        match self.resolved.as_ref().expect("resolved above") {
            Resolved::Banded(perm) => Ok(Factors::Banded {
                lu: BandedLu::factor(a, perm.as_deref())
                    .map_err(|e| unpermute(e, perm.as_deref()))?,
                perm: perm.clone(),
            }),
            Resolved::Multifrontal { symbolic, .. } => Ok(Factors::Multifrontal(
                MultifrontalLu::factor(symbolic.clone(), a)?,
            )),
        }
    }

    /// Factor `a` and solve `a x = b` to the requested residual.
    pub fn solve(
        &mut self,
        a: &CsrMatrix,
        b: &[f64],
        opts: &SolveOptions,
    ) -> Result<(Vec<f64>, SolveStats)> {
        if b.len() != a.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: a.n_rows(),
                got: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        let f = self.factor(a)?;
        refine(a, &f, b, opts)
    }
}

fn unpermute(e: Error, perm: Option<&[usize]>) -> Error {
    match (e, perm) {
        (Error::Singular { index }, Some(p)) => Error::Singular { index: p[index] },
        (e, _) => e,
    }
}

/// Direct solve followed by LU-preconditioned GMRES until the residual target is met.
pub fn refine(
    a: &CsrMatrix,
    f: &Factors,
    b: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let mut x = b.to_vec();
    f.solve_in_place(&mut x);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    let out = krylov::gmres(
        a,
        b,
        &mut x,
        &|v| f.solve_in_place(v),
        opts.rtol,
        20,
        opts.max_iter,
    );
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.relative_residual,
        });
    }
    Ok((
        x,
        SolveStats {
            iterations: out.iterations,
            relative_residual: out.relative_residual,
        },
    ))
}

/// One-shot sparse solve of `a x = rhs`.
pub fn solve_sparse(a: &CsrMatrix, rhs: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    DirectSolver::new(opts.method)
        .solve(a, rhs, opts)
        .map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        for m in [Method::Auto, Method::Banded, Method::Multifrontal] {
            let opts = SolveOptions {
                method: m,
                ..Default::default()
            };
            assert_eq!(solve_sparse(&a, &b, &opts).unwrap(), b);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a =
            CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (2, 2, 1.0), (0, 1, 2.0)]).unwrap();
        for m in [Method::Banded, Method::Multifrontal] {
            let opts = SolveOptions {
                method: m,
                ..Default::default()
            };
            assert!(matches!(
                solve_sparse(&a, &[1.0; 3], &opts),
                Err(Error::Singular { .. })
            ));
        }
    }

    #[test]
    fn reuses_symbolic_analysis() {
        let mut t = Vec::new();
        for i in 0..40 {
            t.push((i, i, 3.0));
            t.push((i, (i + 7) % 40, -1.0));
            t.push(((i + 7) % 40, i, 0.5));
        }
        let a = CsrMatrix::from_triplets(40, 40, t).unwrap();
        let mut s = DirectSolver::new(Method::Multifrontal);
        let b = vec![1.0; 40];
        let (x1, _) = s.solve(&a, &b, &SolveOptions::default()).unwrap();
        let mut a2 = a.clone();
        a2.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let (x2, _) = s.solve(&a2, &b, &SolveOptions::default()).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - 2.0 * v).abs() < 1e-12);
        }
    }
}
