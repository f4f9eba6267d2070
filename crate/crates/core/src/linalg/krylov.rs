//! Restarted GMRES with right preconditioning.

use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final `‖b − A x‖ / ‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Improve `x` in place until `‖b − A x‖ ≤ rtol·‖b‖` or `max_iter` inner
/// iterations have been spent. `precond` applies an approximate inverse in place.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Fn(&mut [f64]),
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let restart = restart.max(1);
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    loop {
        a.mul_vec_into(x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= rtol || total >= max_iter || !rel.is_finite() {
            return GmresOutcome {
                iterations: total,
                relative_residual: rel,
                converged: rel <= rtol,
            };
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && total < max_iter {
            let mut zk = v[k].clone();
            precond(&mut zk);
            a.mul_vec_into(&zk, &mut w);
            z.push(zk);
            let mut h = vec![0.0; k + 2];
            // modified Gram-Schmidt
            for (j, vj) in v.iter().enumerate() {
                h[j] = dot(&w, vj);
                w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= h[j] * vi);
            }
            h[k + 1] = norm(&w);
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let rho = h[k].hypot(h[k + 1]);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (h[k] / rho, h[k + 1] / rho)
            };
            let hk1 = h[k + 1];
            h[k] = rho;
            h[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(h);
            total += 1;
            k += 1;
            if hk1 == 0.0 || g[k].abs() / bnorm <= rtol * 0.5 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hk1).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (yj, zj) in y.iter().zip(&z) {
            x.iter_mut().zip(zj).for_each(|(xi, zi)| *xi += yj * zi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unpreconditioned_nonsymmetric() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.5));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&xs);
        let mut x = vec![0.0; n];
        let out = gmres(&a, &b, &mut x, &|_| {}, 1e-12, 40, 200);
        assert!(out.converged, "{out:?}");
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = CsrMatrix::identity(3);
        let mut x = vec![1.0; 3];
        let out = gmres(&a, &[0.0; 3], &mut x, &|_| {}, 1e-10, 5, 5);
        assert!(out.converged);
        assert_eq!(x, vec![0.0; 3]);
    }
}
