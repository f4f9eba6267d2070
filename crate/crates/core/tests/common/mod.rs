//! Dense reference implementation of one scheme step, written from the weak
//! form alone.

#![allow(dead_code)]

use std::sync::Arc;

use dewetting::film::{Stepper, WeakForm};
use dewetting::linalg::Method;
use dewetting::mesh::{IntervalMesh, P1Mesh, TriMesh};
use dewetting::WettingParams;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct Law {
    pub sigma: f64,
    pub eps: f64,
    pub h_bar: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Law {
    pub fn new(sigma: f64, eps: f64) -> Self {
        Law::with_h_bar(sigma, eps, eps)
    }

    pub fn with_h_bar(sigma: f64, eps: f64, hb: f64) -> Self {
        let mut l = Law {
            sigma,
            eps,
            h_bar: hb,
            c1: 0.0,
            c2: 0.0,
        };
        // c1·hb + c2·hb² = γ'(hb), c1 + 2·c2·hb = γ''(hb)
        let a = DMatrix::from_row_slice(2, 2, &[hb, hb * hb, 1.0, 2.0 * hb]);
        let b = DVector::from_vec(vec![l.d1(hb), l.d2(hb)]);
        let c = a.lu().solve(&b).unwrap();
        l.c1 = c[0];
        l.c2 = c[1];
        l
    }

    pub fn g(&self, h: f64) -> f64 {
        1.0 + (1.0 - self.sigma) * ((-h / self.eps).exp() - 2.0 * (-h / (2.0 * self.eps)).exp())
    }

    pub fn d1(&self, h: f64) -> f64 {
        (1.0 - self.sigma) * (-(-h / self.eps).exp() + (-h / (2.0 * self.eps)).exp()) / self.eps
    }

    pub fn d2(&self, h: f64) -> f64 {
        (1.0 - self.sigma) * ((-h / self.eps).exp() - 0.5 * (-h / (2.0 * self.eps)).exp())
            / (self.eps * self.eps)
    }

    /// (coefficient of the new height, explicit part) of the wetting term.
    pub fn split(&self, h_old: f64) -> (f64, f64) {
        if h_old <= self.h_bar {
            (self.c1 + self.c2 * h_old, 0.0)
        } else {
            (0.0, self.d1(h_old))
        }
    }
}

/// Dense block system `[M τS; −(K+Mζ) M] [h'; μ'] = [M h; f]` solved by LU.
pub fn dense_step(
    n: usize,
    simplices: &[Vec<usize>],
    coords: &[[f64; 2]],
    h: &[f64],
    tau: f64,
    law: &Law,
    consistent: bool,
) -> (Vec<f64>, Vec<f64>) {
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    let mut m_global = DMatrix::<f64>::zeros(n, n);
    for s in simplices {
        let k = s.len();
        // measure and barycentric gradients
        let (meas, grads): (f64, Vec<[f64; 2]>) = if k == 2 {
            let l = coords[s[1]][0] - coords[s[0]][0];
            (l, vec![[-1.0 / l, 0.0], [1.0 / l, 0.0]])
        } else {
            let p: Vec<[f64; 2]> = s.iter().map(|&i| coords[i]).collect();
            let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let g = (0..3)
                .map(|i| {
                    let (b, c) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                    [(b[1] - c[1]) / twice, (c[0] - b[0]) / twice]
                })
                .collect();
            (0.5 * twice, g)
        };
        let gh = (0..k).fold([0.0, 0.0], |acc, i| {
            [
                acc[0] + h[s[i]] * grads[i][0],
                acc[1] + h[s[i]] * grads[i][1],
            ]
        });
        let q = (1.0 + gh[0] * gh[0] + gh[1] * gh[1]).sqrt();
        let hbar = s.iter().map(|&i| h[i]).sum::<f64>() / k as f64;
        let w = if consistent { q } else { 1.0 / q };
        let (coef, explicit) = law.split(hbar);
        for i in 0..k {
            for j in 0..k {
                let dot = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1];
                let pi = gh[0] * grads[i][0] + gh[1] * grads[i][1];
                let pj = gh[0] * grads[j][0] + gh[1] * grads[j][1];
                let mass = meas * if i == j { 2.0 } else { 1.0 } / ((k * (k + 1)) as f64);
                let surf = meas * (q * dot - pi * pj / q);
                let stiff = meas * law.g(hbar) / q * dot;
                let (r, c) = (s[i], s[j]);
                m_global[(r, c)] += mass;
                a[(r, n + c)] += tau * surf;
                a[(n + r, c)] -= stiff + coef * w * mass;
            }
            rhs[n + s[i]] += explicit * w * meas / k as f64;
        }
    }
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] += m_global[(r, c)];
            a[(n + r, n + c)] += m_global[(r, c)];
        }
    }
    let mh = &m_global * DVector::from_column_slice(h);
    for r in 0..n {
        rhs[r] = mh[r];
    }
    let x = a.lu().solve(&rhs).expect("oracle system is nonsingular");
    (
        x.rows(0, n).iter().copied().collect(),
        x.rows(n, n).iter().copied().collect(),
    )
}

pub fn random_heights(rng: &mut StdRng, n: usize, eps: f64) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => rng.random_range(0.0..eps),
            1 => rng.random_range(eps..3.0 * eps),
            _ => rng.random_range(0.0..1.5),
        })
        .collect()
}

pub fn perturbed_grid(rng: &mut StdRng, nx: usize, ny: usize) -> TriMesh {
    let (hx, hy) = (1.0 / nx as f64, 1.3 / ny as f64);
    let mut coords = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let interior = i > 0 && i < nx && j > 0 && j < ny;
            let (dx, dy) = if interior {
                (
                    rng.random_range(-0.25..0.25) * hx,
                    rng.random_range(-0.25..0.25) * hy,
                )
            } else {
                (0.0, 0.0)
            };
            coords.push([i as f64 * hx + dx, j as f64 * hy + dy]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if rng.random_bool(0.5) {
                tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            } else {
                tris.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                tris.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    TriMesh::new(coords, tris).unwrap()
}

pub fn close(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn forms() -> [(WeakForm, bool); 2] {
    [(WeakForm::Paper, false), (WeakForm::Consistent, true)]
}

/// Worst scaled nodal error over `cases` random interval states with at most 16 nodes.
pub fn interval_cases(seed: u64, cases: usize) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n_cells = rng.random_range(2..=15);
        let a = rng.random_range(-5.0..0.0);
        let b = a + rng.random_range(0.5..6.0);
        let mesh = IntervalMesh::new(a, b, n_cells).unwrap();
        let sigma = rng.random_range(0.05..1.0);
        let eps = rng.random_range(0.02..0.2);
        let tau = rng.random_range(1e-3..1.0);
        let p = WettingParams::new(sigma, eps).unwrap();
        let law = Law::new(sigma, eps);
        let h = random_heights(&mut rng, mesh.n_nodes(), eps);
        let coords: Vec<[f64; 2]> = (0..mesh.n_nodes()).map(|i| mesh.node(i)).collect();
        let simplices: Vec<Vec<usize>> = (0..n_cells).map(|e| vec![e, e + 1]).collect();
        for (form, consistent) in forms() {
            let mut st = Stepper::new(Arc::new(mesh.clone()), &p, Method::Auto).unwrap();
            let (hs, mus, _) = st.solve(&h, tau, form, false, 1e-12).unwrap();
            let (hd, mud) = dense_step(
                mesh.n_nodes(),
                &simplices,
                &coords,
                &h,
                tau,
                &law,
                consistent,
            );
            worst = worst.max(close(&hs, &hd).max(close(&mus, &mud)));
        }
    }
    worst
}

/// Worst scaled nodal error over `cases` random states on perturbed triangulations
/// with at most 30 nodes, for both direct solvers.
pub fn triangle_cases(seed: u64, cases: usize) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (nx, ny) = [(2, 2), (3, 4), (4, 4), (4, 5)][rng.random_range(0..4)];
        let mesh = perturbed_grid(&mut rng, nx, ny);
        assert!(mesh.n_nodes() <= 30);
        let sigma = rng.random_range(0.05..1.0);
        let eps = rng.random_range(0.02..0.2);
        let tau = rng.random_range(1e-3..1.0);
        let p = WettingParams::new(sigma, eps).unwrap();
        let law = Law::new(sigma, eps);
        let h = random_heights(&mut rng, mesh.n_nodes(), eps);
        let simplices: Vec<Vec<usize>> = mesh.triangles().iter().map(|t| t.to_vec()).collect();
        for (form, consistent) in forms() {
            for method in [Method::Banded, Method::Multifrontal] {
                let mut st = Stepper::new(Arc::new(mesh.clone()), &p, method).unwrap();
                let (hs, mus, _) = st.solve(&h, tau, form, false, 1e-12).unwrap();
                let (hd, mud) = dense_step(
                    mesh.n_nodes(),
                    &simplices,
                    mesh.coords(),
                    &h,
                    tau,
                    &law,
                    consistent,
                );
                worst = worst.max(close(&hs, &hd).max(close(&mus, &mud)));
            }
        }
    }
    worst
}
