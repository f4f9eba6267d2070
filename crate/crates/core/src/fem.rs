//! P1 element kernels and global assembly.
//!
//! Coefficients are element-wise constants: the caller evaluates them at the
//! element midpoint (intervals) or centroid (triangles) from the P1 interpolant.

use crate::error::{Error, Result};
use crate::mesh::{Element, P1Mesh};
use crate::sparse::{CsrMatrix, SparseSystem};

/// Element weights for weighted assembly.
#[derive(Debug, Clone, Copy)]
pub enum Weights<'a> {
    Uniform(f64),
    PerElement(&'a [f64]),
}

impl Weights<'_> {
    fn get(&self, e: usize) -> f64 {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerElement(w) => w[e],
        }
    }

    fn check(&self, n_elements: usize) -> Result<()> {
        match self {
            Weights::Uniform(w) => {
                if w.is_nan() {
                    return Err(Error::NonFinite("element weight"));
                }
            }
            Weights::PerElement(w) => {
                if w.len() != n_elements {
                    return Err(Error::DimensionMismatch {
                        expected: n_elements,
                        got: w.len(),
                    });
                }
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("element weight"));
                }
            }
        }
        Ok(())
    }
}

type Local = [[f64; 3]; 3];

/// Consistent P1 mass matrix of one element times `w`.
pub fn element_mass(el: &Element, w: f64) -> Local {
    let mut m = [[0.0; 3]; 3];
    // ∫φiφj = |e|·(1 + δij)/((n)(n+1)) for simplices of n vertices
    let denom = (el.n * (el.n + 1)) as f64;
    for (i, row) in m.iter_mut().enumerate().take(el.n) {
        for (j, v) in row.iter_mut().enumerate().take(el.n) {
            let f = if i == j { 2.0 } else { 1.0 };
            *v = w * el.measure * f / denom;
        }
    }
    m
}

/// `w·∫∇φi·∇φj` on one element.
pub fn element_stiffness(el: &Element, w: f64) -> Local {
    let mut k = [[0.0; 3]; 3];
    for i in 0..el.n {
        for j in 0..el.n {
            let g = el.grads[i][0] * el.grads[j][0] + el.grads[i][1] * el.grads[j][1];
            k[i][j] = w * el.measure * g;
        }
    }
    k
}

/// `Q∫[∇φi·∇φj − (∇h·∇φi)(∇h·∇φj)/Q²]` with `Q = √(1+|∇h|²)`: the surface
/// Dirichlet form of a graph pulled back to the parameter domain.
pub fn element_surface_stiffness(el: &Element, grad_h: [f64; 2]) -> Local {
    let q2 = 1.0 + grad_h[0] * grad_h[0] + grad_h[1] * grad_h[1];
    let q = q2.sqrt();
    let mut proj = [0.0; 3];
    for (i, p) in proj.iter_mut().enumerate().take(el.n) {
        *p = grad_h[0] * el.grads[i][0] + grad_h[1] * el.grads[i][1];
    }
    let mut s = [[0.0; 3]; 3];
    for i in 0..el.n {
        for j in 0..el.n {
            let g = el.grads[i][0] * el.grads[j][0] + el.grads[i][1] * el.grads[j][1];
            s[i][j] = el.measure * (q * g - proj[i] * proj[j] / q);
        }
    }
    s
}

/// `w·∫φi` on one element.
pub fn element_load(el: &Element, w: f64) -> [f64; 3] {
    let v = w * el.measure / el.n as f64;
    let mut out = [0.0; 3];
    for o in out.iter_mut().take(el.n) {
        *o = v;
    }
    out
}

fn assemble<M: P1Mesh + ?Sized>(
    mesh: &M,
    mut local: impl FnMut(usize, &Element) -> Local,
) -> Result<SparseSystem> {
    let n = mesh.n_nodes();
    let mut trip = Vec::with_capacity(mesh.n_elements() * 9);
    for (e, el) in mesh.elements().enumerate() {
        let m = local(e, &el);
        for a in 0..el.n {
            for b in 0..el.n {
                trip.push((el.nodes[a], el.nodes[b], m[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trip)
}

/// `M_ij = Σ_e w_e ∫_e φi φj`.
pub fn assemble_mass<M: P1Mesh + ?Sized>(mesh: &M, weights: Weights<'_>) -> Result<SparseSystem> {
    weights.check(mesh.n_elements())?;
    assemble(mesh, |e, el| element_mass(el, weights.get(e)))
}

/// Row-sum lumped mass (diagonal).
pub fn assemble_lumped_mass<M: P1Mesh + ?Sized>(
    mesh: &M,
    weights: Weights<'_>,
) -> Result<SparseSystem> {
    weights.check(mesh.n_elements())?;
    let n = mesh.n_nodes();
    let mut diag = vec![0.0; n];
    for (e, el) in mesh.elements().enumerate() {
        let l = element_load(&el, weights.get(e));
        for a in 0..el.n {
            diag[el.nodes[a]] += l[a];
        }
    }
    CsrMatrix::from_triplets(n, n, diag.into_iter().enumerate().map(|(i, v)| (i, i, v)))
}

/// `K_ij = Σ_e w_e ∫_e ∇φi·∇φj`.
pub fn assemble_weighted_stiffness<M: P1Mesh + ?Sized>(
    mesh: &M,
    weights: Weights<'_>,
) -> Result<SparseSystem> {
    weights.check(mesh.n_elements())?;
    assemble(mesh, |e, el| element_stiffness(el, weights.get(e)))
}

/// Surface stiffness of the graph of `h`.
pub fn assemble_surface_stiffness<M: P1Mesh + ?Sized>(mesh: &M, h: &[f64]) -> Result<SparseSystem> {
    check_field(mesh, h, "height field")?;
    assemble(mesh, |_, el| element_surface_stiffness(el, el.gradient(h)))
}

/// `Σ_e w_e ∫_e φi`.
pub fn assemble_load<M: P1Mesh + ?Sized>(mesh: &M, weights: Weights<'_>) -> Result<Vec<f64>> {
    weights.check(mesh.n_elements())?;
    let mut r = vec![0.0; mesh.n_nodes()];
    for (e, el) in mesh.elements().enumerate() {
        let l = element_load(&el, weights.get(e));
        for a in 0..el.n {
            r[el.nodes[a]] += l[a];
        }
    }
    Ok(r)
}

/// Exact integral of the P1 interpolant of `f`.
pub fn integrate_field<M: P1Mesh + ?Sized>(mesh: &M, f: &[f64]) -> f64 {
    debug_assert_eq!(f.len(), mesh.n_nodes());
    mesh.elements().map(|el| el.measure * el.average(f)).sum()
}

/// Midpoint/centroid value of `f` on every element.
pub fn element_averages<M: P1Mesh + ?Sized>(mesh: &M, f: &[f64]) -> Vec<f64> {
    mesh.elements().map(|el| el.average(f)).collect()
}

pub(crate) fn check_field<M: P1Mesh + ?Sized>(
    mesh: &M,
    f: &[f64],
    what: &'static str,
) -> Result<()> {
    if f.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: f.len(),
        });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}
