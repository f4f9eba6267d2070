//! Measured quantities: mass, energy, valley depth, agglomerate census,
//! shedding time, effective contact point and least-squares fits.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::integrate_field;
use crate::mesh::{IntervalMesh, P1Mesh, QuadrantMirror};
use crate::wetting::{gamma, WettingParams};

pub const DEFAULT_AGGLOMERATE_THRESHOLD: f64 = 0.1;
/// Minimum distance from every agglomerate for wetting-layer sampling.
pub const WETTING_LAYER_CLEARANCE: f64 = 5.0;

pub fn mass<M: P1Mesh + ?Sized>(mesh: &M, h: &[f64]) -> f64 {
    integrate_field(mesh, h)
}

/// `Σ_e γ(h_e)·Q_e·|e|` with centroid values.
pub fn energy<M: P1Mesh + ?Sized>(mesh: &M, h: &[f64], p: &WettingParams) -> f64 {
    mesh.elements()
        .map(|el| {
            let g = el.gradient(h);
            let q = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            gamma(el.average(h), p) * q * el.measure
        })
        .sum()
}

/// Region over which the minimum height is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Window {
    #[default]
    All,
    Interval {
        lo: f64,
        hi: f64,
    },
    Rect {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Nodes beyond the highest point in +x (the valley behind a retracting ridge).
    RightOfPeak,
}

impl Window {
    fn nodes<M: P1Mesh + ?Sized>(&self, mesh: &M, h: &[f64]) -> Vec<usize> {
        let n = mesh.n_nodes();
        match *self {
            Window::All => (0..n).collect(),
            Window::Interval { lo, hi } => (0..n)
                .filter(|&i| (lo..=hi).contains(&mesh.node(i)[0]))
                .collect(),
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (0..n)
                .filter(|&i| {
                    let [x, y] = mesh.node(i);
                    (xmin..=xmax).contains(&x) && (ymin..=ymax).contains(&y)
                })
                .collect(),
            Window::Disk { center, radius } => (0..n)
                .filter(|&i| {
                    let [x, y] = mesh.node(i);
                    (x - center[0]).hypot(y - center[1]) <= radius
                })
                .collect(),
            Window::RightOfPeak => {
                let peak = argmax(h);
                let xp = mesh.node(peak)[0];
                (0..n).filter(|&i| mesh.node(i)[0] > xp).collect()
            }
        }
    }
}

fn argmax(h: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in h.iter().enumerate() {
        if v > h[best] {
            best = i;
        }
    }
    best
}

/// Minimum nodal height in `window`, with its location.
pub fn min_height<M: P1Mesh + ?Sized>(
    mesh: &M,
    h: &[f64],
    window: &Window,
) -> Result<(f64, [f64; 2])> {
    let nodes = window.nodes(mesh, h);
    let &first = nodes
        .first()
        .ok_or_else(|| Error::Diagnostic("minimum-height window contains no nodes".into()))?;
    let i = nodes
        .into_iter()
        .fold(first, |b, i| if h[i] < h[b] { i } else { b });
    Ok((h[i], mesh.node(i)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub nodes: Vec<usize>,
    pub mass: f64,
    /// `[xmin, xmax, ymin, ymax]` of the node set.
    pub bbox: [f64; 4],
    pub touches_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgglomerateReport {
    pub components: Vec<Component>,
    /// Integral of `h` attributed to nodes outside every component.
    pub complement_mass: f64,
}

impl AgglomerateReport {
    pub fn count(&self) -> usize {
        self.components.len()
    }
}

/// Integration weights `w_i` with `∫ h = Σ w_i h_i` for P1 fields.
pub fn nodal_weights<M: P1Mesh + ?Sized>(mesh: &M) -> Vec<f64> {
    let mut w = vec![0.0; mesh.n_nodes()];
    for el in mesh.elements() {
        let v = el.measure / el.n as f64;
        for &i in el.nodes() {
            w[i] += v;
        }
    }
    w
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of `{h > threshold}` in the node graph.
pub fn count_agglomerates<M: P1Mesh + ?Sized>(
    mesh: &M,
    h: &[f64],
    threshold: f64,
) -> AgglomerateReport {
    let n = mesh.n_nodes();
    let above: Vec<bool> = h.iter().map(|&v| v > threshold).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for (i, j) in mesh.edges() {
        if above[i] && above[j] {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let w = nodal_weights(mesh);
    let mut label = vec![usize::MAX; n];
    let mut components: Vec<Component> = Vec::new();
    let mut complement_mass = 0.0;
    for i in 0..n {
        if !above[i] {
            complement_mass += w[i] * h[i];
            continue;
        }
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = components.len();
            components.push(Component {
                nodes: Vec::new(),
                mass: 0.0,
                bbox: [
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                ],
                touches_boundary: false,
            });
        }
        let c = &mut components[label[r]];
        let [x, y] = mesh.node(i);
        c.nodes.push(i);
        c.mass += w[i] * h[i];
        c.bbox = [
            c.bbox[0].min(x),
            c.bbox[1].max(x),
            c.bbox[2].min(y),
            c.bbox[3].max(y),
        ];
        c.touches_boundary |= mesh.is_boundary(i);
    }
    AgglomerateReport {
        components,
        complement_mass,
    }
}

/// Number of connected components of `{h ≤ threshold}` that do not touch the
/// domain boundary (holes enclosed by film).
pub fn count_holes<M: P1Mesh + ?Sized>(mesh: &M, h: &[f64], threshold: f64) -> usize {
    let neg: Vec<f64> = h.iter().map(|v| -v).collect();
    count_agglomerates(mesh, &neg, -threshold)
        .components
        .iter()
        .filter(|c| !c.touches_boundary)
        .count()
}

/// Median of nodal heights at distance ≥ `WETTING_LAYER_CLEARANCE` from every
/// node of every agglomerate.
pub fn wetting_layer_thickness<M: P1Mesh + ?Sized>(
    mesh: &M,
    h: &[f64],
    threshold: f64,
) -> Result<f64> {
    let report = count_agglomerates(mesh, h, threshold);
    let film: Vec<[f64; 2]> = report
        .components
        .iter()
        .flat_map(|c| c.nodes.iter().map(|&i| mesh.node(i)))
        .collect();
    let mut vals: Vec<f64> = (0..mesh.n_nodes())
        .filter(|&i| {
            let [x, y] = mesh.node(i);
            film.iter()
                .all(|p| (p[0] - x).hypot(p[1] - y) >= WETTING_LAYER_CLEARANCE)
        })
        .map(|i| h[i])
        .collect();
    if vals.is_empty() {
        return Err(Error::Diagnostic(
            "no nodes far enough from the film".into(),
        ));
    }
    vals.sort_unstable_by(f64::total_cmp);
    let k = vals.len();
    Ok(if k % 2 == 1 {
        vals[k / 2]
    } else {
        0.5 * (vals[k / 2 - 1] + vals[k / 2])
    })
}

/// Default shedding threshold `max(2ε², 1e−5)`.
pub fn shedding_threshold(epsilon: f64) -> f64 {
    (2.0 * epsilon * epsilon).max(1e-5)
}

/// First time the sampled valley minimum falls to `threshold`, linearly
/// interpolated between the bracketing samples.
pub fn first_shedding_time(samples: &[Sample], threshold: f64) -> Option<f64> {
    let k = samples.iter().position(|s| s.h_min <= threshold)?;
    if k == 0 {
        return Some(samples[0].t);
    }
    let (a, b) = (&samples[k - 1], &samples[k]);
    let f = (a.h_min - threshold) / (a.h_min - b.h_min);
    Some(a.t + f * (b.t - a.t))
}

/// Side of the film on which the bare substrate lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Flank {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactBand {
    #[serde(default = "default_h_c")]
    pub h_c: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub flank: Flank,
}

fn default_h_c() -> f64 {
    0.2
}

fn default_alpha() -> f64 {
    0.1
}

impl Default for ContactBand {
    fn default() -> Self {
        ContactBand {
            h_c: 0.2,
            alpha: 0.1,
            flank: Flank::Left,
        }
    }
}

/// Zero of the quadratic least-squares fit to the outer flank nodes with
/// `alpha ≤ h ≤ h_c`, walking outward from the highest point.
pub fn effective_contact_point(x: &[f64], h: &[f64], band: &ContactBand) -> Result<f64> {
    if x.len() != h.len() || h.is_empty() {
        return Err(Error::Diagnostic(
            "coordinate and height lengths differ".into(),
        ));
    }
    let peak = argmax(h);
    let order: Vec<usize> = match band.flank {
        Flank::Left => (0..=peak).rev().collect(),
        Flank::Right => (peak..h.len()).collect(),
    };
    let mut sel = Vec::new();
    for i in order {
        if h[i] > band.h_c {
            if sel.is_empty() {
                continue;
            }
            break;
        }
        if h[i] < band.alpha {
            break;
        }
        sel.push(i);
    }
    if sel.len() < 3 {
        return Err(Error::Diagnostic(format!(
            "only {} flank nodes with {} ≤ h ≤ {}",
            sel.len(),
            band.alpha,
            band.h_c
        )));
    }
    let xs: Vec<f64> = sel.iter().map(|&i| x[i]).collect();
    let hs: Vec<f64> = sel.iter().map(|&i| h[i]).collect();
    let x0 = xs.iter().sum::<f64>() / xs.len() as f64;
    let design: Vec<Vec<f64>> = xs
        .iter()
        .map(|&xi| vec![1.0, xi - x0, (xi - x0).powi(2)])
        .collect();
    let c = least_squares(&design, &hs)?.coefficients;
    let outer = *xs.last().unwrap() - x0;
    let roots = real_roots(c[2], c[1], c[0]);
    roots
        .into_iter()
        .min_by(|a, b| (a - outer).abs().total_cmp(&(b - outer).abs()))
        .map(|r| r + x0)
        .ok_or_else(|| Error::Diagnostic("flank fit has no real zero".into()))
}

/// Contact point of a 1D state.
pub fn effective_contact_point_on(
    mesh: &IntervalMesh,
    h: &[f64],
    band: &ContactBand,
) -> Result<f64> {
    effective_contact_point(&mesh.nodes(), h, band)
}

fn real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = b.abs().max(c.abs()).max(f64::MIN_POSITIVE);
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a];
    if q != 0.0 {
        r.push(c / q);
    }
    r
}

/// Least-squares fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    /// Coefficient of determination `1 − SS_res/SS_tot`.
    pub r_squared: f64,
}

/// Householder QR least squares for a small dense design.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<FitResult> {
    let m = design.len();
    let n = design.first().map_or(0, |r| r.len());
    if m < n || n == 0 || y.len() != m {
        return Err(Error::Diagnostic(format!(
            "need at least {n} samples, got {m}"
        )));
    }
    if design.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data"));
    }
    // column-major copy
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| design.iter().map(|r| r[j]).collect())
        .collect();
    let mut b = y.to_vec();
    let col_scale: Vec<f64> = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * col_scale[k].max(f64::MIN_POSITIVE) {
            return Err(Error::Diagnostic("rank-deficient fit design".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>();
        for col in a.iter_mut().skip(k) {
            let s = 2.0 * v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum::<f64>() / vn;
            col[k..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
        }
        let s = 2.0 * v.iter().zip(&b[k..]).map(|(p, q)| p * q).sum::<f64>() / vn;
        b[k..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
    }
    let mut coef = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[j][i] * coef[j];
        }
        coef[i] = s / a[i][i];
    }
    let fitted: Vec<f64> = design
        .iter()
        .map(|r| r.iter().zip(&coef).map(|(p, q)| p * q).sum())
        .collect();
    let ss_res: f64 = fitted.iter().zip(y).map(|(f, v)| (f - v).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(FitResult {
        coefficients: coef,
        residual_norm: ss_res.sqrt(),
        r_squared,
    })
}

/// Fit `S(t) = c + a·t^0.4 + b·t^0.2`; coefficients are `[c, a, b]`.
pub fn fit_contact_law(t: &[f64], s: &[f64]) -> Result<FitResult> {
    if t.len() < 4 {
        return Err(Error::Diagnostic(format!(
            "contact law fit needs ≥ 4 samples, got {}",
            t.len()
        )));
    }
    if t.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Diagnostic("contact law fit needs t > 0".into()));
    }
    let design: Vec<Vec<f64>> = t
        .iter()
        .map(|&v| vec![1.0, v.powf(0.4), v.powf(0.2)])
        .collect();
    least_squares(&design, s)
}

/// Fit `y = C·x^k` by a line in log-log coordinates; coefficients are `[C, k]`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() < 3 || x.len() != y.len() {
        return Err(Error::Diagnostic(format!(
            "power law fit needs ≥ 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::Diagnostic(
            "power law fit needs positive data".into(),
        ));
    }
    let design: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, v.ln()]).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mut fit = least_squares(&design, &ly)?;
    fit.coefficients[0] = fit.coefficients[0].exp();
    Ok(fit)
}

/// One row of the run series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub step: usize,
    pub mass: f64,
    pub energy: f64,
    pub h_min: f64,
    pub agglomerates: usize,
    pub holes: usize,
    pub x_c: Option<f64>,
}

/// Diagnostics evaluated at each sample time.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub threshold: f64,
    pub window: Window,
    pub contact: Option<ContactBand>,
    /// Count agglomerates on the mirrored full domain of a quarter mesh.
    pub mirror: Option<Arc<QuadrantMirror>>,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            threshold: DEFAULT_AGGLOMERATE_THRESHOLD,
            window: Window::All,
            contact: None,
            mirror: None,
        }
    }
}

impl Sampler {
    pub fn sample<M: P1Mesh + ?Sized>(
        &self,
        mesh: &M,
        h: &[f64],
        p: &WettingParams,
        t: f64,
        step: usize,
    ) -> Sample {
        let h_min = min_height(mesh, h, &self.window).map_or(f64::NAN, |(v, _)| v);
        let (agglomerates, holes) = match &self.mirror {
            Some(m) => {
                let full = m.expand(h);
                (
                    count_agglomerates(&m.full, &full, self.threshold).count(),
                    count_holes(&m.full, &full, self.threshold),
                )
            }
            None => (
                count_agglomerates(mesh, h, self.threshold).count(),
                count_holes(mesh, h, self.threshold),
            ),
        };
        let x_c = self.contact.as_ref().and_then(|band| {
            let x: Vec<f64> = (0..mesh.n_nodes()).map(|i| mesh.node(i)[0]).collect();
            effective_contact_point(&x, h, band).ok()
        });
        Sample {
            t,
            step,
            mass: mass(mesh, h),
            energy: energy(mesh, h, p),
            h_min,
            agglomerates,
            holes,
            x_c,
        }
    }
}
