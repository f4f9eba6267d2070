//! Uniform interval meshes and structured triangulations of rectangles.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Geometry of one P1 element. Interval elements use the first two slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub nodes: [usize; 3],
    pub n: usize,
    pub measure: f64,
    /// Gradients of the local basis functions (constant per element).
    pub grads: [[f64; 2]; 3],
}

impl Element {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.n]
    }

    /// Average of a nodal field over the element's vertices (midpoint / centroid value).
    pub fn average(&self, f: &[f64]) -> f64 {
        self.nodes().iter().map(|&i| f[i]).sum::<f64>() / self.n as f64
    }

    /// Constant gradient of the P1 interpolant of `f`.
    pub fn gradient(&self, f: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..self.n {
            let v = f[self.nodes[k]];
            g[0] += v * self.grads[k][0];
            g[1] += v * self.grads[k][1];
        }
        g
    }
}

/// Common interface of the P1 meshes used by assembly and diagnostics.
pub trait P1Mesh: Send + Sync {
    fn n_nodes(&self) -> usize;
    fn n_elements(&self) -> usize;
    fn element(&self, e: usize) -> Element;
    fn node(&self, i: usize) -> [f64; 2];
    /// Edges of the node graph, each listed once with `i < j`.
    fn edges(&self) -> Vec<(usize, usize)>;
    /// Whether node `i` lies on the domain boundary.
    fn is_boundary(&self, i: usize) -> bool;

    fn elements(&self) -> Box<dyn Iterator<Item = Element> + '_> {
        Box::new((0..self.n_elements()).map(move |e| self.element(e)))
    }

    fn measure(&self) -> f64 {
        self.elements().map(|e| e.measure).sum()
    }

    /// Adjacency lists of the node graph (sorted, without self loops).
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for (i, j) in self.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Uniform partition of `[a, b]` into `n_cells` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMesh {
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl IntervalMesh {
    pub fn new(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        build_interval_mesh(a, b, n_cells)
    }

    /// Mesh on `[a, b]` with spacing as close to `dx` as a whole number of cells allows.
    pub fn with_spacing(a: f64, b: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "spacing must be positive, got {dx}"
            )));
        }
        let n = ((b - a) / dx - 1e-9).ceil().max(1.0) as usize;
        build_interval_mesh(a, b, n)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the mesh.
    pub fn nearest_node(&self, x: f64) -> usize {
        let i = ((x - self.a) / self.dx).round();
        i.clamp(0.0, self.n_cells as f64) as usize
    }
}

pub fn build_interval_mesh(a: f64, b: f64, n_cells: usize) -> Result<IntervalMesh> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidMesh(format!("need a < b, got [{a}, {b}]")));
    }
    if n_cells == 0 {
        return Err(Error::InvalidMesh("n_cells must be at least 1".into()));
    }
    Ok(IntervalMesh {
        a,
        b,
        n_cells,
        dx: (b - a) / n_cells as f64,
    })
}

/// Append whole cells of the existing spacing beyond `b`; `units` is rounded up
/// to a multiple of `dx`.
pub fn extend_interval_mesh(m: &IntervalMesh, units: f64) -> Result<IntervalMesh> {
    if !(units > 0.0 && units.is_finite()) {
        return Err(Error::InvalidMesh(format!(
            "extension must be positive, got {units}"
        )));
    }
    let added = (units / m.dx - 1e-9).ceil().max(1.0) as usize;
    let n_cells = m.n_cells + added;
    Ok(IntervalMesh {
        a: m.a,
        b: m.a + n_cells as f64 * m.dx,
        n_cells,
        dx: m.dx,
    })
}

impl P1Mesh for IntervalMesh {
    fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    fn n_elements(&self) -> usize {
        self.n_cells
    }

    fn element(&self, e: usize) -> Element {
        let g = 1.0 / self.dx;
        Element {
            nodes: [e, e + 1, 0],
            n: 2,
            measure: self.dx,
            grads: [[-g, 0.0], [g, 0.0], [0.0, 0.0]],
        }
    }

    fn node(&self, i: usize) -> [f64; 2] {
        [self.x(i), 0.0]
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_cells).map(|e| (e, e + 1)).collect()
    }

    fn is_boundary(&self, i: usize) -> bool {
        i == 0 || i == self.n_cells
    }
}

/// Split direction of a rectangular cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagonal {
    /// Lower-left to upper-right.
    Forward,
    /// Lower-right to upper-left.
    Backward,
}

impl Diagonal {
    pub fn flipped(self) -> Self {
        match self {
            Diagonal::Forward => Diagonal::Backward,
            Diagonal::Backward => Diagonal::Forward,
        }
    }
}

/// Cell-splitting pattern of a structured triangulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriPattern {
    /// Every cell split along its lower-left/upper-right diagonal.
    #[default]
    Forward,
    /// Diagonals alternate in a checkerboard; symmetric under the square's
    /// reflections when both cell counts are even.
    UnionJack,
}

/// Bookkeeping for meshes built on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridInfo {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub nx: usize,
    pub ny: usize,
    /// Diagonal of each cell, row-major over `(i, j)`.
    pub diagonals: Vec<Diagonal>,
}

impl GridInfo {
    pub fn hx(&self) -> f64 {
        (self.b - self.a) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.d - self.c) / self.ny as f64
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
}

/// Triangulation with counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct TriMesh {
    coords: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    elements: Vec<Element>,
    grid: Option<GridInfo>,
}

impl TriMesh {
    /// Build from raw coordinates and triangles; every triangle must have
    /// positive signed area.
    pub fn new(coords: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = coords.len();
        let mut elements = Vec::with_capacity(triangles.len());
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing node"
                )));
            }
            let el = triangle_element(&coords, *tri);
            if !(el.measure > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area"
                )));
            }
            elements.push(el);
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                *edge_count.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        let mut boundary = vec![false; n];
        for (&(u, v), &c) in &edge_count {
            if c > 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge ({u}, {v}) shared by {c} triangles"
                )));
            }
            if c == 1 {
                boundary[u] = true;
                boundary[v] = true;
            }
        }
        Ok(TriMesh {
            coords,
            triangles,
            boundary,
            elements,
            grid: None,
        })
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn grid(&self) -> Option<&GridInfo> {
        self.grid.as_ref()
    }

    /// Value of the P1 interpolant of `f` at `(x, y)`; structured meshes only.
    /// Points outside the rectangle are clamped onto it.
    pub fn interpolate(&self, f: &[f64], x: f64, y: f64) -> Option<f64> {
        let g = self.grid.as_ref()?;
        let (hx, hy) = (g.hx(), g.hy());
        let sx = ((x - g.a) / hx).clamp(0.0, g.nx as f64);
        let sy = ((y - g.c) / hy).clamp(0.0, g.ny as f64);
        let i = (sx.floor() as usize).min(g.nx - 1);
        let j = (sy.floor() as usize).min(g.ny - 1);
        let (u, v) = (sx - i as f64, sy - j as f64);
        let ll = f[g.node_index(i, j)];
        let lr = f[g.node_index(i + 1, j)];
        let ul = f[g.node_index(i, j + 1)];
        let ur = f[g.node_index(i + 1, j + 1)];
        let val = match g.diagonals[j * g.nx + i] {
            Diagonal::Forward => {
                if u >= v {
                    ll + u * (lr - ll) + v * (ur - lr)
                } else {
                    ll + v * (ul - ll) + u * (ur - ul)
                }
            }
            Diagonal::Backward => {
                if u + v <= 1.0 {
                    ll + u * (lr - ll) + v * (ul - ll)
                } else {
                    ur + (1.0 - u) * (ul - ur) + (1.0 - v) * (lr - ur)
                }
            }
        };
        Some(val)
    }
}

fn triangle_element(coords: &[[f64; 2]], tri: [usize; 3]) -> Element {
    let [p0, p1, p2] = [coords[tri[0]], coords[tri[1]], coords[tri[2]]];
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = 0.5 * det;
    let inv = 1.0 / det;
    Element {
        nodes: tri,
        n: 3,
        measure: area,
        grads: [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ],
    }
}

/// Structured triangulation of `[a,b]×[c,d]` with every cell split along its
/// lower-left/upper-right diagonal. Node `(i, j)` has index `j·(nx+1) + i`.
pub fn build_rect_tri_mesh(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    nx: usize,
    ny: usize,
) -> Result<TriMesh> {
    build_rect_tri_mesh_with(a, b, c, d, nx, ny, TriPattern::Forward)
}

pub fn build_rect_tri_mesh_with(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    nx: usize,
    ny: usize,
    pattern: TriPattern,
) -> Result<TriMesh> {
    build_rect_tri_mesh_by_cell(a, b, c, d, nx, ny, |i, j| match pattern {
        TriPattern::Forward => Diagonal::Forward,
        TriPattern::UnionJack => {
            if (i + j) % 2 == 0 {
                Diagonal::Forward
            } else {
                Diagonal::Backward
            }
        }
    })
}

/// Structured triangulation with a caller-chosen diagonal per cell.
pub fn build_rect_tri_mesh_by_cell(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    nx: usize,
    ny: usize,
    diagonal: impl Fn(usize, usize) -> Diagonal,
) -> Result<TriMesh> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) || a >= b || c >= d {
        return Err(Error::InvalidMesh(format!(
            "degenerate rectangle [{a}, {b}]×[{c}, {d}]"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh("nx and ny must be at least 1".into()));
    }
    let hx = (b - a) / nx as f64;
    let hy = (d - c) / ny as f64;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push([a + i as f64 * hx, c + j as f64 * hy]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut diagonals = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (ll, lr, ul, ur) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            let diag = diagonal(i, j);
            match diag {
                Diagonal::Forward => {
                    triangles.push([ll, lr, ur]);
                    triangles.push([ll, ur, ul]);
                }
                Diagonal::Backward => {
                    triangles.push([ll, lr, ul]);
                    triangles.push([lr, ur, ul]);
                }
            }
            diagonals.push(diag);
        }
    }
    let mut mesh = TriMesh::new(coords, triangles)?;
    mesh.grid = Some(GridInfo {
        a,
        b,
        c,
        d,
        nx,
        ny,
        diagonals,
    });
    Ok(mesh)
}

impl P1Mesh for TriMesh {
    fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    fn element(&self, e: usize) -> Element {
        self.elements[e]
    }

    fn node(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let (u, v) = (t[k], t[(k + 1) % 3]);
                    (u.min(v), u.max(v))
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    fn elements(&self) -> Box<dyn Iterator<Item = Element> + '_> {
        Box::new(self.elements.iter().copied())
    }
}

/// Full-rectangle mesh obtained by reflecting a structured quarter mesh on
/// `[0, X]×[0, Y]` across both axes, plus the map from full nodes to quarter nodes.
///
/// Fields computed on the quarter with natural boundary conditions on the
/// symmetry lines are the restriction of the mirror-symmetric full solution
/// on this mesh.
#[derive(Debug, Clone)]
pub struct QuadrantMirror {
    pub full: TriMesh,
    pub to_quarter: Vec<usize>,
}

impl QuadrantMirror {
    pub fn new(quarter: &TriMesh) -> Result<Self> {
        let g = quarter
            .grid()
            .ok_or_else(|| Error::InvalidMesh("mirroring needs a structured mesh".into()))?;
        if g.a.abs() > 1e-12 || g.c.abs() > 1e-12 {
            return Err(Error::InvalidMesh(
                "quarter mesh must have its lower-left corner at the origin".into(),
            ));
        }
        let (nx, ny) = (g.nx, g.ny);
        let full = build_rect_tri_mesh_by_cell(-g.b, g.b, -g.d, g.d, 2 * nx, 2 * ny, |i, j| {
            let (qi, fx) = if i < nx {
                (nx - 1 - i, true)
            } else {
                (i - nx, false)
            };
            let (qj, fy) = if j < ny {
                (ny - 1 - j, true)
            } else {
                (j - ny, false)
            };
            let d = g.diagonals[qj * nx + qi];
            if fx != fy {
                d.flipped()
            } else {
                d
            }
        })?;
        let mut to_quarter = Vec::with_capacity(full.n_nodes());
        for j in 0..=2 * ny {
            for i in 0..=2 * nx {
                let qi = i.abs_diff(nx);
                let qj = j.abs_diff(ny);
                to_quarter.push(g.node_index(qi, qj));
            }
        }
        Ok(QuadrantMirror { full, to_quarter })
    }

    /// Expand a quarter field onto the full mesh.
    pub fn expand(&self, quarter_field: &[f64]) -> Vec<f64> {
        self.to_quarter.iter().map(|&q| quarter_field[q]).collect()
    }
}
