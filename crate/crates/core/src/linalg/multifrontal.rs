//! Supernodal multifrontal LU for matrices with a symmetric nonzero pattern.
//!
//! The symbolic phase (elimination tree, supernodes, assembly maps) depends
//! only on the pattern and the ordering and is reused across refactorizations.
//! Pivoting is partial and restricted to the fully summed rows of each front.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Supernode {
    first: usize,
    last: usize,
    /// Off-diagonal row structure (permuted indices, sorted, all ≥ `last`).
    rows: Vec<usize>,
    parent: usize,
    children: Vec<usize>,
    /// Position of each child's update rows inside this front.
    child_maps: Vec<Vec<u32>>,
    /// `(value position in the source CSR, local row, local col)`.
    entries: Vec<(usize, u32, u32)>,
}

impl Supernode {
    fn n_piv(&self) -> usize {
        self.last - self.first
    }

    fn size(&self) -> usize {
        self.n_piv() + self.rows.len()
    }
}

/// Reusable symbolic analysis.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    nnz: usize,
    perm: Vec<usize>,
    supernodes: Vec<Supernode>,
}

#[derive(Debug, Clone)]
struct Front {
    /// Pivot rows `0..np` of the front, full width (L11\U11 | U12).
    top: Vec<f64>,
    /// `L21`, `nr × np`.
    l21: Vec<f64>,
    piv: Vec<usize>,
}

/// Numeric LU factors.
#[derive(Debug, Clone)]
pub struct MultifrontalLu {
    symbolic: std::sync::Arc<Symbolic>,
    fronts: Vec<Front>,
}

impl Symbolic {
    /// Analyse the pattern of `a` under the ordering `order` (new → old).
    pub fn analyze(a: &CsrMatrix, order: &[usize]) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n || order.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: order.len(),
            });
        }
        let mut iperm = vec![NONE; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || iperm[old] != NONE {
                return Err(Error::InvalidParameter(
                    "ordering is not a permutation".into(),
                ));
            }
            iperm[old] = new;
        }
        let adj = permuted_symmetric_adjacency(a, &iperm);
        let parent = etree(&adj);
        let post = postorder(&parent);
        // renumber so that the elimination tree is postordered
        let perm: Vec<usize> = post.iter().map(|&k| order[k]).collect();
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let adj = permuted_symmetric_adjacency(a, &iperm);
        let parent = etree(&adj);

        let mut n_children = vec![0usize; n];
        for &p in &parent {
            if p != NONE {
                n_children[p] += 1;
            }
        }
        // column structures, consumed by the parent once it is processed
        let mut col_struct: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, &p) in parent.iter().enumerate() {
            if p != NONE {
                children_of[p].push(j);
            }
        }
        let mut mark = vec![NONE; n];
        let mut supernodes: Vec<Supernode> = Vec::new();
        let mut sn_of = vec![NONE; n];
        for j in 0..n {
            let mut s: Vec<usize> = Vec::new();
            mark[j] = j;
            for &i in &adj[j] {
                if i > j && mark[i] != j {
                    mark[i] = j;
                    s.push(i);
                }
            }
            for &c in &children_of[j] {
                if let Some(cs) = col_struct[c].take() {
                    for i in cs {
                        if i != j && mark[i] != j {
                            mark[i] = j;
                            s.push(i);
                        }
                    }
                }
            }
            s.sort_unstable();
            // extend the previous supernode when j is its last column's only child
            let extend = j > 0
                && parent[j - 1] == j
                && n_children[j] == 1
                && supernodes
                    .last()
                    .is_some_and(|sn| sn.last == j && sn.rows.len() == s.len() + 1);
            if extend {
                let sn = supernodes.last_mut().unwrap();
                sn.last = j + 1;
                sn.rows = s.clone();
            } else {
                supernodes.push(Supernode {
                    first: j,
                    last: j + 1,
                    rows: s.clone(),
                    parent: NONE,
                    children: Vec::new(),
                    child_maps: Vec::new(),
                    entries: Vec::new(),
                });
            }
            sn_of[j] = supernodes.len() - 1;
            if parent[j] != NONE {
                col_struct[j] = Some(s);
            }
        }
        for s in 0..supernodes.len() {
            if let Some(&r) = supernodes[s].rows.first() {
                let p = sn_of[r];
                supernodes[s].parent = p;
                supernodes[p].children.push(s);
            }
        }
        // child → parent extend-add maps
        let mut local = vec![NONE; n];
        for s in 0..supernodes.len() {
            let (first, last) = (supernodes[s].first, supernodes[s].last);
            for g in first..last {
                local[g] = g - first;
            }
            let np = last - first;
            for (k, &r) in supernodes[s].rows.iter().enumerate() {
                local[r] = np + k;
            }
            let maps: Vec<Vec<u32>> = supernodes[s]
                .children
                .iter()
                .map(|&c| {
                    supernodes[c]
                        .rows
                        .iter()
                        .map(|&r| local[r] as u32)
                        .collect()
                })
                .collect();
            debug_assert!(maps.iter().flatten().all(|&v| v as usize != NONE));
            supernodes[s].child_maps = maps;
            for g in first..last {
                local[g] = NONE;
            }
            for &r in &supernodes[s].rows {
                local[r] = NONE;
            }
        }
        // assembly map for the original entries
        let mut per_sn: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); supernodes.len()];
        for i in 0..n {
            for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
                let (r, c) = (iperm[i], iperm[a.col_idx()[k]]);
                per_sn[sn_of[r.min(c)]].push((k, r, c));
            }
        }
        for (s, list) in per_sn.into_iter().enumerate() {
            let sn = &supernodes[s];
            let np = sn.n_piv();
            let loc = |g: usize| -> usize {
                if g < sn.last {
                    g - sn.first
                } else {
                    np + sn
                        .rows
                        .binary_search(&g)
                        .expect("entry outside front structure")
                }
            };
            let entries = list
                .into_iter()
                .map(|(k, r, c)| (k, loc(r) as u32, loc(c) as u32))
                .collect();
            supernodes[s].entries = entries;
        }
        Ok(Symbolic {
            n,
            nnz: a.nnz(),
            perm,
            supernodes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries (L and U, including the diagonal).
    pub fn factor_nnz(&self) -> usize {
        self.supernodes
            .iter()
            .map(|s| {
                let np = s.n_piv();
                np * np + 2 * np * s.rows.len()
            })
            .sum()
    }
}

fn permuted_symmetric_adjacency(a: &CsrMatrix, iperm: &[usize]) -> Vec<Vec<usize>> {
    let n = a.n_rows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            let (r, c) = (iperm[i], iperm[j]);
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Elimination tree of a symmetric pattern (Liu's algorithm with path compression).
fn etree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for j in 0..n {
        for &i in &adj[j] {
            if i >= j {
                continue;
            }
            let mut r = i;
            while ancestor[r] != NONE && ancestor[r] != j {
                let next = ancestor[r];
                ancestor[r] = j;
                r = next;
            }
            if ancestor[r] == NONE {
                ancestor[r] = j;
                parent[r] = j;
            }
        }
    }
    parent
}

fn postorder(parent: &[usize]) -> Vec<usize> {
    let n = parent.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (j, &p) in parent.iter().enumerate() {
        if p == NONE {
            roots.push(j);
        } else {
            children[p].push(j);
        }
    }
    let mut post = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &r in &roots {
        stack.push((r, 0));
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if *k < children[v].len() {
                let c = children[v][*k];
                *k += 1;
                stack.push((c, 0));
            } else {
                post.push(v);
                stack.pop();
            }
        }
    }
    post
}

impl MultifrontalLu {
    pub fn factor(symbolic: std::sync::Arc<Symbolic>, a: &CsrMatrix) -> Result<Self> {
        if a.n_rows() != symbolic.n || a.nnz() != symbolic.nnz {
            return Err(Error::InvalidParameter(
                "matrix pattern differs from the analysed pattern".into(),
            ));
        }
        let vals = a.values();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * 1e-3;
        let sns = &symbolic.supernodes;
        let mut fronts = Vec::with_capacity(sns.len());
        let mut updates: Vec<Option<Vec<f64>>> = vec![None; sns.len()];
        for (s, sn) in sns.iter().enumerate() {
            let np = sn.n_piv();
            let m = sn.size();
            let mut f = vec![0.0; m * m];
            for &(k, r, c) in &sn.entries {
                f[r as usize * m + c as usize] += vals[k];
            }
            for (ci, &c) in sn.children.iter().enumerate() {
                let u = updates[c].take().expect("child update consumed twice");
                let map = &sn.child_maps[ci];
                let nu = map.len();
                for a_ in 0..nu {
                    let row = map[a_] as usize * m;
                    let urow = &u[a_ * nu..(a_ + 1) * nu];
                    for (b_, &ub) in urow.iter().enumerate() {
                        f[row + map[b_] as usize] += ub;
                    }
                }
            }
            let piv = partial_lu(&mut f, m, np, tiny).map_err(|k| Error::Singular {
                index: symbolic.perm[sn.first + k],
            })?;
            let nr = m - np;
            if nr > 0 {
                schur_update(&mut f, m, np);
                let mut u = vec![0.0; nr * nr];
                for r in 0..nr {
                    u[r * nr..(r + 1) * nr]
                        .copy_from_slice(&f[(np + r) * m + np..(np + r + 1) * m]);
                }
                updates[s] = Some(u);
            }
            let mut l21 = vec![0.0; nr * np];
            for r in 0..nr {
                l21[r * np..(r + 1) * np].copy_from_slice(&f[(np + r) * m..(np + r) * m + np]);
            }
            f.truncate(np * m);
            fronts.push(Front { top: f, l21, piv });
        }
        Ok(MultifrontalLu { symbolic, fronts })
    }

    pub fn symbolic(&self) -> &std::sync::Arc<Symbolic> {
        &self.symbolic
    }

    /// Solve `A x = b` in place (original numbering).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let sym = &*self.symbolic;
        let mut y: Vec<f64> = sym.perm.iter().map(|&o| b[o]).collect();
        for (sn, fr) in sym.supernodes.iter().zip(&self.fronts) {
            let np = sn.n_piv();
            let m = sn.size();
            let yp = &mut y[sn.first..sn.last];
            for (k, &p) in fr.piv.iter().enumerate() {
                yp.swap(k, p);
            }
            for i in 1..np {
                let row = &fr.top[i * m..i * m + i];
                let s: f64 = row.iter().zip(yp.iter()).map(|(l, v)| l * v).sum();
                yp[i] -= s;
            }
            let yp: Vec<f64> = yp.to_vec();
            for (r, &g) in sn.rows.iter().enumerate() {
                let row = &fr.l21[r * np..(r + 1) * np];
                let s: f64 = row.iter().zip(&yp).map(|(l, v)| l * v).sum();
                y[g] -= s;
            }
        }
        for (sn, fr) in sym.supernodes.iter().zip(&self.fronts).rev() {
            let np = sn.n_piv();
            let m = sn.size();
            for i in (0..np).rev() {
                let row = &fr.top[i * m..(i + 1) * m];
                let mut s = y[sn.first + i];
                for (r, &g) in sn.rows.iter().enumerate() {
                    s -= row[np + r] * y[g];
                }
                for k in i + 1..np {
                    s -= row[k] * y[sn.first + k];
                }
                y[sn.first + i] = s / row[i];
            }
        }
        for (new, &old) in sym.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }
}

/// LU of the leading `np` columns of the row-major `m×m` front, pivoting only
/// among the first `np` rows. Returns the swap sequence or the failing column.
fn partial_lu(
    f: &mut [f64],
    m: usize,
    np: usize,
    tiny: f64,
) -> std::result::Result<Vec<usize>, usize> {
    let mut piv = Vec::with_capacity(np);
    for k in 0..np {
        let mut p = k;
        let mut best = f[k * m + k].abs();
        for i in k + 1..np {
            let v = f[i * m + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > tiny) {
            return Err(k);
        }
        if p != k {
            for c in 0..m {
                f.swap(k * m + c, p * m + c);
            }
        }
        piv.push(p);
        let d = f[k * m + k];
        let (head, tail) = f.split_at_mut((k + 1) * m);
        let pivot_row = &head[k * m + k + 1..k * m + np];
        for i in 0..m - k - 1 {
            let row = &mut tail[i * m..i * m + np];
            row[k] /= d;
            let l = row[k];
            if l != 0.0 {
                for (x, &u) in row[k + 1..np].iter_mut().zip(pivot_row) {
                    *x -= l * u;
                }
            }
        }
    }
    // U12 = L11⁻¹ F12
    for k in 0..np {
        let (head, tail) = f.split_at_mut((k + 1) * m);
        let urow = &head[k * m + np..(k + 1) * m];
        for i in 0..np - k - 1 {
            let row = &mut tail[i * m..(i + 1) * m];
            let l = row[k];
            if l != 0.0 {
                for (x, &u) in row[np..].iter_mut().zip(urow) {
                    *x -= l * u;
                }
            }
        }
    }
    Ok(piv)
}

/// `F22 −= L21·U12`.
fn schur_update(f: &mut [f64], m: usize, np: usize) {
    let nr = m - np;
    if nr == 0 || np == 0 {
        return;
    }
    let ptr = f.as_mut_ptr();
    // SAFETY: the three blocks are disjoint regions of `f`, which has m×m
    // elements; strides describe row-major storage with leading dimension m.
    unsafe {
        let a = ptr.add(np * m) as *const f64;
        let b = ptr.add(np) as *const f64;
        let c = ptr.add(np * m + np);
        matrixmultiply::dgemm(
            nr, np, nr, -1.0, a, m as isize, 1, b, m as isize, 1, 1.0, c, m as isize, 1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ordering::{expand_to_dofs, nested_dissection};
    use crate::mesh::{build_rect_tri_mesh, P1Mesh};
    use std::sync::Arc;

    fn grid_block_matrix(nx: usize, ny: usize) -> CsrMatrix {
        let m = build_rect_tri_mesh(0.0, 1.0, 0.0, 1.0, nx, ny).unwrap();
        let adj = m.adjacency();
        let mut t = Vec::new();
        for i in 0..m.n_nodes() {
            let deg = adj[i].len() as f64;
            t.push((2 * i, 2 * i, 1.0 + deg));
            t.push((2 * i, 2 * i + 1, 0.3 * deg));
            t.push((2 * i + 1, 2 * i, -0.7 * deg));
            t.push((2 * i + 1, 2 * i + 1, 2.0));
            for &j in &adj[i] {
                t.push((2 * i, 2 * j, -0.5));
                t.push((2 * i, 2 * j + 1, -0.3 + 0.01 * j as f64));
                t.push((2 * i + 1, 2 * j, 0.7));
                t.push((2 * i + 1, 2 * j + 1, 0.1));
            }
        }
        CsrMatrix::from_triplets(2 * m.n_nodes(), 2 * m.n_nodes(), t).unwrap()
    }

    #[test]
    fn solves_block_grid_system() {
        let (nx, ny) = (13, 9);
        let a = grid_block_matrix(nx, ny);
        let m = build_rect_tri_mesh(0.0, 1.0, 0.0, 1.0, nx, ny).unwrap();
        let order = expand_to_dofs(&nested_dissection(m.coords(), &m.adjacency()), 2);
        let sym = Arc::new(Symbolic::analyze(&a, &order).unwrap());
        let lu = MultifrontalLu::factor(sym, &a).unwrap();
        let x: Vec<f64> = (0..a.n_rows())
            .map(|i| ((i * 7919) % 31) as f64 / 31.0 - 0.5)
            .collect();
        let mut b = a.mul_vec(&x);
        lu.solve_in_place(&mut b);
        let err = b
            .iter()
            .zip(&x)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn natural_order_works_too() {
        let a = grid_block_matrix(4, 3);
        let order: Vec<usize> = (0..a.n_rows()).collect();
        let sym = Arc::new(Symbolic::analyze(&a, &order).unwrap());
        let lu = MultifrontalLu::factor(sym, &a).unwrap();
        let x = vec![1.0; a.n_rows()];
        let mut b = a.mul_vec(&x);
        lu.solve_in_place(&mut b);
        assert!(b.iter().all(|v| (v - 1.0).abs() < 1e-11));
    }

    #[test]
    fn etree_of_path() {
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        assert_eq!(etree(&adj), vec![1, 2, NONE]);
    }
}
