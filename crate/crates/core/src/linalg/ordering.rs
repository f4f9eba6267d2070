//! Fill-reducing orderings.

use std::collections::VecDeque;

const LEAF_SIZE: usize = 24;

/// Geometric nested dissection of a node graph: recursively split the node
/// set at the median coordinate of its longer axis, number both halves
/// first and the separating layer last. Returns the node order (new → old).
pub fn nested_dissection(coords: &[[f64; 2]], adj: &[Vec<usize>]) -> Vec<usize> {
    let n = coords.len();
    let mut order = Vec::with_capacity(n);
    let mut side = vec![0u32; n];
    let mut stamp = 0u32;
    dissect(
        (0..n).collect(),
        coords,
        adj,
        &mut side,
        &mut stamp,
        &mut order,
    );
    order
}

fn dissect(
    nodes: Vec<usize>,
    coords: &[[f64; 2]],
    adj: &[Vec<usize>],
    side: &mut [u32],
    stamp: &mut u32,
    order: &mut Vec<usize>,
) {
    if nodes.len() <= LEAF_SIZE {
        order.extend(nodes);
        return;
    }
    let extent = |axis: usize| {
        let (lo, hi) = nodes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(coords[v][axis]), hi.max(coords[v][axis]))
            });
        hi - lo
    };
    let (ex, ey) = (extent(0), extent(1));
    let axis = if ex >= ey { 0 } else { 1 };
    if extent(axis) <= 0.0 {
        order.extend(nodes);
        return;
    }
    let mut vals: Vec<f64> = nodes.iter().map(|&v| coords[v][axis]).collect();
    vals.sort_unstable_by(f64::total_cmp);
    let mid = vals[vals.len() / 2];
    // split by value so layers of equal coordinate stay together
    let cut = if mid > vals[0] {
        mid
    } else {
        match vals.iter().find(|&&v| v > mid) {
            Some(&v) => v,
            None => {
                order.extend(nodes);
                return;
            }
        }
    };
    *stamp += 1;
    let left_tag = *stamp;
    let (left, right): (Vec<usize>, Vec<usize>) =
        nodes.into_iter().partition(|&v| coords[v][axis] < cut);
    for &v in &left {
        side[v] = left_tag;
    }
    let (sep, right): (Vec<usize>, Vec<usize>) = right
        .into_iter()
        .partition(|&v| adj[v].iter().any(|&u| side[u] == left_tag));
    dissect(left, coords, adj, side, stamp, order);
    dissect(right, coords, adj, side, stamp, order);
    order.extend(sep);
}

/// Reverse Cuthill–McKee ordering of a graph (new → old).
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| adj[v].len());
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| adj[u].len());
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Expand a node order to an order of `dofs` interleaved unknowns per node.
pub fn expand_to_dofs(node_order: &[usize], dofs: usize) -> Vec<usize> {
    node_order
        .iter()
        .flat_map(|&v| (0..dofs).map(move |k| v * dofs + k))
        .collect()
}
