//! Fill-reducing ordering.
//!
//! A minimum-degree ordering on the quotient graph: eliminated vertices
//! become elements whose boundaries are merged into their neighbours'
//! adjacency, absorbed elements are dropped, and exact external degrees are
//! recomputed for the affected vertices. No supervariable detection — plain
//! minimum degree is enough here because orderings only have to be
//! fill-reducing, never optimal; all numeric code must be correct under any
//! permutation, including identity.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::matrix::SparseSymMatrix;
use super::perm::Permutation;

/// Off-diagonal density above which ordering is skipped: a nearly full
/// pattern fills regardless, and quotient-graph bookkeeping on it is
/// quadratic work for nothing.
const DENSE_FILL_CUTOFF: f64 = 0.25;

/// Compute a fill-reducing elimination order for a symmetric pattern.
pub fn minimum_degree(a: &SparseSymMatrix) -> Permutation {
    let n = a.n();
    if n == 0 {
        return Permutation::identity(0);
    }
    let offdiag = a.nnz() - n;
    if n > 1 && (offdiag as f64) > DENSE_FILL_CUTOFF * (n * (n - 1)) as f64 {
        return Permutation::identity(n);
    }

    // Variable adjacency (direct edges still uncovered by elements).
    let mut adj: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            let (rows, _) = a.col(j);
            rows.iter().copied().filter(|&i| i != j).collect()
        })
        .collect();
    let mut elems: Vec<Vec<usize>> = vec![Vec::new(); n]; // element ids per variable
    let mut elem_vars: Vec<Vec<usize>> = Vec::new(); // boundary variables per element
    let mut elem_alive: Vec<bool> = Vec::new();

    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut mark = vec![0u64; n];
    let mut stamp = 0u64;

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::with_capacity(2 * n);
    for (v, &deg) in degree.iter().enumerate() {
        heap.push(Reverse((deg, v)));
    }

    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let Reverse((d, v)) = heap.pop().expect("heap exhausted before ordering finished");
        if !alive[v] || d != degree[v] {
            continue; // stale entry
        }
        alive[v] = false;
        order.push(v);

        // New element: all live neighbours of v, via edges and via the
        // elements v touched (which it absorbs).
        stamp += 1;
        let mut boundary = Vec::new();
        for &u in &adj[v] {
            if alive[u] && mark[u] != stamp {
                mark[u] = stamp;
                boundary.push(u);
            }
        }
        for &e in &elems[v] {
            if !elem_alive[e] {
                continue;
            }
            for &u in &elem_vars[e] {
                if alive[u] && mark[u] != stamp {
                    mark[u] = stamp;
                    boundary.push(u);
                }
            }
        }
        for &e in &elems[v] {
            if elem_alive[e] {
                elem_alive[e] = false;
                elem_vars[e] = Vec::new();
            }
        }
        let eid = elem_vars.len();
        elem_vars.push(boundary.clone());
        elem_alive.push(true);

        // Update boundary variables: drop edges now covered by the new
        // element, attach the element, recompute exact degrees.
        for &u in &boundary {
            adj[u].retain(|&w| alive[w] && mark[w] != stamp);
            elems[u].retain(|&e| elem_alive[e]);
            elems[u].push(eid);
        }
        for &u in &boundary {
            stamp += 1;
            mark[u] = stamp;
            let mut deg = 0usize;
            for &w in &adj[u] {
                if alive[w] && mark[w] != stamp {
                    mark[w] = stamp;
                    deg += 1;
                }
            }
            for &e in &elems[u] {
                for &w in &elem_vars[e] {
                    if alive[w] && mark[w] != stamp {
                        mark[w] = stamp;
                        deg += 1;
                    }
                }
            }
            degree[u] = deg;
            heap.push(Reverse((deg, u)));
        }
    }

    Permutation::from_order(order)
}
