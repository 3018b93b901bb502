//! Approximate minimum degree ordering on the quotient graph.
//!
//! Eliminated variables become elements; a variable's neighbourhood is its
//! remaining variable neighbours plus the variables of its adjacent
//! elements. Degrees use the AMD upper bound built from `|Le \ Lp|`,
//! indistinguishable variables are merged into supervariables, and very dense
//! rows (the zero-mean multipliers, for instance) are ordered last.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Variable,
    Element,
    /// element merged into a later element
    Absorbed,
    /// variable merged into a supervariable
    Merged,
    Dense,
}

/// Fill-reducing permutation of the symmetric pattern of `a + a^T`.
/// `perm[k]` is the original index eliminated at step `k`.
pub fn amd(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "ordering needs a square matrix");
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.iter() {
        if i != j {
            var_adj[i].push(j);
            var_adj[j].push(i);
        }
    }
    for adj in &mut var_adj {
        adj.sort_unstable();
        adj.dedup();
    }

    let dense = 16usize.max((10.0 * (n as f64).sqrt()) as usize);
    let mut status = vec![Status::Variable; n];
    let mut dense_nodes = Vec::new();
    for i in 0..n {
        if var_adj[i].len() > dense {
            status[i] = Status::Dense;
            dense_nodes.push(i);
        }
    }
    if !dense_nodes.is_empty() {
        for adj in &mut var_adj {
            adj.retain(|&j| status[j] != Status::Dense);
        }
        for &d in &dense_nodes {
            var_adj[d].clear();
        }
    }

    let mut elem_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut nv = vec![1usize; n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut degree: Vec<usize> = var_adj.iter().map(|a| a.len()).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n)
        .filter(|&i| status[i] == Status::Variable)
        .map(|i| Reverse((degree[i], i)))
        .collect();
    let mut remaining = n - dense_nodes.len();

    let mut mark = vec![usize::MAX; n];
    let mut wstamp = vec![usize::MAX; n];
    let mut w = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    let mut lp = Vec::new();
    let mut step = 0usize;

    while let Some(Reverse((d, p))) = heap.pop() {
        if status[p] != Status::Variable || degree[p] != d {
            continue;
        }
        step += 1;
        emit(p, &members, &mut order);
        remaining -= nv[p];

        // Lp = variables reachable from p
        lp.clear();
        mark[p] = step;
        for &i in &var_adj[p] {
            if status[i] == Status::Variable && mark[i] != step {
                mark[i] = step;
                lp.push(i);
            }
        }
        let absorbed = std::mem::take(&mut elem_adj[p]);
        for &e in &absorbed {
            if status[e] != Status::Element {
                continue;
            }
            for &i in &elem_vars[e] {
                if status[i] == Status::Variable && mark[i] != step {
                    mark[i] = step;
                    lp.push(i);
                }
            }
            status[e] = Status::Absorbed;
            elem_vars[e] = Vec::new();
        }
        status[p] = Status::Element;
        var_adj[p] = Vec::new();
        let lp_weight: usize = lp.iter().map(|&i| nv[i]).sum();

        for &i in &lp {
            elem_adj[i].retain(|&e| status[e] == Status::Element);
            elem_adj[i].push(p);
            var_adj[i].retain(|&j| status[j] == Status::Variable && mark[j] != step);
        }

        // w(e) = |Le \ Lp| for the other elements touching Lp
        for &i in &lp {
            for &e in &elem_adj[i] {
                if e == p {
                    continue;
                }
                if wstamp[e] != step {
                    wstamp[e] = step;
                    elem_vars[e].retain(|&j| status[j] == Status::Variable);
                    w[e] = elem_vars[e].iter().map(|&j| nv[j]).sum();
                }
                w[e] -= nv[i];
            }
        }
        for &i in &lp {
            let mut ext = 0;
            for &e in &elem_adj[i] {
                if e != p && status[e] == Status::Element {
                    if w[e] == 0 {
                        // every variable of e is in Lp: p covers it
                        status[e] = Status::Absorbed;
                        elem_vars[e] = Vec::new();
                    } else {
                        ext += w[e];
                    }
                }
            }
            let a_i: usize = var_adj[i].iter().map(|&j| nv[j]).sum();
            let others = lp_weight - nv[i];
            let bound = a_i + others + ext;
            degree[i] = bound.min(degree[i] + others).min(remaining - nv[i]);
        }
        for &i in &lp {
            elem_adj[i].retain(|&e| status[e] == Status::Element);
        }

        merge_indistinguishable(&lp, &mut var_adj, &mut elem_adj, &mut status, &mut nv, &mut members, &mut degree);

        elem_vars[p] = lp.iter().copied().filter(|&i| status[i] == Status::Variable).collect();
        for &i in &elem_vars[p] {
            heap.push(Reverse((degree[i], i)));
        }
    }
    order.extend(dense_nodes);
    debug_assert_eq!(order.len(), n);
    order
}

fn emit(p: usize, members: &[Vec<usize>], order: &mut Vec<usize>) {
    let mut stack = vec![p];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(members[v].iter().rev());
    }
}

/// Merges variables of `lp` with identical adjacency into supervariables.
fn merge_indistinguishable(
    lp: &[usize],
    var_adj: &mut [Vec<usize>],
    elem_adj: &mut [Vec<usize>],
    status: &mut [Status],
    nv: &mut [usize],
    members: &mut [Vec<usize>],
    degree: &mut [usize],
) {
    let mut buckets: HashMap<(usize, usize, usize), Vec<usize>> = HashMap::new();
    for &i in lp {
        let h = var_adj[i].iter().chain(&elem_adj[i]).fold(0usize, |h, &x| h.wrapping_add(x));
        buckets.entry((h, var_adj[i].len(), elem_adj[i].len())).or_default().push(i);
    }
    for (_, group) in buckets {
        if group.len() < 2 {
            continue;
        }
        for g in &group {
            var_adj[*g].sort_unstable();
            elem_adj[*g].sort_unstable();
        }
        for a in 0..group.len() {
            let i = group[a];
            if status[i] != Status::Variable {
                continue;
            }
            for &j in &group[a + 1..] {
                if status[j] == Status::Variable && var_adj[i] == var_adj[j] && elem_adj[i] == elem_adj[j] {
                    nv[i] += nv[j];
                    degree[i] = degree[i].saturating_sub(nv[j]);
                    nv[j] = 0;
                    status[j] = Status::Merged;
                    members[i].push(j);
                    var_adj[j] = Vec::new();
                    elem_adj[j] = Vec::new();
                }
            }
        }
    }
}

/// Inverse permutation.
pub fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (k, &i) in p.iter().enumerate() {
        inv[i] = k;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn is_permutation(p: &[usize]) -> bool {
        let mut seen = vec![false; p.len()];
        p.iter().all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
    }

    fn grid_laplacian(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut t = TripletBuilder::new(n, n);
        for y in 0..m {
            for x in 0..m {
                let i = y * m + x;
                t.push(i, i, 4.0);
                if x + 1 < m {
                    t.push(i, i + 1, -1.0);
                    t.push(i + 1, i, -1.0);
                }
                if y + 1 < m {
                    t.push(i, i + m, -1.0);
                    t.push(i + m, i, -1.0);
                }
            }
        }
        t.build()
    }

    /// Nonzeros of the Cholesky factor of the permuted pattern (symbolic).
    fn fill(a: &CsrMatrix, perm: &[usize]) -> usize {
        let n = a.nrows();
        let inv = invert_permutation(perm);
        let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
        for (i, j, _) in a.iter() {
            if i != j {
                adj[inv[i]].insert(inv[j]);
            }
        }
        let mut total = 0;
        for k in 0..n {
            let higher: Vec<usize> = adj[k].iter().copied().filter(|&j| j > k).collect();
            total += higher.len();
            for &a1 in &higher {
                for &b1 in &higher {
                    if a1 != b1 {
                        adj[a1].insert(b1);
                    }
                }
            }
        }
        total
    }

    #[test]
    fn ordering_is_a_permutation_and_reduces_fill() {
        let a = grid_laplacian(30);
        let p = amd(&a);
        assert!(is_permutation(&p));
        let natural: Vec<usize> = (0..a.nrows()).collect();
        let f_amd = fill(&a, &p);
        let f_nat = fill(&a, &natural);
        assert!(f_amd * 2 < f_nat, "amd fill {f_amd} vs natural {f_nat}");
    }

    #[test]
    fn dense_rows_go_last() {
        let m = 20;
        let base = grid_laplacian(m);
        let n = m * m + 1;
        let mut t = TripletBuilder::new(n, n);
        t.push_block(0, 0, &base);
        for i in 0..m * m {
            t.push(i, n - 1, 1.0);
            t.push(n - 1, i, 1.0);
        }
        let p = amd(&t.build());
        assert!(is_permutation(&p));
        assert_eq!(*p.last().unwrap(), n - 1);
    }

    #[test]
    fn handles_trivial_patterns() {
        assert_eq!(amd(&CsrMatrix::identity(3)).len(), 3);
        assert!(amd(&CsrMatrix::zeros(0, 0)).is_empty());
    }
}
