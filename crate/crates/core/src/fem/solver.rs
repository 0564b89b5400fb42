//! Sparse LU factorization without pivoting, specialised for structurally
//! symmetric finite-element systems.
//!
//! The saddle-point systems produced by the mini element factor stably
//! without pivoting when the bubbles are eliminated first and each vertex
//! keeps its velocity dofs ahead of its pressure dof: the pressure pivots then
//! accumulate the positive Schur complement contributions B A⁻¹ Bᵀ.

use super::dofmap::DofMap;
use super::sparse::Csr;
use crate::error::{Error, Result};
use alloc::collections::BinaryHeap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Reverse;

const NONE: usize = usize::MAX;

/// Minimum-degree ordering of an undirected graph given as adjacency lists
/// (self loops ignored). Returns the elimination order.
pub fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut g: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut v: Vec<usize> = a.iter().copied().filter(|&j| j != i).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut done = alloc::vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((g[i].len(), i))).collect();
    let mut order = Vec::with_capacity(n);
    let mut scratch = Vec::new();
    while let Some(Reverse((d, p))) = heap.pop() {
        if done[p] || d != g[p].len() {
            continue;
        }
        done[p] = true;
        order.push(p);
        let nbrs = core::mem::take(&mut g[p]);
        for &a in &nbrs {
            scratch.clear();
            let (x, y) = (&g[a], &nbrs);
            let (mut i, mut j) = (0, 0);
            while i < x.len() || j < y.len() {
                let next = if j >= y.len() || (i < x.len() && x[i] <= y[j]) {
                    let v = x[i];
                    i += 1;
                    if j < y.len() && y[j] == v {
                        j += 1;
                    }
                    v
                } else {
                    let v = y[j];
                    j += 1;
                    v
                };
                if next != a && next != p {
                    scratch.push(next);
                }
            }
            core::mem::swap(&mut g[a], &mut scratch);
            heap.push(Reverse((g[a].len(), a)));
        }
    }
    order
}

/// Elimination order for the coupled velocity–pressure system: all bubble
/// dofs first, then vertices in minimum-degree order, each vertex as
/// [vx, vy, p].
pub fn saddle_order(dofmap: &DofMap, triangles: &[[usize; 3]]) -> Vec<usize> {
    let nv = dofmap.n_vertices;
    let mut adj = alloc::vec![Vec::new(); nv];
    for t in triangles {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    adj[t[a]].push(t[b]);
                }
            }
        }
    }
    let vorder = minimum_degree(&adj);
    let mut order = Vec::with_capacity(dofmap.n_total());
    for e in 0..dofmap.n_triangles {
        order.push(dofmap.vel(0, dofmap.bubble(e)));
        order.push(dofmap.vel(1, dofmap.bubble(e)));
    }
    for &v in &vorder {
        order.push(dofmap.vel(0, v));
        order.push(dofmap.vel(1, v));
        order.push(dofmap.pres(v));
    }
    order
}

/// Minimum-degree order on the full pattern of a square matrix. Rows with a
/// zero diagonal (pressure rows of a saddle-point system) are postponed until
/// all of their neighbours are eliminated, so their pivot has picked up the
/// Schur-complement fill.
pub fn pattern_order(a: &Csr) -> Vec<usize> {
    let n = a.n_rows;
    let mut adj = alloc::vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let order = minimum_degree(&adj);
    let mut pos = alloc::vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut key: Vec<(usize, usize, usize)> = order
        .iter()
        .map(|&v| {
            if a.get(v, v) == 0.0 {
                let last = adj[v].iter().map(|&u| pos[u]).max().unwrap_or(0).max(pos[v]);
                (last, 1, v)
            } else {
                (pos[v], 0, v)
            }
        })
        .collect();
    key.sort_unstable();
    key.into_iter().map(|(_, _, v)| v).collect()
}

/// Symbolic factorization: permutation plus the patterns of L and U.
#[derive(Debug, Clone)]
pub struct Symbolic {
    pub n: usize,
    /// `perm[new] = old`.
    pub perm: Vec<usize>,
    /// For each permuted row: (position in the source CSR values, permuted column).
    scatter: Vec<Vec<(usize, usize)>>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    /// U rows store the diagonal first, then strictly upper columns ascending.
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    pattern_ptr: Vec<usize>,
    pattern_idx: Vec<usize>,
}

impl Symbolic {
    /// Analyse the pattern of `a` (symmetrised) under elimination order `perm`.
    pub fn new(a: &Csr, perm: Vec<usize>) -> Result<Self> {
        let n = a.n_rows;
        if a.n_cols != n || perm.len() != n {
            return Err(Error::Input(alloc::format!(
                "symbolic analysis needs a square matrix and a full permutation ({}x{}, perm {})",
                a.n_rows,
                a.n_cols,
                perm.len()
            )));
        }
        let mut iperm = alloc::vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || iperm[old] != NONE {
                return Err(Error::Input("ordering is not a permutation".into()));
            }
            iperm[old] = new;
        }
        // Symmetrised permuted pattern, lower part only, plus the scatter map.
        let mut lower: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        let mut scatter: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); n];
        for i in 0..n {
            let pi = iperm[i];
            let lo = a.indptr[i];
            for (k, &j) in a.row(i).0.iter().enumerate() {
                let pj = iperm[j];
                scatter[pi].push((lo + k, pj));
                if pj < pi {
                    lower[pi].push(pj);
                } else if pj > pi {
                    lower[pj].push(pi);
                }
            }
        }
        for r in &mut lower {
            r.sort_unstable();
            r.dedup();
        }
        // Elimination tree.
        let mut parent = alloc::vec![NONE; n];
        let mut ancestor = alloc::vec![NONE; n];
        for i in 0..n {
            for &j in &lower[i] {
                let mut r = j;
                while ancestor[r] != NONE && ancestor[r] != i {
                    let next = ancestor[r];
                    ancestor[r] = i;
                    r = next;
                }
                if ancestor[r] == NONE {
                    ancestor[r] = i;
                    parent[r] = i;
                }
            }
        }
        // Row patterns of L via the elimination-tree reach.
        let mut mark = alloc::vec![NONE; n];
        let mut l_ptr = Vec::with_capacity(n + 1);
        l_ptr.push(0);
        let mut l_idx = Vec::new();
        let mut ucount = alloc::vec![1usize; n];
        for i in 0..n {
            mark[i] = i;
            let start = l_idx.len();
            for &j in &lower[i] {
                let mut r = j;
                while mark[r] != i {
                    mark[r] = i;
                    l_idx.push(r);
                    ucount[r] += 1;
                    r = parent[r];
                    if r == NONE {
                        break;
                    }
                }
            }
            l_idx[start..].sort_unstable();
            l_ptr.push(l_idx.len());
        }
        // U rows are the transpose of the L pattern.
        let mut u_ptr = Vec::with_capacity(n + 1);
        u_ptr.push(0);
        for i in 0..n {
            u_ptr.push(u_ptr[i] + ucount[i]);
        }
        let mut fill = u_ptr.clone();
        let mut u_idx = alloc::vec![0; u_ptr[n]];
        for i in 0..n {
            u_idx[fill[i]] = i;
            fill[i] += 1;
        }
        for i in 0..n {
            for &j in &l_idx[l_ptr[i]..l_ptr[i + 1]] {
                u_idx[fill[j]] = i;
                fill[j] += 1;
            }
        }
        Ok(Symbolic {
            n,
            perm,
            scatter,
            l_ptr,
            l_idx,
            u_ptr,
            u_idx,
            pattern_ptr: a.indptr.clone(),
            pattern_idx: a.indices.clone(),
        })
    }

    /// Analyse with a minimum-degree ordering of the full pattern.
    pub fn min_degree(a: &Csr) -> Result<Self> {
        Self::new(a, pattern_order(a))
    }

    /// Whether `a` has exactly the pattern this analysis was built for.
    pub fn matches(&self, a: &Csr) -> bool {
        a.n_rows == self.n && a.indptr == self.pattern_ptr && a.indices == self.pattern_idx
    }

    /// Stored entries of L plus U.
    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }
}

/// Numeric LU factors sharing a symbolic analysis.
#[derive(Debug, Clone)]
pub struct SparseLu {
    sym: Arc<Symbolic>,
    l_val: Vec<f64>,
    u_val: Vec<f64>,
}

impl SparseLu {
    pub fn factor(sym: Arc<Symbolic>, a: &Csr) -> Result<Self> {
        if !sym.matches(a) {
            return Err(Error::Input("matrix pattern differs from the symbolic analysis".into()));
        }
        let n = sym.n;
        let mut l_val = alloc::vec![0.0; sym.l_idx.len()];
        let mut u_val = alloc::vec![0.0; sym.u_idx.len()];
        let mut x = alloc::vec![0.0; n];
        for i in 0..n {
            let mut row_scale: f64 = 0.0;
            for &(k, j) in &sym.scatter[i] {
                x[j] += a.values[k];
                row_scale = row_scale.max(a.values[k].abs());
            }
            for p in sym.l_ptr[i]..sym.l_ptr[i + 1] {
                let j = sym.l_idx[p];
                let lij = x[j] / u_val[sym.u_ptr[j]];
                x[j] = 0.0;
                l_val[p] = lij;
                if lij != 0.0 {
                    for q in sym.u_ptr[j] + 1..sym.u_ptr[j + 1] {
                        x[sym.u_idx[q]] -= lij * u_val[q];
                    }
                }
            }
            for q in sym.u_ptr[i]..sym.u_ptr[i + 1] {
                let k = sym.u_idx[q];
                u_val[q] = x[k];
                x[k] = 0.0;
            }
            let piv = u_val[sym.u_ptr[i]];
            if !piv.is_finite() || piv.abs() <= 1e-14 * row_scale.max(f64::MIN_POSITIVE) {
                return Err(Error::ZeroPivot { row: sym.perm[i], pivot: piv.abs() });
            }
        }
        Ok(SparseLu { sym, l_val, u_val })
    }

    pub fn symbolic(&self) -> &Arc<Symbolic> {
        &self.sym
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let s = &*self.sym;
        let n = s.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[s.perm[i]]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for p in s.l_ptr[i]..s.l_ptr[i + 1] {
                acc -= self.l_val[p] * y[s.l_idx[p]];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            let d = s.u_ptr[i];
            for q in d + 1..s.u_ptr[i + 1] {
                acc -= self.u_val[q] * y[s.u_idx[q]];
            }
            y[i] = acc / self.u_val[d];
        }
        let mut x = alloc::vec![0.0; n];
        for i in 0..n {
            x[s.perm[i]] = y[i];
        }
        x
    }

    /// Solve with iterative refinement; returns the solution and its final
    /// relative residual ‖b − Ax‖ / ‖b‖.
    pub fn solve_refined(&self, a: &Csr, b: &[f64], tol: f64) -> (Vec<f64>, f64) {
        let bn = norm(b);
        if bn == 0.0 {
            return (alloc::vec![0.0; b.len()], 0.0);
        }
        let mut x = self.solve(b);
        let mut rel = f64::INFINITY;
        for _ in 0..6 {
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let new_rel = norm(&r) / bn;
            if new_rel <= tol || new_rel >= 0.5 * rel {
                rel = rel.min(new_rel);
                break;
            }
            rel = new_rel;
            let dx = self.solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
        }
        (x, rel)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    num_traits::Float::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

/// An assembled square system with its Dirichlet constraints.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    /// Constrained dofs; after [`SparseSystem::apply_dirichlet`] their rows
    /// and columns are identity.
    pub dirichlet: Vec<usize>,
}

impl SparseSystem {
    pub fn new(matrix: Csr, rhs: Vec<f64>) -> Self {
        SparseSystem { matrix, rhs, dirichlet: Vec::new() }
    }

    /// Impose x_d = g_d by symmetric row and column elimination. The sparsity
    /// pattern is left unchanged (eliminated entries become stored zeros), so
    /// every constrained row must store its diagonal.
    pub fn apply_dirichlet(&mut self, dofs: &[usize], values: &[f64]) {
        let n = self.matrix.n_rows;
        let mut g = alloc::vec![None; n];
        for (&d, &v) in dofs.iter().zip(values) {
            g[d] = Some(v);
        }
        let a = &mut self.matrix;
        for i in 0..n {
            let (lo, hi) = (a.indptr[i], a.indptr[i + 1]);
            if let Some(gi) = g[i] {
                for k in lo..hi {
                    a.values[k] = if a.indices[k] == i { 1.0 } else { 0.0 };
                }
                self.rhs[i] = gi;
            } else {
                for k in lo..hi {
                    if let Some(gj) = g[a.indices[k]] {
                        self.rhs[i] -= a.values[k] * gj;
                        a.values[k] = 0.0;
                    }
                }
            }
        }
        self.dirichlet.extend_from_slice(dofs);
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r: Vec<f64> = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        norm(&r)
    }
}

/// Factor and solve a constrained system. Uses a minimum-degree ordering of
/// the whole pattern; the time stepper reuses its own cached analysis instead.
pub fn solve_saddle(system: &SparseSystem) -> Result<Vec<f64>> {
    let sym = Arc::new(Symbolic::min_degree(&system.matrix)?);
    let lu = SparseLu::factor(sym, &system.matrix)?;
    let (x, rel) = lu.solve_refined(&system.matrix, &system.rhs, 1e-10);
    if rel > 1e-10 {
        return Err(Error::Geometry(alloc::format!(
            "linear solve stalled at relative residual {rel:e}"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sparse::Triplets;

    fn dense_to_csr(a: &[&[f64]]) -> Csr {
        let n = a.len();
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            for j in 0..n {
                if a[i][j] != 0.0 {
                    t.push(i, j, a[i][j]);
                }
            }
        }
        t.to_csr()
    }

    #[test]
    fn identity_returns_rhs() {
        let s = SparseSystem::new(Csr::identity(4), alloc::vec![1.0, -2.0, 3.0, 0.5]);
        assert_eq!(solve_saddle(&s).unwrap(), [1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn two_by_two_saddle_toy() {
        // [[2, -1], [1, 0]] x = [1, 3]  →  x = (3, 5).
        let a = dense_to_csr(&[&[2.0, -1.0], &[1.0, 0.0]]);
        let x = solve_saddle(&SparseSystem::new(a, alloc::vec![1.0, 3.0])).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn zero_pivot_reports_row() {
        let a = dense_to_csr(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        let sym = Arc::new(Symbolic::new(&a, alloc::vec![0, 1, 2]).unwrap());
        match SparseLu::factor(sym, &a) {
            Err(Error::ZeroPivot { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected zero pivot, got {other:?}"),
        }
    }

    #[test]
    fn dirichlet_elimination_is_symmetric() {
        let a = dense_to_csr(&[&[4.0, 1.0, 0.0], &[1.0, 4.0, 1.0], &[0.0, 1.0, 4.0]]);
        let mut s = SparseSystem::new(a, alloc::vec![1.0, 2.0, 3.0]);
        s.apply_dirichlet(&[1], &[0.5]);
        assert!(s.matrix.asymmetry() == 0.0);
        assert_eq!(s.matrix.get(1, 1), 1.0);
        assert_eq!(s.rhs, [0.5, 0.5, 2.5]);
        let x = solve_saddle(&s).unwrap();
        assert!((x[1] - 0.5).abs() < 1e-15);
        assert!((4.0 * x[0] + 0.5 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_dense_elimination_on_random_diagonally_dominant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let mut t = Triplets::new(n, n);
        let mut dense = alloc::vec![alloc::vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = 10.0;
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    dense[i][j] += rng.gen_range(-1.0..1.0);
                    dense[j][i] += rng.gen_range(-1.0..1.0);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if dense[i][j] != 0.0 {
                    t.push(i, j, dense[i][j]);
                }
            }
        }
        let a = t.to_csr();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_saddle(&SparseSystem::new(a, b.clone())).unwrap();
        for i in 0..n {
            let r: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn minimum_degree_is_a_permutation() {
        let adj = alloc::vec![
            alloc::vec![1, 2, 3],
            alloc::vec![0],
            alloc::vec![0],
            alloc::vec![0, 4],
            alloc::vec![3]
        ];
        let mut o = minimum_degree(&adj);
        assert_eq!(o[0], 1);
        o.sort();
        assert_eq!(o, [0, 1, 2, 3, 4]);
    }
}
