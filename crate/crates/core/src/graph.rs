//! Immutable undirected weighted graphs in compressed sparse row form.
//!
//! Edges are stored once in canonical order (`u <= v`, sorted by `(u, v)`);
//! every per-edge artifact in the crate (distances, caches) is indexed by
//! that order. The adjacency is stored in both directions so that row-wise
//! kernels such as `D^{-1/2} A D^{-1/2} x` touch each row once.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::matrix::FeatureMatrix;
use crate::{Error, Result};

/// Rows above this count are processed with rayon; the per-row reduction
/// order is fixed so results do not depend on the thread count.
const PAR_ROWS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    /// Canonical edge index of each CSR slot.
    slot_edges: Vec<usize>,
    degrees: Vec<f64>,
    inv_sqrt_deg: Vec<f64>,
    self_loops: bool,
    merged_duplicates: usize,
}

/// Builds a canonical undirected graph.
///
/// Reversed duplicates `(v, u)` of an existing `(u, v)` with the same weight
/// are merged (directed input is symmetrized); the count is available from
/// [`Graph::merged_duplicates`]. With `add_self_loops`, every node gets a
/// unit self-loop, which is the GCN-style `A + I` patch for isolated nodes.
pub fn build_graph(
    edge_list: &[(usize, usize, f64)],
    n: usize,
    add_self_loops: bool,
) -> Result<Graph> {
    let mut canon: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut merged = 0;
    for &(a, b, w) in edge_list {
        if a >= n || b >= n {
            return Err(Error::NodeOutOfRange { u: a, v: b, n });
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidWeight { u: a, v: b, w });
        }
        if a == b && !add_self_loops {
            return Err(Error::InvalidParameter(format!(
                "self-loop ({a},{a}) given without the self-loop flag"
            )));
        }
        let key = (a.min(b), a.max(b));
        match canon.get(&key) {
            Some(&w0) if w0 != w => {
                return Err(Error::ConflictingEdge {
                    u: key.0,
                    v: key.1,
                    w1: w0,
                    w2: w,
                })
            }
            Some(_) => merged += 1,
            None => {
                canon.insert(key, w);
            }
        }
    }
    if add_self_loops {
        for i in 0..n {
            canon.entry((i, i)).or_insert(1.0);
        }
    }
    let edges: Vec<Edge> = canon
        .into_iter()
        .map(|((u, v), w)| Edge { u, v, w })
        .collect();

    let mut counts = vec![0usize; n];
    for e in &edges {
        counts[e.u] += 1;
        if e.u != e.v {
            counts[e.v] += 1;
        }
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::IsolatedNode(i));
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + counts[i];
    }
    let nnz = offsets[n];
    let mut targets = vec![0usize; nnz];
    let mut weights = vec![0.0; nnz];
    let mut slot_edges = vec![0usize; nnz];
    let mut fill = offsets.clone();
    let mut push = |i: usize, j: usize, w: f64, idx: usize, fill: &mut Vec<usize>| {
        targets[fill[i]] = j;
        weights[fill[i]] = w;
        slot_edges[fill[i]] = idx;
        fill[i] += 1;
    };
    for (idx, e) in edges.iter().enumerate() {
        push(e.u, e.v, e.w, idx, &mut fill);
    }
    for (idx, e) in edges.iter().enumerate() {
        if e.u != e.v {
            push(e.v, e.u, e.w, idx, &mut fill);
        }
    }
    // Lower-triangle entries were appended after the upper ones; sort each row.
    for i in 0..n {
        let (s, t) = (offsets[i], offsets[i + 1]);
        let mut row: Vec<(usize, f64, usize)> = (s..t)
            .map(|k| (targets[k], weights[k], slot_edges[k]))
            .collect();
        row.sort_by_key(|&(j, _, _)| j);
        for (k, (j, w, idx)) in (s..t).zip(row) {
            targets[k] = j;
            weights[k] = w;
            slot_edges[k] = idx;
        }
    }
    let degrees: Vec<f64> = (0..n)
        .map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum())
        .collect();
    let inv_sqrt_deg = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(Graph {
        n,
        edges,
        offsets,
        targets,
        weights,
        slot_edges,
        degrees,
        inv_sqrt_deg,
        self_loops: add_self_loops,
        merged_duplicates: merged,
    })
}

impl Graph {
    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of stored (undirected) edges, self-loops included.
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    #[inline]
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    #[inline]
    pub fn inv_sqrt_degrees(&self) -> &[f64] {
        &self.inv_sqrt_deg
    }

    pub fn min_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn merged_duplicates(&self) -> usize {
        self.merged_duplicates
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    /// `(neighbor, weight)` pairs of node `i`, sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// `(neighbor, weight, canonical edge index)` triples of node `i`.
    pub fn incident_edges(&self, i: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r.clone()])
            .zip(&self.slot_edges[r])
            .map(|((&j, &w), &e)| (j, w, e))
    }

    pub fn neighbor_ids(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Index of edge `(u, v)` in canonical order.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&key)).ok()
    }

    pub fn edge_list(&self) -> Vec<(usize, usize, f64)> {
        self.edges.iter().map(|e| (e.u, e.v, e.w)).collect()
    }

    pub fn is_regular(&self) -> bool {
        let d0 = self.degrees[0];
        self.degrees
            .iter()
            .all(|&d| (d - d0).abs() <= 1e-12 * d0.max(1.0))
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Component id per node (BFS order).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &y in self.neighbor_ids(x) {
                    if comp[y] == usize::MAX {
                        comp[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Two-coloring test; self-loops make a graph non-bipartite.
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![u8::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        for s in 0..self.n {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                for &y in self.neighbor_ids(x) {
                    if color[y] == u8::MAX {
                        color[y] = 1 - color[x];
                        queue.push_back(y);
                    } else if color[y] == color[x] {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                what: "vector length",
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    #[inline]
    fn adj_row(&self, i: usize, x: &[f64]) -> f64 {
        let s = self.inv_sqrt_deg[i];
        let r = self.offsets[i]..self.offsets[i + 1];
        let mut acc = 0.0;
        for (&j, &w) in self.targets[r.clone()].iter().zip(&self.weights[r]) {
            acc += w * self.inv_sqrt_deg[j] * x[j];
        }
        s * acc
    }

    /// `y = Â x` with `Â = D^{-1/2} A D^{-1/2}`, without materializing `Â`.
    pub fn norm_adjacency_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; self.n];
        self.norm_adjacency_into(x, &mut y);
        Ok(y)
    }

    /// `y = (I - Â) x`.
    pub fn norm_laplacian_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; self.n];
        self.norm_adjacency_into(x, &mut y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - *yi;
        }
        Ok(y)
    }

    pub(crate) fn norm_adjacency_into(&self, x: &[f64], y: &mut [f64]) {
        if self.n >= PAR_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.adj_row(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.adj_row(i, x);
            }
        }
    }

    /// `Â H` for a dense feature block.
    pub fn norm_adjacency_matmul(&self, h: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_len(h.rows())?;
        let d = h.cols();
        let mut out = FeatureMatrix::zeros(self.n, d);
        let row = |i: usize, orow: &mut [f64]| {
            let s = self.inv_sqrt_deg[i];
            for (j, w) in self.neighbors(i) {
                let c = s * w * self.inv_sqrt_deg[j];
                for (o, hv) in orow.iter_mut().zip(h.row(j)) {
                    *o += c * hv;
                }
            }
        };
        if self.n >= PAR_ROWS && d > 0 {
            out.as_mut_slice()
                .par_chunks_mut(d)
                .enumerate()
                .for_each(|(i, orow)| row(i, orow));
        } else if d > 0 {
            for (i, orow) in out.as_mut_slice().chunks_mut(d).enumerate() {
                row(i, orow);
            }
        }
        Ok(out)
    }

    /// Dense weighted adjacency `A`.
    pub fn dense_adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                a[(i, j)] = w;
            }
        }
        a
    }

    /// Dense `Â = D^{-1/2} A D^{-1/2}`.
    pub fn dense_norm_adjacency(&self) -> DMatrix<f64> {
        let mut a = self.dense_adjacency();
        for i in 0..self.n {
            for j in 0..self.n {
                a[(i, j)] *= self.inv_sqrt_deg[i] * self.inv_sqrt_deg[j];
            }
        }
        a
    }

    /// Dense random-walk matrix `P = D^{-1} A`.
    pub fn dense_transition(&self) -> DMatrix<f64> {
        let mut a = self.dense_adjacency();
        for i in 0..self.n {
            let inv = 1.0 / self.degrees[i];
            for j in 0..self.n {
                a[(i, j)] *= inv;
            }
        }
        a
    }

    /// Dense combinatorial Laplacian `L = D - A`.
    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.dense_adjacency();
        for i in 0..self.n {
            l[(i, i)] += self.degrees[i];
        }
        l
    }

    /// Relabels nodes so that node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| (perm[e.u], perm[e.v], e.w))
            .collect();
        build_graph(&edges, self.n, self.self_loops)
    }
}

/// Graph plus a class index per node.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: Graph,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledGraph {
    pub fn new(graph: Graph, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != graph.node_count() {
            return Err(Error::DimensionMismatch {
                what: "labels",
                expected: graph.node_count(),
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            graph,
            labels,
            num_classes,
        })
    }

    /// Infers the class count as `max(label) + 1`.
    pub fn from_labels(graph: Graph, labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().copied().max().map_or(0, |m| m + 1);
        Self::new(graph, labels, c)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Indicator matrix `Y` (`n x |Y|`).
    pub fn one_hot(&self) -> FeatureMatrix {
        FeatureMatrix::from_fn(self.labels.len(), self.num_classes, |i, k| {
            if self.labels[i] == k {
                1.0
            } else {
                0.0
            }
        })
    }
}
