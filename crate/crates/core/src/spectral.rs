//! Exact and truncated eigendecompositions of `Â` and `L̂ = I - Â`.
//!
//! The truncated path is a Lanczos iteration with full reorthogonalization
//! and locking: each run works on the operator deflated against every pair
//! already accepted, so repeated eigenvalues are recovered one copy per run.
//! The search stops only once the best eigenvalue still unknown is separated
//! from the last retained one, which also moves the truncation boundary
//! outward over degenerate clusters.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::generators::{rng, Prng};
use crate::graph::Graph;
use crate::matrix::{dot, norm, FeatureMatrix};
use crate::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Eigenvalues closer than this across the truncation boundary are kept together.
pub const CLUSTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    NormAdjacency,
    NormLaplacian,
}

impl OperatorKind {
    pub fn apply(self, g: &Graph, x: &[f64], y: &mut [f64]) {
        g.norm_adjacency_into(x, y);
        if self == OperatorKind::NormLaplacian {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = xi - *yi;
            }
        }
    }

    pub fn dense(self, g: &Graph) -> DMatrix<f64> {
        let a = g.dense_norm_adjacency();
        match self {
            OperatorKind::NormAdjacency => a,
            OperatorKind::NormLaplacian => DMatrix::identity(g.node_count(), g.node_count()) - a,
        }
    }

    fn default_selection(self) -> Selection {
        match self {
            OperatorKind::NormAdjacency => Selection::LargestAlgebraic,
            OperatorKind::NormLaplacian => Selection::SmallestAlgebraic,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorKind::NormAdjacency => "adjacency",
            OperatorKind::NormLaplacian => "laplacian",
        })
    }
}

impl FromStr for OperatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(Self::NormAdjacency),
            "laplacian" => Ok(Self::NormLaplacian),
            _ => Err(Error::InvalidParameter(format!(
                "unknown operator kind {s:?}"
            ))),
        }
    }
}

/// Which end of the spectrum a truncated basis keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selection {
    LargestAbs,
    LargestAlgebraic,
    SmallestAlgebraic,
}

impl Selection {
    /// Sort key; retained eigenvalues have the largest keys.
    #[inline]
    pub fn key(self, lambda: f64) -> f64 {
        match self {
            Selection::LargestAbs => lambda.abs(),
            Selection::LargestAlgebraic => lambda,
            Selection::SmallestAlgebraic => -lambda,
        }
    }

    fn sides(self) -> &'static [f64] {
        match self {
            Selection::LargestAbs => &[1.0, -1.0],
            Selection::LargestAlgebraic => &[1.0],
            Selection::SmallestAlgebraic => &[-1.0],
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::LargestAbs => "largest-abs",
            Selection::LargestAlgebraic => "largest",
            Selection::SmallestAlgebraic => "smallest",
        })
    }
}

impl FromStr for Selection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "largest-abs" => Ok(Self::LargestAbs),
            "largest" => Ok(Self::LargestAlgebraic),
            "smallest" => Ok(Self::SmallestAlgebraic),
            _ => Err(Error::InvalidParameter(format!("unknown selection {s:?}"))),
        }
    }
}

/// `κ` eigenpairs of `Â` or `L̂`, ordered by the selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub operator: OperatorKind,
    pub selection: Selection,
    /// κ asked for; `kappa()` may be larger after cluster adjustment.
    pub requested_kappa: usize,
    pub eigenvalues: Vec<f64>,
    /// `n x κ`, column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: FeatureMatrix,
    /// Start-vector seed for truncated bases; `None` for dense ones.
    pub seed: Option<u64>,
}

impl SpectralBasis {
    pub fn kappa(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn node_count(&self) -> usize {
        self.eigenvectors.rows()
    }

    pub fn was_adjusted(&self) -> bool {
        self.kappa() != self.requested_kappa
    }

    /// `‖M u_k − λ_k u_k‖₂` for every retained pair.
    pub fn residuals(&self, g: &Graph) -> Vec<f64> {
        let n = self.node_count();
        let mut y = vec![0.0; n];
        (0..self.kappa())
            .map(|k| {
                let u = self.eigenvectors.col_vec(k);
                self.operator.apply(g, &u, &mut y);
                let lam = self.eigenvalues[k];
                y.iter()
                    .zip(&u)
                    .map(|(a, b)| (a - lam * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// `max |U^T U − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.gram();
        let k = self.kappa();
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g.get(a, b) - target).abs());
            }
        }
        worst
    }

    /// Negates eigenvector column `k`.
    pub fn flip_sign(&mut self, k: usize) {
        for i in 0..self.node_count() {
            let v = self.eigenvectors.get(i, k);
            self.eigenvectors.set(i, k, -v);
        }
    }

    /// Reorders by `selection` and keeps the leading `kappa` pairs, extended
    /// over any cluster straddling the boundary.
    pub fn select(&self, selection: Selection, kappa: usize) -> Result<SpectralBasis> {
        if kappa == 0 || kappa > self.kappa() {
            return Err(Error::InvalidParameter(format!(
                "kappa={kappa} outside 1..={}",
                self.kappa()
            )));
        }
        let order = sorted_order(&self.eigenvalues, selection);
        let sorted: Vec<f64> = order.iter().map(|&k| self.eigenvalues[k]).collect();
        let kept = extend_over_cluster(&sorted, kappa, selection);
        let mut vecs = FeatureMatrix::zeros(self.node_count(), kept);
        for (dst, &src) in order.iter().take(kept).enumerate() {
            vecs.set_col(dst, &self.eigenvectors.col_vec(src));
        }
        Ok(SpectralBasis {
            operator: self.operator,
            selection,
            requested_kappa: kappa,
            eigenvalues: sorted[..kept].to_vec(),
            eigenvectors: vecs,
            seed: self.seed,
        })
    }
}

fn sorted_order(values: &[f64], selection: Selection) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        selection
            .key(values[b])
            .total_cmp(&selection.key(values[a]))
            .then(values[b].total_cmp(&values[a]))
    });
    order
}

/// Smallest `k >= kappa` such that entry `k` (if any) is separated from
/// entry `k - 1` by more than [`CLUSTER_TOL`] in key order.
fn extend_over_cluster(sorted: &[f64], kappa: usize, selection: Selection) -> usize {
    let mut k = kappa.min(sorted.len());
    while k < sorted.len() && selection.key(sorted[k - 1]) - selection.key(sorted[k]) < CLUSTER_TOL
    {
        k += 1;
    }
    k
}

/// Full eigendecomposition with the default dense cap.
pub fn eig_dense(g: &Graph, operator: OperatorKind) -> Result<SpectralBasis> {
    eig_dense_capped(g, operator, DEFAULT_DENSE_CAP)
}

/// Full eigendecomposition, sorted descending for `Â` and ascending for `L̂`.
pub fn eig_dense_capped(g: &Graph, operator: OperatorKind, cap: usize) -> Result<SpectralBasis> {
    let n = g.node_count();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let eig = SymmetricEigen::new(operator.dense(g));
    let selection = operator.default_selection();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = sorted_order(&values, selection);
    let mut vecs = FeatureMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        vecs.set_col(dst, &col);
    }
    Ok(SpectralBasis {
        operator,
        selection,
        requested_kappa: n,
        eigenvalues: order.iter().map(|&k| values[k]).collect(),
        eigenvectors: vecs,
        seed: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosConfig {
    /// Budget of operator applications across all runs.
    pub max_iters: usize,
    /// Residual tolerance `‖M u − λ u‖₂` for accepting a pair.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

struct Pair {
    value: f64,
    vector: Vec<f64>,
}

struct SignedOp<'a> {
    g: &'a Graph,
    kind: OperatorKind,
    sign: f64,
}

impl SignedOp<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.kind.apply(self.g, x, y);
        if self.sign < 0.0 {
            for v in y.iter_mut() {
                *v = -*v;
            }
        }
    }
}

struct Budget {
    left: usize,
    used: usize,
    worst_residual: f64,
}

impl Budget {
    fn spend(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::NoConvergence {
                iterations: self.used,
                worst_residual: self.worst_residual,
            });
        }
        self.left -= 1;
        self.used += 1;
        Ok(())
    }
}

fn orthogonalize(w: &mut [f64], against: &[&[f64]]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for v in against {
            let c = dot(v, w);
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi -= c * vi;
            }
        }
    }
}

fn random_unit(n: usize, against: &[&[f64]], rng: &mut Prng) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        orthogonalize(&mut v, against);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// One Lanczos run on `op` deflated against `locked`. Returns accepted pairs
/// from the top of the deflated spectrum, in decreasing signed order.
fn lanczos_run(
    op: &SignedOp<'_>,
    locked: &[&[f64]],
    want: usize,
    tol: f64,
    rng: &mut Prng,
    budget: &mut Budget,
) -> Result<Vec<Pair>> {
    let n = op.g.node_count();
    let free = n - locked.len();
    if free == 0 {
        return Ok(Vec::new());
    }
    // doubled on every restart, so tight clusters eventually get a full Krylov space
    let mut max_dim = free.min((3 * want + 40).max(60));
    let mut start = random_unit(n, locked, rng).ok_or(Error::NoConvergence {
        iterations: budget.used,
        worst_residual: f64::NAN,
    })?;
    let mut w = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    loop {
        let mut q: Vec<Vec<f64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        loop {
            let j = q.len() - 1;
            budget.spend()?;
            op.apply(&q[j], &mut w);
            let alpha = dot(&q[j], &w);
            for (wi, qi) in w.iter_mut().zip(&q[j]) {
                *wi -= alpha * qi;
            }
            if j > 0 {
                let b = betas[j - 1];
                for (wi, qi) in w.iter_mut().zip(&q[j - 1]) {
                    *wi -= b * qi;
                }
            }
            {
                let mut against: Vec<&[f64]> = locked.to_vec();
                against.extend(q.iter().map(Vec::as_slice));
                orthogonalize(&mut w, &against);
            }
            alphas.push(alpha);
            let beta = norm(&w);
            let dim = q.len();
            let invariant = beta <= 1e-12 || dim == free;
            let at_cap = dim >= max_dim;
            if !(invariant || at_cap || dim.is_multiple_of(5)) {
                betas.push(beta);
                q.push(w.iter().map(|x| x / beta).collect());
                continue;
            }

            let t = DMatrix::from_fn(dim, dim, |a, b| {
                if a == b {
                    alphas[a]
                } else if a + 1 == b {
                    betas[a]
                } else if b + 1 == a {
                    betas[b]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let coupling = if invariant { 0.0 } else { beta };
            let est = |k: usize| (coupling * eig.eigenvectors[(dim - 1, k)]).abs();
            let prefix = order.iter().take_while(|&&k| est(k) <= 0.1 * tol).count();

            if prefix >= want.min(dim) || invariant || at_cap {
                let mut accepted = Vec::new();
                for &k in order.iter().take(prefix.min(want)) {
                    let mut y = vec![0.0; n];
                    for (qi, s) in q.iter().zip(eig.eigenvectors.column(k).iter()) {
                        for (yv, qv) in y.iter_mut().zip(qi) {
                            *yv += s * qv;
                        }
                    }
                    orthogonalize(&mut y, locked);
                    let ny = norm(&y);
                    y.iter_mut().for_each(|v| *v /= ny);
                    budget.spend()?;
                    op.apply(&y, &mut scratch);
                    let theta = dot(&y, &scratch);
                    let res = scratch
                        .iter()
                        .zip(&y)
                        .map(|(a, b)| (a - theta * b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if res > tol {
                        budget.worst_residual = budget.worst_residual.max(res);
                        break;
                    }
                    accepted.push(Pair {
                        value: op.sign * theta,
                        vector: y,
                    });
                }
                if !accepted.is_empty() && (accepted.len() >= want.min(dim) || invariant || at_cap)
                {
                    return Ok(accepted);
                }
                if invariant || at_cap {
                    // restart from the leading Ritz directions
                    let lead = want.min(dim).max(1);
                    let mut y = vec![0.0; n];
                    for &k in order.iter().take(lead) {
                        for (qi, s) in q.iter().zip(eig.eigenvectors.column(k).iter()) {
                            for (yv, qv) in y.iter_mut().zip(qi) {
                                *yv += s * qv;
                            }
                        }
                    }
                    if let Some(&k) = order.first() {
                        budget.worst_residual = budget.worst_residual.max(est(k));
                    }
                    orthogonalize(&mut y, locked);
                    max_dim = free.min(2 * max_dim);
                    let ny = norm(&y);
                    start = if ny > 1e-8 {
                        y.iter().map(|v| v / ny).collect()
                    } else {
                        random_unit(n, locked, rng).ok_or(Error::NoConvergence {
                            iterations: budget.used,
                            worst_residual: budget.worst_residual,
                        })?
                    };
                    break;
                }
            }
            betas.push(beta);
            q.push(w.iter().map(|x| x / beta).collect());
        }
    }
}

/// κ extremal eigenpairs by Lanczos. `LargestAbs` searches both ends of the
/// spectrum and merges by `|λ|`.
pub fn eig_truncated(
    g: &Graph,
    operator: OperatorKind,
    selection: Selection,
    kappa: usize,
    cfg: &LanczosConfig,
) -> Result<SpectralBasis> {
    let n = g.node_count();
    if kappa == 0 || kappa > n {
        return Err(Error::InvalidParameter(format!(
            "kappa={kappa} outside 1..={n}"
        )));
    }
    let mut rng = rng(cfg.seed);
    let mut budget = Budget {
        left: cfg.max_iters,
        used: 0,
        worst_residual: 0.0,
    };
    let key = |v: f64| selection.key(v);
    let mut found: Vec<Pair> = Vec::new();

    loop {
        found.sort_by(|a, b| {
            key(b.value)
                .total_cmp(&key(a.value))
                .then(b.value.total_cmp(&a.value))
        });
        if found.len() == n {
            break;
        }
        let want = kappa.saturating_sub(found.len()) + 1;
        let mut bound = f64::NEG_INFINITY;
        let mut fresh: Vec<Pair> = Vec::new();
        for &sign in selection.sides() {
            let locked: Vec<&[f64]> = found
                .iter()
                .chain(fresh.iter())
                .map(|p| p.vector.as_slice())
                .collect();
            if locked.len() == n {
                break;
            }
            let op = SignedOp {
                g,
                kind: operator,
                sign,
            };
            let pairs = lanczos_run(&op, &locked, want, cfg.tol, &mut rng, &mut budget)?;
            if let Some(p) = pairs.first() {
                bound = bound.max(key(p.value));
            }
            fresh.extend(pairs);
        }
        if found.len() >= kappa {
            let values: Vec<f64> = found.iter().map(|p| p.value).collect();
            let kept = extend_over_cluster(&values, kappa, selection);
            if bound < key(values[kept - 1]) - CLUSTER_TOL {
                break;
            }
        }
        if fresh.is_empty() {
            return Err(Error::NoConvergence {
                iterations: budget.used,
                worst_residual: budget.worst_residual,
            });
        }
        found.extend(fresh);
    }

    let values: Vec<f64> = found.iter().map(|p| p.value).collect();
    let kept = extend_over_cluster(&values, kappa, selection);
    let mut vecs = FeatureMatrix::zeros(n, kept);
    for (k, p) in found.iter().take(kept).enumerate() {
        vecs.set_col(k, &p.vector);
    }
    Ok(SpectralBasis {
        operator,
        selection,
        requested_kappa: kappa,
        eigenvalues: values[..kept].to_vec(),
        eigenvectors: vecs,
        seed: Some(cfg.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cycle_graph, erdos_renyi_connected, path_graph};
    use crate::graph::build_graph;

    fn k2() -> Graph {
        build_graph(&[(0, 1, 1.0)], 2, false).unwrap()
    }

    #[test]
    fn dense_k2_adjacency() {
        let b = eig_dense(&k2(), OperatorKind::NormAdjacency).unwrap();
        assert!((b.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((b.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_path3_adjacency() {
        // characteristic polynomial of Â(P3) is λ(λ² − 1)
        let b = eig_dense(&path_graph(3).unwrap(), OperatorKind::NormAdjacency).unwrap();
        let expect = [1.0, 0.0, -1.0];
        for (a, e) in b.eigenvalues.iter().zip(expect) {
            assert!((a - e).abs() < 1e-14, "{a} vs {e}");
        }
    }

    #[test]
    fn laplacian_spectrum_is_shifted_adjacency() {
        let g = erdos_renyi_connected(20, 0.2, 3).unwrap();
        let a = eig_dense(&g, OperatorKind::NormAdjacency).unwrap();
        let l = eig_dense(&g, OperatorKind::NormLaplacian).unwrap();
        for (la, ll) in a.eigenvalues.iter().zip(&l.eigenvalues) {
            assert!((1.0 - la - ll).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let err =
            eig_dense_capped(&path_graph(10).unwrap(), OperatorKind::NormAdjacency, 5).unwrap_err();
        assert!(matches!(err, Error::DenseCapExceeded { n: 10, cap: 5 }));
    }

    #[test]
    fn truncated_k2_largest_abs() {
        let b = eig_truncated(
            &k2(),
            OperatorKind::NormAdjacency,
            Selection::LargestAbs,
            2,
            &LanczosConfig::default(),
        )
        .unwrap();
        let mut v = b.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        assert!((v[0] + 1.0).abs() < 1e-8 && (v[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn truncated_cycle8_smallest_laplacian() {
        // circulant spectrum of L̂(C8): 1 − cos(2πk/8)
        let g = cycle_graph(8).unwrap();
        let mut exact: Vec<f64> = (0..8)
            .map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / 8.0).cos())
            .collect();
        exact.sort_by(f64::total_cmp);
        let b = eig_truncated(
            &g,
            OperatorKind::NormLaplacian,
            Selection::SmallestAlgebraic,
            3,
            &LanczosConfig::default(),
        )
        .unwrap();
        // κ=3 cuts the double eigenvalue 1−cos(π/2)... boundary cluster is kept whole
        assert!(b.kappa() >= 3);
        for (k, lam) in b.eigenvalues.iter().enumerate() {
            assert!((lam - exact[k]).abs() < 1e-8, "{lam} vs {}", exact[k]);
        }
        for r in b.residuals(&g) {
            assert!(r < 1e-8);
        }
    }

    #[test]
    fn full_truncation_matches_dense() {
        for seed in 0..5 {
            let g = erdos_renyi_connected(30, 0.15, seed).unwrap();
            let d = eig_dense(&g, OperatorKind::NormAdjacency).unwrap();
            let t = eig_truncated(
                &g,
                OperatorKind::NormAdjacency,
                Selection::LargestAlgebraic,
                30,
                &LanczosConfig::default(),
            )
            .unwrap();
            for (a, b) in d.eigenvalues.iter().zip(&t.eigenvalues) {
                assert!((a - b).abs() < 1e-8);
            }
            assert!(t.orthonormality_error() < 1e-8);
        }
    }

    #[test]
    fn repeated_eigenvalues_are_found() {
        // K5: Â has eigenvalue −1/4 with multiplicity 4
        let g = crate::generators::complete_graph(5).unwrap();
        let t = eig_truncated(
            &g,
            OperatorKind::NormAdjacency,
            Selection::SmallestAlgebraic,
            2,
            &LanczosConfig::default(),
        )
        .unwrap();
        assert_eq!(t.kappa(), 4);
        assert!(t.was_adjusted());
        for lam in &t.eigenvalues {
            assert!((lam + 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn top_eigenvector_is_sqrt_degree_direction() {
        let g = erdos_renyi_connected(40, 0.2, 11).unwrap();
        let t = eig_truncated(
            &g,
            OperatorKind::NormAdjacency,
            Selection::LargestAlgebraic,
            1,
            &LanczosConfig::default(),
        )
        .unwrap();
        let two_m: f64 = g.degrees().iter().sum();
        let pi: Vec<f64> = g.degrees().iter().map(|d| (d / two_m).sqrt()).collect();
        let u = t.eigenvectors.col_vec(0);
        let s = dot(&u, &pi).signum();
        let err: f64 = u
            .iter()
            .zip(&pi)
            .map(|(a, b)| (s * a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((t.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!(err < 1e-8);
    }

    #[test]
    fn invalid_kappa() {
        let cfg = LanczosConfig::default();
        assert!(eig_truncated(
            &k2(),
            OperatorKind::NormAdjacency,
            Selection::LargestAbs,
            0,
            &cfg
        )
        .is_err());
        assert!(eig_truncated(
            &k2(),
            OperatorKind::NormAdjacency,
            Selection::LargestAbs,
            3,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn budget_exhaustion_reports_residual() {
        let g = erdos_renyi_connected(60, 0.1, 2).unwrap();
        let cfg = LanczosConfig {
            max_iters: 3,
            ..LanczosConfig::default()
        };
        let err = eig_truncated(
            &g,
            OperatorKind::NormAdjacency,
            Selection::LargestAbs,
            4,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }
}
