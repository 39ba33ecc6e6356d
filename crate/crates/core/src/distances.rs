//! Per-edge graph distances: the three diffusion distances (spectral and
//! exact series forms) and the baseline metrics they are compared against.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generators::rng;
use crate::graph::{build_graph, Graph};
use crate::matrix::FeatureMatrix;
use crate::spectral::{
    eig_dense_capped, eig_truncated, LanczosConfig, OperatorKind, Selection, SpectralBasis,
    DEFAULT_DENSE_CAP,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceKind {
    Vdd { t: u32 },
    Prdd { gamma: f64 },
    Hkdd { gamma: f64 },
    Spd,
    Jaccard,
    Resistance,
    Biharmonic,
    Zero,
}

pub const DEFAULT_PRDD_GAMMA: f64 = 0.9;
pub const DEFAULT_HKDD_GAMMA: f64 = 10.0;
pub const DEFAULT_VDD_T: u32 = 10;

impl DistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Vdd { .. } => "vdd",
            Self::Prdd { .. } => "prdd",
            Self::Hkdd { .. } => "hkdd",
            Self::Spd => "spd",
            Self::Jaccard => "jaccard",
            Self::Resistance => "resistance",
            Self::Biharmonic => "biharmonic",
            Self::Zero => "zero",
        }
    }

    /// `t=<t>`, `gamma=<γ>` or `none`.
    pub fn params(&self) -> String {
        match self {
            Self::Vdd { t } => format!("t={t}"),
            Self::Prdd { gamma } | Self::Hkdd { gamma } => format!("gamma={gamma}"),
            _ => "none".into(),
        }
    }

    /// Builds a kind from its name with optional `t` / `gamma`, falling back
    /// to the defaults (t=10, γ=0.9 for PRDD, γ=10 for HKDD).
    pub fn from_name(name: &str, t: Option<u32>, gamma: Option<f64>) -> Result<Self> {
        let k = match name.to_ascii_lowercase().as_str() {
            "vdd" => Self::Vdd {
                t: t.unwrap_or(DEFAULT_VDD_T),
            },
            "prdd" => Self::Prdd {
                gamma: gamma.unwrap_or(DEFAULT_PRDD_GAMMA),
            },
            "hkdd" => Self::Hkdd {
                gamma: gamma.unwrap_or(DEFAULT_HKDD_GAMMA),
            },
            "spd" => Self::Spd,
            "jaccard" => Self::Jaccard,
            "resistance" => Self::Resistance,
            "biharmonic" => Self::Biharmonic,
            "zero" => Self::Zero,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown distance kind {other:?}"
                )))
            }
        };
        k.validate()?;
        Ok(k)
    }

    /// Inverse of `name()` + `params()`.
    pub fn from_name_params(name: &str, params: &str) -> Result<Self> {
        let (mut t, mut gamma) = (None, None);
        if params != "none" {
            let (key, val) = params.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("bad distance params {params:?}"))
            })?;
            let bad = |_| Error::InvalidParameter(format!("bad distance params {params:?}"));
            match key {
                "t" => {
                    t = Some(
                        val.parse()
                            .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                    )
                }
                "gamma" => {
                    gamma = Some(
                        val.parse()
                            .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                    )
                }
                _ => return Err(bad(String::new())),
            }
        }
        Self::from_name(name, t, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Vdd { t: 0 } => Err(Error::InvalidParameter("VDD needs t >= 1".into())),
            Self::Prdd { gamma } if !(gamma > 0.0 && gamma < 1.0) => Err(Error::InvalidParameter(
                format!("PRDD gamma={gamma} must lie in (0, 1)"),
            )),
            Self::Hkdd { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::InvalidParameter(format!("HKDD gamma={gamma} must be positive")),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_diffusion(&self) -> bool {
        matches!(
            self,
            Self::Vdd { .. } | Self::Prdd { .. } | Self::Hkdd { .. }
        )
    }

    /// Operator and selection rule whose leading pairs give the best
    /// truncated approximation; `None` for baselines.
    pub fn spectral_requirements(&self) -> Option<(OperatorKind, Selection)> {
        match self {
            Self::Vdd { .. } => Some((OperatorKind::NormAdjacency, Selection::LargestAbs)),
            Self::Prdd { .. } => Some((OperatorKind::NormAdjacency, Selection::LargestAlgebraic)),
            Self::Hkdd { .. } => Some((OperatorKind::NormLaplacian, Selection::SmallestAlgebraic)),
            _ => None,
        }
    }

    /// Spectral filter `f(λ)`.
    pub fn filter(&self, lambda: f64) -> f64 {
        match *self {
            Self::Vdd { t } => lambda.powi(t as i32),
            Self::Prdd { gamma } => 1.0 / (1.0 - gamma * lambda),
            Self::Hkdd { gamma } => (-gamma * lambda).exp(),
            _ => 0.0,
        }
    }

    /// Truncation constant `ε = f(λ_κ)²` at the last retained eigenvalue.
    pub fn truncation_epsilon(&self, lambda_kappa: f64) -> f64 {
        self.filter(lambda_kappa).powi(2)
    }

    /// Range cap for exact values on `g`; `None` where no cap is asserted.
    pub fn range_cap(&self, g: &Graph) -> Option<f64> {
        let dmin = g.min_degree();
        let s2 = std::f64::consts::SQRT_2;
        match *self {
            Self::Vdd { .. } => Some(s2 / dmin),
            Self::Prdd { gamma } => Some(s2 / ((1.0 - gamma) * dmin)),
            Self::Hkdd { .. } => {
                let cap = s2 / dmin.sqrt();
                Some(if g.is_regular() { cap.min(s2) } else { cap })
            }
            Self::Jaccard => Some(1.0),
            _ => None,
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Vdd { t } => write!(f, "vdd(t={t})"),
            Self::Prdd { gamma } => write!(f, "prdd(gamma={gamma})"),
            Self::Hkdd { gamma } => write!(f, "hkdd(gamma={gamma})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaUsed {
    Truncated(usize),
    Exact,
}

impl fmt::Display for KappaUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Truncated(k) => write!(f, "{k}"),
            Self::Exact => f.write_str("exact"),
        }
    }
}

impl std::str::FromStr for KappaUsed {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Self::Exact);
        }
        s.parse()
            .map(Self::Truncated)
            .map_err(|_| Error::InvalidParameter(format!("bad kappa {s:?}")))
    }
}

/// One distance per canonical edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistances {
    pub kind: DistanceKind,
    pub kappa: KappaUsed,
    pub values: Vec<f64>,
}

impl EdgeDistances {
    pub fn zeros(g: &Graph) -> Self {
        Self {
            kind: DistanceKind::Zero,
            kappa: KappaUsed::Exact,
            values: vec![0.0; g.edge_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_aligned(&self, g: &Graph) -> Result<()> {
        if self.values.len() != g.edge_count() {
            return Err(Error::DimensionMismatch {
                what: "edge distances",
                expected: g.edge_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// Reindexes values onto the edge order of `g.permuted(perm)`.
    pub fn permuted(&self, g: &Graph, perm: &[usize]) -> Result<Self> {
        let pg = g.permuted(perm)?;
        let mut values = vec![0.0; self.values.len()];
        for (e, &v) in g.edges().iter().zip(&self.values) {
            let idx = pg
                .edge_index(perm[e.u], perm[e.v])
                .expect("permuted edge exists");
            values[idx] = v;
        }
        Ok(Self {
            kind: self.kind,
            kappa: self.kappa,
            values,
        })
    }
}

/// Rows `Z_i = U'_i f(Λ') / √d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEmbedding {
    pub kind: DistanceKind,
    pub kappa: usize,
    pub z: FeatureMatrix,
}

pub fn diffusion_embedding(
    g: &Graph,
    basis: &SpectralBasis,
    kind: DistanceKind,
) -> Result<DistanceEmbedding> {
    kind.validate()?;
    let (op, sel) = kind
        .spectral_requirements()
        .ok_or_else(|| Error::OperatorMismatch(format!("{kind} is not a diffusion distance")))?;
    if basis.operator != op {
        return Err(Error::OperatorMismatch(format!(
            "{kind} needs the {op} operator, basis holds {}",
            basis.operator
        )));
    }
    if basis.selection != sel {
        return Err(Error::OperatorMismatch(format!(
            "{kind} needs selection {sel}, basis was selected by {}",
            basis.selection
        )));
    }
    if basis.node_count() != g.node_count() {
        return Err(Error::DimensionMismatch {
            what: "basis rows",
            expected: g.node_count(),
            got: basis.node_count(),
        });
    }
    let scale: Vec<f64> = basis.eigenvalues.iter().map(|&l| kind.filter(l)).collect();
    let isd = g.inv_sqrt_degrees();
    let z = FeatureMatrix::from_fn(g.node_count(), basis.kappa(), |i, k| {
        basis.eigenvectors.get(i, k) * scale[k] * isd[i]
    });
    Ok(DistanceEmbedding {
        kind,
        kappa: basis.kappa(),
        z,
    })
}

fn row_distances(g: &Graph, z: &FeatureMatrix) -> Vec<f64> {
    g.edges()
        .par_iter()
        .map(|e| {
            z.row(e.u)
                .iter()
                .zip(z.row(e.v))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

pub fn edge_distances(g: &Graph, emb: &DistanceEmbedding) -> Result<EdgeDistances> {
    if emb.z.rows() != g.node_count() {
        return Err(Error::DimensionMismatch {
            what: "embedding rows",
            expected: g.node_count(),
            got: emb.z.rows(),
        });
    }
    Ok(EdgeDistances {
        kind: emb.kind,
        kappa: KappaUsed::Truncated(emb.kappa),
        values: row_distances(g, &emb.z),
    })
}

/// Truncated diffusion distances: Lanczos basis, embedding, per-edge norms.
pub fn truncated_distances(
    g: &Graph,
    kind: DistanceKind,
    kappa: usize,
    cfg: &LanczosConfig,
) -> Result<EdgeDistances> {
    let (op, sel) = kind
        .spectral_requirements()
        .ok_or_else(|| Error::OperatorMismatch(format!("{kind} is not a diffusion distance")))?;
    let basis = eig_truncated(g, op, sel, kappa, cfg)?;
    edge_distances(g, &diffusion_embedding(g, &basis, kind)?)
}

/// Dense spectral distances from a full eigendecomposition, optionally
/// truncated to `kappa` pairs.
pub fn dense_spectral_distances(
    g: &Graph,
    kind: DistanceKind,
    kappa: Option<usize>,
) -> Result<EdgeDistances> {
    let (op, sel) = kind
        .spectral_requirements()
        .ok_or_else(|| Error::OperatorMismatch(format!("{kind} is not a diffusion distance")))?;
    let full = eig_dense_capped(g, op, DEFAULT_DENSE_CAP)?;
    let basis = full.select(sel, kappa.unwrap_or(g.node_count()))?;
    edge_distances(g, &diffusion_embedding(g, &basis, kind)?)
}

/// Diffusion distances from the random-walk series, no eigensolver involved.
///
/// VDD: rows of `P^t D^{-1/2}`. PRDD: rows of `Σ γ^t P^t D^{-1/2}`, cut when
/// the tail `γ^{T+1}/(1−γ) · max 1/√d` drops below 1e-13. HKDD: rows of
/// `Σ e^{-γ} γ^t/t! P^t D^{-1/2}`, summed until the Poisson mass reaches
/// `1 − 1e-14`. The right `D^{-1/2}` makes every form match the spectral
/// embedding on all graphs; see [`heat_kernel_literal_oracle`] for the
/// unscaled heat-kernel series.
pub fn exact_diffusion_oracle(g: &Graph, kind: DistanceKind) -> Result<EdgeDistances> {
    exact_diffusion_oracle_capped(g, kind, DEFAULT_DENSE_CAP)
}

pub fn exact_diffusion_oracle_capped(
    g: &Graph,
    kind: DistanceKind,
    cap: usize,
) -> Result<EdgeDistances> {
    kind.validate()?;
    let n = g.node_count();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let p = g.dense_transition();
    let series = match kind {
        DistanceKind::Vdd { t } => {
            let mut m = DMatrix::identity(n, n);
            for _ in 0..t {
                m = &m * &p;
            }
            m
        }
        DistanceKind::Prdd { gamma } => {
            let isd_max = g.inv_sqrt_degrees().iter().copied().fold(0.0, f64::max);
            let mut acc = DMatrix::identity(n, n);
            let mut term = DMatrix::identity(n, n);
            let mut coef = 1.0;
            let mut t = 0usize;
            while coef * gamma / (1.0 - gamma) * isd_max >= 1e-13 {
                term = &term * &p;
                coef *= gamma;
                t += 1;
                acc += coef * &term;
                if t > 1_000_000 {
                    return Err(Error::InvalidParameter(
                        "PRDD series failed to reach its tail bound".into(),
                    ));
                }
            }
            acc
        }
        DistanceKind::Hkdd { gamma } => poisson_series(&p, gamma)?,
        other => {
            return Err(Error::OperatorMismatch(format!(
                "{other} has no diffusion series"
            )))
        }
    };
    let isd = g.inv_sqrt_degrees();
    let z = FeatureMatrix::from_fn(n, n, |i, j| series[(i, j)] * isd[j]);
    Ok(EdgeDistances {
        kind,
        kappa: KappaUsed::Exact,
        values: row_distances(g, &z),
    })
}

fn poisson_series(p: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    if gamma > 600.0 {
        return Err(Error::InvalidParameter(format!(
            "heat constant {gamma} underflows the Poisson weights"
        )));
    }
    let n = p.nrows();
    let mut weight = (-gamma).exp();
    let mut mass = weight;
    let mut term = DMatrix::identity(n, n);
    let mut acc = weight * &term;
    let mut t = 0usize;
    while mass < 1.0 - 1e-14 {
        t += 1;
        term = &term * p;
        weight *= gamma / t as f64;
        mass += weight;
        acc += weight * &term;
        if t > 100_000 {
            break;
        }
    }
    Ok(acc)
}

/// Heat-kernel series without the right `D^{-1/2}`: rows of
/// `Σ e^{-γ} γ^t/t! P^t`. On a d-regular graph these distances are exactly
/// `√d` times the spectral HKDD values.
pub fn heat_kernel_literal_oracle(g: &Graph, gamma: f64) -> Result<EdgeDistances> {
    let kind = DistanceKind::Hkdd { gamma };
    kind.validate()?;
    let n = g.node_count();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let series = poisson_series(&g.dense_transition(), gamma)?;
    let z = FeatureMatrix::from_fn(n, n, |i, j| series[(i, j)]);
    Ok(EdgeDistances {
        kind,
        kappa: KappaUsed::Exact,
        values: row_distances(g, &z),
    })
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &Graph, src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::from([HeapItem(0.0, src)]);
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (v, w) in g.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

/// Moore–Penrose pseudoinverse of the combinatorial Laplacian `D − W`.
fn laplacian_pinv(g: &Graph) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected(
            "resistance distances need a connected graph".into(),
        ));
    }
    let eig = SymmetricEigen::new(g.dense_laplacian());
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut pinv = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if lam.abs() <= 1e-10 * scale {
            continue;
        }
        let u = eig.eigenvectors.column(k);
        pinv += (1.0 / lam) * (u * u.transpose());
    }
    Ok(pinv)
}

/// Baseline metrics: shortest path, Jaccard, effective resistance,
/// biharmonic, and the all-zero ablation.
pub fn baseline_distance(g: &Graph, kind: DistanceKind) -> Result<EdgeDistances> {
    let edges = g.edges();
    let values: Vec<f64> = match kind {
        DistanceKind::Zero => vec![0.0; edges.len()],
        DistanceKind::Spd => {
            if g.is_unweighted() {
                edges
                    .iter()
                    .map(|e| if e.u == e.v { 0.0 } else { 1.0 })
                    .collect()
            } else {
                let mut cache: Vec<Option<Vec<f64>>> = vec![None; g.node_count()];
                edges
                    .iter()
                    .map(|e| cache[e.u].get_or_insert_with(|| dijkstra(g, e.u))[e.v])
                    .collect()
            }
        }
        DistanceKind::Jaccard => edges
            .par_iter()
            .map(|e| {
                // sorted neighbor lists: merge count
                let (a, b) = (g.neighbor_ids(e.u), g.neighbor_ids(e.v));
                let (mut i, mut j, mut common) = (0, 0, 0usize);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        Ordering::Less => i += 1,
                        Ordering::Greater => j += 1,
                        Ordering::Equal => {
                            common += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                let union = a.len() + b.len() - common;
                1.0 - common as f64 / union as f64
            })
            .collect(),
        DistanceKind::Resistance => {
            let lp = laplacian_pinv(g)?;
            edges
                .iter()
                .map(|e| (lp[(e.u, e.u)] + lp[(e.v, e.v)] - 2.0 * lp[(e.u, e.v)]).max(0.0))
                .collect()
        }
        DistanceKind::Biharmonic => {
            let lp = laplacian_pinv(g)?;
            let lp2 = &lp * &lp;
            edges
                .iter()
                .map(|e| {
                    (lp2[(e.u, e.u)] + lp2[(e.v, e.v)] - 2.0 * lp2[(e.u, e.v)])
                        .max(0.0)
                        .sqrt()
                })
                .collect()
        }
        other => {
            return Err(Error::OperatorMismatch(format!(
                "{other} is a diffusion distance; use the spectral or oracle path"
            )))
        }
    };
    Ok(EdgeDistances {
        kind,
        kappa: KappaUsed::Exact,
        values,
    })
}

/// How a distance cache is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceMode {
    /// Lanczos with `kappa` pairs.
    Truncated {
        kappa: usize,
        lanczos: LanczosConfig,
    },
    /// Dense series or power oracle.
    Exact,
}

/// Dispatches on the kind: diffusion distances through `mode`, baselines directly.
pub fn compute_distances(
    g: &Graph,
    kind: DistanceKind,
    mode: DistanceMode,
) -> Result<EdgeDistances> {
    if !kind.is_diffusion() {
        return baseline_distance(g, kind);
    }
    match mode {
        DistanceMode::Truncated { kappa, lanczos } => truncated_distances(g, kind, kappa, &lanczos),
        DistanceMode::Exact => exact_diffusion_oracle(g, kind),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub kind: DistanceKind,
    pub requested_kappa: usize,
    pub kappa: usize,
    pub lambda_kappa: f64,
    pub epsilon: f64,
    /// Largest `Δ'² − Δ²` over edges; the upper side holds when ≤ slack.
    pub max_upper_excess: f64,
    /// Largest `(Δ² − 2ε/min(d_i,d_j)) − Δ'²`; the lower side holds when ≤ slack.
    pub max_lower_excess: f64,
    /// Largest `|Δ'² − Δ²|`.
    pub max_gap: f64,
    pub violating_edges: Vec<usize>,
    pub passed: bool,
}

pub const BOUND_SLACK: f64 = 1e-9;

/// Checks `Δ² − 2ε/min(d_i,d_j) ≤ Δ'² ≤ Δ²` on every edge. `Δ` comes from
/// the series oracle, `Δ'` and `ε` from a dense eigendecomposition.
pub fn check_truncation_bound(
    g: &Graph,
    kind: DistanceKind,
    kappa: usize,
) -> Result<TruncationReport> {
    let (op, sel) = kind
        .spectral_requirements()
        .ok_or_else(|| Error::OperatorMismatch(format!("{kind} is not a diffusion distance")))?;
    let full = eig_dense_capped(g, op, DEFAULT_DENSE_CAP)?.select(sel, g.node_count())?;
    let exact = exact_diffusion_oracle_capped(g, kind, DEFAULT_DENSE_CAP)?;
    let basis = full.select(sel, kappa)?;
    let approx = edge_distances(g, &diffusion_embedding(g, &basis, kind)?)?;
    let lambda_kappa = basis.eigenvalues[basis.kappa() - 1];
    let epsilon = kind.truncation_epsilon(lambda_kappa);

    let (mut upper, mut lower, mut gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut violating = Vec::new();
    for (idx, e) in g.edges().iter().enumerate() {
        let d2 = exact.values[idx].powi(2);
        let a2 = approx.values[idx].powi(2);
        let tail = if e.u == e.v {
            0.0
        } else {
            2.0 * epsilon / g.degree(e.u).min(g.degree(e.v))
        };
        let up = a2 - d2;
        let lo = d2 - tail - a2;
        upper = upper.max(up);
        lower = lower.max(lo);
        gap = gap.max(up.abs());
        if up > BOUND_SLACK || lo > BOUND_SLACK {
            violating.push(idx);
        }
    }
    Ok(TruncationReport {
        kind,
        requested_kappa: kappa,
        kappa: basis.kappa(),
        lambda_kappa,
        epsilon,
        max_upper_excess: upper,
        max_lower_excess: lower,
        max_gap: gap,
        passed: violating.is_empty(),
        violating_edges: violating,
    })
}

/// Largest absolute per-edge difference between two aligned distance sets.
pub fn distance_change(a: &EdgeDistances, b: &EdgeDistances) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "edge distances",
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Copy of `g` with weights `w_e (1 + eps·s_e)` on the edges listed in `signs`.
pub fn perturb_weights(g: &Graph, signs: &[(usize, f64)], eps: f64) -> Result<Graph> {
    let mut edges = g.edge_list();
    for &(idx, s) in signs {
        edges[idx].2 *= 1.0 + eps * s;
    }
    build_graph(&edges, g.node_count(), g.has_self_loops())
}

pub const STABILITY_EPSILONS: [f64; 3] = [0.1, 0.01, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTrial {
    pub perturbed_edges: Vec<usize>,
    /// Max distance change per entry of [`STABILITY_EPSILONS`].
    pub max_changes: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub kind: DistanceKind,
    pub epsilons: Vec<f64>,
    pub trials: Vec<StabilityTrial>,
    pub monotone_fraction: f64,
    /// Change observed when the weights are multiplied by `1 + 0·s`.
    pub zero_change: f64,
    pub passed: bool,
}

/// Empirical perturbation stability. Each trial draws `edge_flips` distinct
/// edges and a fixed direction `s_e = ±U(0.5, 1)` per edge, then scales the
/// perturbation by each ε. Weight-only perturbations with `|ε s_e| < 1`
/// keep every weight positive, so connectivity is never lost.
pub fn perturbation_stability_probe(
    g: &Graph,
    kind: DistanceKind,
    edge_flips: usize,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if !kind.is_diffusion() {
        return Err(Error::OperatorMismatch(format!(
            "{kind} is not a diffusion distance"
        )));
    }
    let m = g.edge_count();
    let flips = edge_flips.clamp(1, m);
    let base = dense_spectral_distances(g, kind, None)?;
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(trials);
    let mut zero_change: f64 = 0.0;
    for _ in 0..trials {
        let picked = rand::seq::index::sample(&mut rng, m, flips).into_vec();
        let signs: Vec<(usize, f64)> = picked
            .iter()
            .map(|&idx| {
                let mag = rng.random_range(0.5..1.0);
                (idx, if rng.random::<bool>() { mag } else { -mag })
            })
            .collect();
        let same = dense_spectral_distances(&perturb_weights(g, &signs, 0.0)?, kind, None)?;
        zero_change = zero_change.max(distance_change(&base, &same)?);
        let mut changes = Vec::with_capacity(STABILITY_EPSILONS.len());
        for &eps in &STABILITY_EPSILONS {
            let pd = dense_spectral_distances(&perturb_weights(g, &signs, eps)?, kind, None)?;
            changes.push(distance_change(&base, &pd)?);
        }
        let monotone = changes.windows(2).all(|w| w[1] <= w[0]);
        out.push(StabilityTrial {
            perturbed_edges: picked,
            max_changes: changes,
            monotone,
        });
    }
    let monotone_fraction = if out.is_empty() {
        1.0
    } else {
        out.iter().filter(|t| t.monotone).count() as f64 / out.len() as f64
    };
    Ok(StabilityReport {
        kind,
        epsilons: STABILITY_EPSILONS.to_vec(),
        passed: monotone_fraction >= 0.9 && zero_change == 0.0,
        trials: out,
        monotone_fraction,
        zero_change,
    })
}
