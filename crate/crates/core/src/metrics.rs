//! Smoothness and correlation diagnostics, and executable checks of the
//! homophily identity and the over-smoothing limit.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{Graph, LabeledGraph};
use crate::matrix::{norm, FeatureMatrix};
use crate::spectral::{
    eig_dense, eig_truncated, LanczosConfig, OperatorKind, Selection, DEFAULT_DENSE_CAP,
};
use crate::{Error, Result};

fn check_rows(g: &Graph, x: &FeatureMatrix) -> Result<()> {
    if x.rows() != g.node_count() {
        return Err(Error::DimensionMismatch {
            what: "feature rows",
            expected: g.node_count(),
            got: x.rows(),
        });
    }
    Ok(())
}

/// `½ Σ_edges w_ij ‖X_i/√d_i − X_j/√d_j‖²`.
pub fn dirichlet_energy(g: &Graph, x: &FeatureMatrix) -> Result<f64> {
    check_rows(g, x)?;
    let isd = g.inv_sqrt_degrees();
    let total: f64 = g
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (x.row(e.u), x.row(e.v));
            let s: f64 = a
                .iter()
                .zip(b)
                .map(|(p, q)| {
                    let diff = p * isd[e.u] - q * isd[e.v];
                    diff * diff
                })
                .sum();
            e.w * s
        })
        .sum();
    Ok(0.5 * total)
}

/// Weighted fraction of edges whose endpoints share a label.
pub fn homophily_ratio(lg: &LabeledGraph) -> f64 {
    let y = lg.labels();
    let (same, total) = lg.graph.edges().iter().fold((0.0, 0.0), |(s, t), e| {
        (if y[e.u] == y[e.v] { s + e.w } else { s }, t + e.w)
    });
    same / total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomophilyIdentityReport {
    pub direct: f64,
    pub via_energy: f64,
    pub abs_error: f64,
    pub passed: bool,
}

/// Compares the direct homophily count with `1 − E(D^{1/2} Y)/m`.
pub fn verify_homophily_identity(lg: &LabeledGraph) -> Result<HomophilyIdentityReport> {
    let g = &lg.graph;
    let y = lg.one_hot();
    let sd: Vec<f64> = g.degrees().iter().map(|d| d.sqrt()).collect();
    let scaled = FeatureMatrix::from_fn(y.rows(), y.cols(), |i, c| sd[i] * y.get(i, c));
    let direct = homophily_ratio(lg);
    let via_energy = 1.0 - dirichlet_energy(g, &scaled)? / g.total_weight();
    let abs_error = (direct - via_energy).abs();
    Ok(HomophilyIdentityReport {
        direct,
        via_energy,
        abs_error,
        passed: abs_error <= 1e-12,
    })
}

/// Unit rows, with `None` for zero rows.
fn unit_rows(h: &FeatureMatrix) -> Vec<Option<Vec<f64>>> {
    (0..h.rows())
        .map(|i| {
            let r = h.row(i);
            let nr = norm(r);
            (nr > 0.0).then(|| r.iter().map(|v| v / nr).collect())
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean distance between row-normalized representations:
/// `1/(2n(n−1)) Σ_{i≠j} ‖H_i/‖H_i‖ − H_j/‖H_j‖‖` over ordered pairs. Zero rows
/// are dropped and `n` counts the remaining rows.
pub fn smv(h: &FeatureMatrix) -> f64 {
    let rows: Vec<Vec<f64>> = unit_rows(h).into_iter().flatten().collect();
    let n = rows.len();
    if n < 2 {
        return 0.0;
    }
    // per-row partial sums in parallel, reduced in row order
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| dist(&rows[i], &rows[j]))
                .sum()
        })
        .collect();
    partial.iter().sum::<f64>() / (2.0 * n as f64 * (n as f64 - 1.0))
}

/// Mean `|Pearson|` over ordered pairs of distinct columns, population
/// statistics; pairs involving a constant column are skipped. `None` when no
/// pair qualifies.
pub fn corr(h: &FeatureMatrix) -> Option<f64> {
    let (n, d) = (h.rows(), h.cols());
    if d < 2 || n == 0 {
        return None;
    }
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|c| {
            let col = h.col_vec(c);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.iter().map(|v| v - mean).collect()
        })
        .collect();
    let sd: Vec<f64> = cols
        .iter()
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt())
        .collect();
    let (mut sum, mut count) = (0.0, 0usize);
    for a in 0..d {
        for b in 0..d {
            if a == b || sd[a] == 0.0 || sd[b] == 0.0 {
                continue;
            }
            let cov = cols[a]
                .iter()
                .zip(&cols[b])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / n as f64;
            sum += (cov / (sd[a] * sd[b])).abs();
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Smoothness over heterophilic edges: `1/(2|E'|) Σ_{E'} ‖Ĥ_i − Ĥ_j‖` with
/// row-normalized `Ĥ`. `None` when no heterophilic edge has two nonzero rows.
pub fn hos(lg: &LabeledGraph, h: &FeatureMatrix) -> Result<Option<f64>> {
    check_rows(&lg.graph, h)?;
    let unit = unit_rows(h);
    let y = lg.labels();
    let (mut sum, mut count) = (0.0, 0usize);
    for e in lg.graph.edges() {
        if y[e.u] == y[e.v] {
            continue;
        }
        if let (Some(a), Some(b)) = (&unit[e.u], &unit[e.v]) {
            sum += dist(a, b);
            count += 1;
        }
    }
    Ok((count > 0).then(|| sum / (2.0 * count as f64)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub dirichlet: f64,
    pub smv: f64,
    pub corr: Option<f64>,
    pub hos: Option<f64>,
    pub homophily: Option<f64>,
}

impl DiagnosticsReport {
    pub const CSV_HEADER: &'static str = "dirichlet,smv,corr,hos,homophily";

    /// One CSV record; absent values are written as `NA`.
    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), crate::io::fmt17);
        format!(
            "{},{},{},{},{}",
            crate::io::fmt17(self.dirichlet),
            crate::io::fmt17(self.smv),
            f(self.corr),
            f(self.hos),
            f(self.homophily)
        )
    }
}

pub fn diagnostics(
    g: &Graph,
    h: &FeatureMatrix,
    labels: Option<&LabeledGraph>,
) -> Result<DiagnosticsReport> {
    Ok(DiagnosticsReport {
        dirichlet: dirichlet_energy(g, h)?,
        smv: smv(h),
        corr: corr(h),
        hos: match labels {
            Some(lg) => hos(lg, h)?,
            None => None,
        },
        homophily: labels.map(homophily_ratio),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OversmoothingReport {
    /// Second-largest `|λ|` of `Â`.
    pub lambda2_abs: f64,
    /// `1 / ‖(I − ππᵀ) H0‖_F`.
    pub scale: f64,
    pub k: usize,
    /// `‖Â^k H0 − π(πᵀH0)‖_F`.
    pub residual: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `‖Mᵀ M − (H0ᵀπ)(πᵀH0)‖_F` with `M = Â^k H0`.
    pub limit_error: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Iterates `Â^k H0` for `k = ⌈log(tol·scale)/log|λ₂|⌉` and checks that it
/// reaches the stationary projection `π(πᵀH0)`, `π_i = √(d_i/2m)`, and that
/// its Gram matrix has collapsed to rank one.
pub fn check_oversmoothing_limit(
    g: &Graph,
    h0: &FeatureMatrix,
    tol: f64,
    max_layers: usize,
) -> Result<OversmoothingReport> {
    check_rows(g, h0)?;
    if !g.is_connected() {
        return Err(Error::Disconnected(
            "the over-smoothing limit needs a connected graph".into(),
        ));
    }
    if g.is_bipartite() {
        return Err(Error::Bipartite(
            "over-smoothing limit needs a non-bipartite graph: Â has eigenvalue -1, so Â^k H0 oscillates".into(),
        ));
    }
    let n = g.node_count();
    let lambda2_abs = if n <= DEFAULT_DENSE_CAP {
        let full = eig_dense(g, OperatorKind::NormAdjacency)?.select(Selection::LargestAbs, n)?;
        full.eigenvalues.get(1).map_or(0.0, |l| l.abs())
    } else {
        let b = eig_truncated(
            g,
            OperatorKind::NormAdjacency,
            Selection::LargestAbs,
            2,
            &LanczosConfig::default(),
        )?;
        b.eigenvalues[1].abs()
    };

    let two_m: f64 = g.degrees().iter().sum();
    let pi: Vec<f64> = g.degrees().iter().map(|d| (d / two_m).sqrt()).collect();
    let proj: Vec<f64> = (0..h0.cols())
        .map(|c| (0..n).map(|i| pi[i] * h0.get(i, c)).sum())
        .collect();
    let limit = FeatureMatrix::from_fn(n, h0.cols(), |i, c| pi[i] * proj[c]);
    let off = h0.sub(&limit).frobenius_norm();
    let scale = if off > 0.0 { 1.0 / off } else { f64::INFINITY };

    let k = if off == 0.0 || lambda2_abs == 0.0 {
        1
    } else {
        ((tol * scale).ln() / lambda2_abs.ln()).ceil().max(1.0) as usize
    };
    if k > max_layers {
        return Err(Error::InvalidParameter(format!(
            "limit needs k={k} > {max_layers} layers (|λ2|={lambda2_abs})"
        )));
    }
    let mut h = h0.clone();
    for _ in 0..k {
        h = g.norm_adjacency_matmul(&h)?;
    }
    let residual = h.sub(&limit).frobenius_norm();

    let gram = h.gram();
    let target = limit.gram();
    let limit_error = gram.sub(&target).frobenius_norm();
    let mut sv: Vec<f64> = SymmetricEigen::new(gram.to_dmatrix())
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let sigma1 = sv.first().copied().unwrap_or(0.0);
    let sigma2 = sv.get(1).copied().unwrap_or(0.0);

    let passed = residual <= tol && sigma2 <= tol * sigma1 && limit_error <= tol;
    Ok(OversmoothingReport {
        lambda2_abs,
        scale,
        k,
        residual,
        sigma1,
        sigma2,
        limit_error,
        tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_graph, erdos_renyi_connected, generate_sbm, rng, SbmSpec};
    use crate::graph::build_graph;
    use rand::Rng;

    const S2: f64 = std::f64::consts::SQRT_2;

    fn k2() -> Graph {
        build_graph(&[(0, 1, 1.0)], 2, false).unwrap()
    }

    #[test]
    fn dirichlet_k2() {
        let x = FeatureMatrix::column(&[1.0, 0.0]);
        assert!((dirichlet_energy(&k2(), &x).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_vanishes_on_sqrt_degree_vector() {
        let g = erdos_renyi_connected(15, 0.3, 2).unwrap();
        let x = FeatureMatrix::column(&g.degrees().iter().map(|d| d.sqrt()).collect::<Vec<_>>());
        assert!(dirichlet_energy(&g, &x).unwrap() < 1e-24);
        let e1 =
            dirichlet_energy(&g, &FeatureMatrix::from_fn(15, 2, |i, j| (i * j) as f64)).unwrap();
        let e3 = dirichlet_energy(
            &g,
            &FeatureMatrix::from_fn(15, 2, |i, j| 3.0 * (i * j) as f64),
        )
        .unwrap();
        assert!((e3 - 9.0 * e1).abs() < 1e-10 * e3);
    }

    #[test]
    fn homophily_basic() {
        let tri = LabeledGraph::new(complete_graph(3).unwrap(), vec![0, 0, 0], 1).unwrap();
        assert_eq!(homophily_ratio(&tri), 1.0);
        let mixed = LabeledGraph::new(k2(), vec![0, 1], 2).unwrap();
        assert_eq!(homophily_ratio(&mixed), 0.0);
        assert!(verify_homophily_identity(&tri).unwrap().passed);
        assert!(verify_homophily_identity(&mixed).unwrap().passed);
    }

    #[test]
    fn homophily_identity_on_sbm() {
        for seed in 0..10 {
            let spec = SbmSpec {
                n: 30,
                classes: 3,
                p_in: 0.3,
                p_out: 0.1,
                feature_dim: 3,
                feature_sep: 1.0,
                seed,
            };
            let (lg, _) = generate_sbm(&spec).unwrap();
            let r = verify_homophily_identity(&lg).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn smv_examples() {
        let h = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((smv(&h) - S2 / 2.0).abs() < 1e-15);
        let same =
            FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![0.5, 1.0]]).unwrap();
        assert!(smv(&same) < 1e-15);
        // zero rows are dropped
        let z =
            FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert!((smv(&z) - S2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn corr_examples() {
        let h =
            FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![5.0, 10.0]]).unwrap();
        assert!((corr(&h).unwrap() - 1.0).abs() < 1e-12);
        let o = FeatureMatrix::from_rows(&[
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        assert!(corr(&o).unwrap().abs() < 1e-15);
        assert_eq!(corr(&FeatureMatrix::zeros(4, 1)), None);
    }

    #[test]
    fn corr_matches_textbook_pearson() {
        let mut r = rng(3);
        let h = FeatureMatrix::from_fn(20, 3, |_, _| r.random::<f64>());
        // sample-statistics Pearson; the n vs n−1 normalizers cancel
        let pearson = |a: &[f64], b: &[f64]| {
            let n = a.len() as f64;
            let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
            let num: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - ma) * (y - mb))
                .sum::<f64>()
                / (n - 1.0);
            let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0);
            let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0);
            num / (va.sqrt() * vb.sqrt())
        };
        let cols: Vec<Vec<f64>> = (0..3).map(|c| h.col_vec(c)).collect();
        let expect = (pearson(&cols[0], &cols[1]).abs()
            + pearson(&cols[0], &cols[2]).abs()
            + pearson(&cols[1], &cols[2]).abs())
            / 3.0;
        assert!((corr(&h).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn hos_examples() {
        let lg = LabeledGraph::new(k2(), vec![0, 1], 2).unwrap();
        let h = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((hos(&lg, &h).unwrap().unwrap() - S2 / 2.0).abs() < 1e-15);
        let aligned = FeatureMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(hos(&lg, &aligned).unwrap().unwrap() < 1e-15);
        let tri = LabeledGraph::new(complete_graph(3).unwrap(), vec![1, 1, 1], 2).unwrap();
        assert_eq!(hos(&tri, &FeatureMatrix::zeros(3, 2)).unwrap(), None);
    }

    #[test]
    fn oversmoothing_triangle() {
        let g = complete_graph(3).unwrap();
        let h0 =
            FeatureMatrix::from_rows(&[vec![0.3, -1.0], vec![1.2, 0.4], vec![-0.7, 2.0]]).unwrap();
        let r = check_oversmoothing_limit(&g, &h0, 1e-8, 1000).unwrap();
        assert!((r.lambda2_abs - 0.5).abs() < 1e-12);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn oversmoothing_rejects_bipartite() {
        let err = check_oversmoothing_limit(&k2(), &FeatureMatrix::column(&[1.0, 0.0]), 1e-8, 100)
            .unwrap_err();
        assert!(matches!(err, Error::Bipartite(_)));
    }

    #[test]
    fn stationary_vector_is_fixed() {
        let g = erdos_renyi_connected(12, 0.4, 1).unwrap();
        let two_m: f64 = g.degrees().iter().sum();
        let pi: Vec<f64> = g.degrees().iter().map(|d| (d / two_m).sqrt()).collect();
        let h = g
            .norm_adjacency_matmul(&FeatureMatrix::column(&pi))
            .unwrap();
        for (a, b) in h.as_slice().iter().zip(&pi) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn diagnostics_csv_marks_absent_fields() {
        let h = FeatureMatrix::column(&[1.0, 2.0]);
        let r = diagnostics(&k2(), &h, None).unwrap();
        assert!(r.csv_row().ends_with(",NA,NA,NA"));
    }
}
