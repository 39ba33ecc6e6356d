//! Invariants over randomly generated graphs and features.

mod common;

use ddsm::distances::{
    dense_spectral_distances, diffusion_embedding, edge_distances, DistanceKind, EdgeDistances,
};
use ddsm::generators::{erdos_renyi_connected, rng, weighted_erdos_renyi_connected};
use ddsm::metrics::{corr, diagnostics, hos, smv, verify_homophily_identity};
use ddsm::pipeline::{fit_classifier, softmax_loss_and_grad, SplitSpec, TrainConfig};
use ddsm::propagation::{ddsm_layer, ddsm_objective, propagate, PropagationConfig, ThirdTerm};
use ddsm::spectral::{eig_dense, eig_truncated, LanczosConfig, OperatorKind, Selection};
use ddsm::{FeatureMatrix, Graph, LabeledGraph};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn graph(seed: u64, n: usize, p: f64, weighted: bool) -> Graph {
    if weighted {
        weighted_erdos_renyi_connected(n, p, 0.2, 3.0, seed).unwrap()
    } else {
        erdos_renyi_connected(n, p, seed).unwrap()
    }
}

fn features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    FeatureMatrix::from_fn(n, d, |_, _| r.sample(StandardNormal))
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng(seed));
    p
}

fn kinds() -> impl Strategy<Value = DistanceKind> {
    prop_oneof![
        (1u32..12).prop_map(|t| DistanceKind::Vdd { t }),
        (0.1f64..0.95).prop_map(|gamma| DistanceKind::Prdd { gamma }),
        (0.05f64..12.0).prop_map(|gamma| DistanceKind::Hkdd { gamma }),
    ]
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degree_sum_is_twice_total_weight(seed in any::<u64>(), n in 2usize..60, p in 0.05f64..0.7, w in any::<bool>()) {
        let g = graph(seed, n, p, w);
        let total: f64 = g.edges().iter().map(|e| e.w).sum();
        let deg: f64 = g.degrees().iter().sum();
        prop_assert!((deg - 2.0 * total).abs() <= 1e-12 * deg);
    }

    #[test]
    fn sparse_operator_matches_dense(seed in any::<u64>(), n in 2usize..120, p in 0.05f64..0.5, w in any::<bool>()) {
        let g = graph(seed, n, p, w);
        let h = features(n, 3, seed ^ 1);
        let sparse = common::to_dmatrix(&g.norm_adjacency_matmul(&h).unwrap());
        let dense = common::norm_adjacency(&g) * common::to_dmatrix(&h);
        prop_assert!((sparse - &dense).norm() <= 1e-12 * (1.0 + dense.norm()));
    }

    #[test]
    fn top_eigenpair_is_one_and_pi(seed in any::<u64>(), n in 3usize..60, p in 0.15f64..0.6, w in any::<bool>()) {
        let g = graph(seed, n, p, w);
        prop_assume!(!g.is_bipartite());
        let total: f64 = g.degrees().iter().sum();
        let pi: Vec<f64> = g.degrees().iter().map(|d| (d / total).sqrt()).collect();
        for b in [
            eig_dense(&g, OperatorKind::NormAdjacency).unwrap().select(Selection::LargestAlgebraic, 1).unwrap(),
            eig_truncated(&g, OperatorKind::NormAdjacency, Selection::LargestAlgebraic, 1, &LanczosConfig::default()).unwrap(),
        ] {
            prop_assert!((b.eigenvalues[0] - 1.0).abs() <= 1e-10);
            let u = b.eigenvectors.col_vec(0);
            let plus = u.iter().zip(&pi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let minus = u.iter().zip(&pi).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(plus.min(minus) <= 1e-8);
        }
    }

    #[test]
    fn ritz_values_lie_in_the_spectrum(seed in any::<u64>(), n in 8usize..80, kappa in 1usize..8, lap in any::<bool>(), s in 0usize..3) {
        let g = graph(seed, n, 0.3, false);
        let op = if lap { OperatorKind::NormLaplacian } else { OperatorKind::NormAdjacency };
        let sel = [Selection::LargestAbs, Selection::LargestAlgebraic, Selection::SmallestAlgebraic][s];
        let b = eig_truncated(&g, op, sel, kappa.min(n), &LanczosConfig { seed, ..LanczosConfig::default() }).unwrap();
        let dense = eig_dense(&g, op).unwrap().eigenvalues;
        let (lo, hi) = dense.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for v in b.eigenvalues {
            prop_assert!(v >= lo - 1e-10 && v <= hi + 1e-10);
        }
    }

    #[test]
    fn distances_ignore_eigenvector_signs(seed in any::<u64>(), n in 4usize..40, kind in kinds(), flips in proptest::collection::vec(any::<bool>(), 40)) {
        let g = graph(seed, n, 0.3, false);
        let (op, sel) = kind.spectral_requirements().unwrap();
        let basis = eig_dense(&g, op).unwrap().select(sel, n).unwrap();
        let mut flipped = basis.clone();
        for (k, &f) in flips.iter().enumerate().take(flipped.kappa()) {
            if f {
                flipped.flip_sign(k);
            }
        }
        let a = edge_distances(&g, &diffusion_embedding(&g, &basis, kind).unwrap()).unwrap();
        let b = edge_distances(&g, &diffusion_embedding(&g, &flipped, kind).unwrap()).unwrap();
        prop_assert!(max_diff(&a.values, &b.values) <= 1e-12);
    }

    #[test]
    fn distances_are_symmetric(seed in any::<u64>(), n in 4usize..40, kind in kinds()) {
        let g = graph(seed, n, 0.3, true);
        let (op, sel) = kind.spectral_requirements().unwrap();
        let basis = eig_dense(&g, op).unwrap().select(sel, n.div_ceil(2)).unwrap();
        let z = diffusion_embedding(&g, &basis, kind).unwrap().z;
        for e in g.edges() {
            let fwd: f64 = z.row(e.u).iter().zip(z.row(e.v)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let bwd: f64 = z.row(e.v).iter().zip(z.row(e.u)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!((fwd - bwd).abs() <= 1e-15);
        }
    }

    #[test]
    fn truncated_distances_grow_with_kappa(seed in any::<u64>(), n in 4usize..40, kind in kinds()) {
        let g = graph(seed, n, 0.3, false);
        let mut prev = vec![0.0; g.edge_count()];
        for kappa in 1..=n {
            let d = dense_spectral_distances(&g, kind, Some(kappa)).unwrap();
            for (a, b) in prev.iter().zip(&d.values) {
                prop_assert!(b * b >= a * a - 1e-12);
            }
            prev = d.values;
        }
    }

    #[test]
    fn layer_is_half_gradient_step(seed in any::<u64>(), n in 4usize..14, d in 1usize..5, alpha in 0.0f64..0.45, beta in 0.0f64..0.45, eta in 0.0f64..2.0) {
        let g = graph(seed, n, 0.4, true);
        let h = features(n, d, seed ^ 2);
        let h0 = features(n, d, seed ^ 3);
        let delta = dense_spectral_distances(&g, DistanceKind::Vdd { t: 2 }, None).unwrap();
        let cfg = PropagationConfig { alpha, beta, eta, layers: 1, eps_denom: 1e-8, third_term: ThirdTerm::Raw };
        let r = ddsm::propagation::check_layer_gradient(&g, &h, &h0, &delta, &cfg, 1e-6).unwrap();
        prop_assert!(r.rel_error <= 1e-4, "relative error {}", r.rel_error);
    }

    #[test]
    fn propagation_is_permutation_equivariant(seed in any::<u64>(), n in 4usize..30, kind in kinds()) {
        let g = graph(seed, n, 0.3, true);
        let perm = permutation(n, seed ^ 4);
        let h0 = features(n, 3, seed ^ 5);
        let delta = dense_spectral_distances(&g, kind, None).unwrap();
        let cfg = PropagationConfig { beta: 0.05, ..PropagationConfig::default() };
        let out = propagate(&g, &h0, &delta, &cfg).unwrap();
        let pg = g.permuted(&perm).unwrap();
        let pout = propagate(&pg, &h0.permute_rows(&perm), &delta.permuted(&g, &perm).unwrap(), &cfg).unwrap();
        prop_assert!(out.permute_rows(&perm).max_abs_diff(&pout) <= 1e-12);
    }

    #[test]
    fn smoothing_matches_dense_closed_forms(seed in any::<u64>(), n in 3usize..40, layers in 0usize..8, alpha in 0.0f64..0.9) {
        let g = graph(seed, n, 0.3, true);
        let h0 = features(n, 2, seed ^ 6);
        let zero = EdgeDistances::zeros(&g);
        let a = common::norm_adjacency(&g);
        let x = common::to_dmatrix(&h0);
        // H_{k+1} = (1−α) Â H_k + α H0
        let mut dense = x.clone();
        for _ in 0..layers {
            dense = &a * &dense * (1.0 - alpha) + &x * alpha;
        }
        let cfg = PropagationConfig { alpha, beta: 0.0, eta: 0.0, layers, ..PropagationConfig::default() };
        let got = common::to_dmatrix(&propagate(&g, &h0, &zero, &cfg).unwrap());
        prop_assert!((got - &dense).norm() <= 1e-12 * (1.0 + dense.norm()));
    }

    #[test]
    fn fixed_points_are_stationary(seed in any::<u64>(), n in 3usize..20, alpha in 0.2f64..0.8) {
        let g = graph(seed, n, 0.4, false);
        let h0 = features(n, 2, seed ^ 7);
        let zero = EdgeDistances::zeros(&g);
        let cfg = PropagationConfig { alpha, beta: 0.0, eta: 0.0, layers: 1, ..PropagationConfig::default() };
        let mut h = h0.clone();
        for _ in 0..2000 {
            let next = ddsm_layer(&g, &h, &h0, &zero, &cfg).unwrap();
            let done = next.max_abs_diff(&h) <= 1e-13;
            h = next;
            if done {
                break;
            }
        }
        prop_assert!(ddsm_layer(&g, &h, &h0, &zero, &cfg).unwrap().max_abs_diff(&h) <= 1e-10);
        let grad = ddsm::propagation::finite_difference_gradient(&g, &h, &h0, &zero, &cfg, 1e-6).unwrap();
        prop_assert!(grad.frobenius_norm() <= 1e-6 * (1.0 + h.frobenius_norm()));
        prop_assert!(ddsm_objective(&g, &h, &h0, &zero, &cfg).unwrap().is_finite());
    }

    #[test]
    fn metrics_are_permutation_invariant(seed in any::<u64>(), n in 4usize..30, classes in 2usize..4) {
        let g = graph(seed, n, 0.3, true);
        let h = features(n, 3, seed ^ 8);
        let mut r = rng(seed ^ 9);
        let mut labels: Vec<usize> = (0..n).map(|i| if i < classes { i } else { r.random_range(0..classes) }).collect();
        labels.shuffle(&mut r);
        let lg = LabeledGraph::new(g.clone(), labels.clone(), classes).unwrap();
        let perm = permutation(n, seed ^ 10);
        let mut plabels = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            plabels[p] = labels[i];
        }
        let plg = LabeledGraph::new(g.permuted(&perm).unwrap(), plabels, classes).unwrap();
        let a = diagnostics(&g, &h, Some(&lg)).unwrap();
        let b = diagnostics(&plg.graph, &h.permute_rows(&perm), Some(&plg)).unwrap();
        prop_assert!((a.dirichlet - b.dirichlet).abs() <= 1e-10 * (1.0 + a.dirichlet));
        prop_assert!((a.smv - b.smv).abs() <= 1e-12);
        prop_assert!((a.corr.unwrap() - b.corr.unwrap()).abs() <= 1e-12);
        prop_assert!((a.hos.unwrap() - b.hos.unwrap()).abs() <= 1e-12);
        prop_assert!((a.homophily.unwrap() - b.homophily.unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn smv_hos_ignore_row_scaling_corr_ignores_column_affine(seed in any::<u64>(), n in 4usize..30) {
        let g = graph(seed, n, 0.3, false);
        let h = features(n, 3, seed ^ 11);
        let mut r = rng(seed ^ 12);
        let rows: Vec<f64> = (0..n).map(|_| r.random_range(0.1..10.0)).collect();
        let scaled = FeatureMatrix::from_fn(n, 3, |i, c| rows[i] * h.get(i, c));
        let slopes: Vec<(f64, f64)> = (0..3).map(|_| (r.random_range(0.1..10.0), r.random_range(-5.0..5.0))).collect();
        let affine = FeatureMatrix::from_fn(n, 3, |i, c| slopes[c].0 * h.get(i, c) + slopes[c].1);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let lg = LabeledGraph::new(g, labels, 2).unwrap();
        prop_assert!((smv(&h) - smv(&scaled)).abs() <= 1e-12);
        let (a, b) = (hos(&lg, &h).unwrap(), hos(&lg, &scaled).unwrap());
        prop_assert!(a.zip(b).is_none_or(|(a, b)| (a - b).abs() <= 1e-12));
        prop_assert!((corr(&h).unwrap() - corr(&affine).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn homophily_identity_holds(seed in any::<u64>(), n in 3usize..50, classes in 1usize..5, w in any::<bool>()) {
        let g = graph(seed, n, 0.3, w);
        let mut r = rng(seed ^ 13);
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..classes)).collect();
        let lg = LabeledGraph::new(g, labels, classes).unwrap();
        prop_assert!(verify_homophily_identity(&lg).unwrap().passed);
    }

    #[test]
    fn classifier_gradient_matches_finite_differences(seed in any::<u64>(), d in 1usize..4, c in 2usize..4, wd in 0.0f64..0.1) {
        let n = 5;
        let z = features(n, d, seed);
        let w = features(d, c, seed ^ 14);
        let mut r = rng(seed ^ 15);
        let b: Vec<f64> = (0..c).map(|_| r.random_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
        let nodes: Vec<usize> = (0..n).collect();
        let (_, gw, gb) = softmax_loss_and_grad(&z, &labels, &nodes, &w, &b, wd);
        let step = 1e-6;
        let loss = |w: &FeatureMatrix, b: &[f64]| softmax_loss_and_grad(&z, &labels, &nodes, w, b, wd).0;
        let mut num = Vec::new();
        let mut ana = Vec::new();
        for i in 0..d {
            for k in 0..c {
                let (mut p, mut m) = (w.clone(), w.clone());
                p.set(i, k, w.get(i, k) + step);
                m.set(i, k, w.get(i, k) - step);
                num.push((loss(&p, &b) - loss(&m, &b)) / (2.0 * step));
                ana.push(gw.get(i, k));
            }
        }
        for k in 0..c {
            let (mut p, mut m) = (b.clone(), b.clone());
            p[k] += step;
            m[k] -= step;
            num.push((loss(&w, &p) - loss(&w, &m)) / (2.0 * step));
            ana.push(gb[k]);
        }
        let err: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = ana.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-6 * scale.max(1e-3), "error {err} vs gradient norm {scale}");
    }
}

#[test]
fn sgc_pipeline_matches_dense_powers() {
    let g = erdos_renyi_connected(40, 0.15, 3).unwrap();
    let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
    let lg = LabeledGraph::new(g, labels, 2).unwrap();
    let x = features(40, 4, 21);
    let split = SplitSpec::default_for(&lg, 5).unwrap();
    let cfg = TrainConfig {
        prop: PropagationConfig::smoothing(3),
        ..TrainConfig::default()
    };
    let fit = fit_classifier(&lg, &x, &EdgeDistances::zeros(&lg.graph), &split, &cfg).unwrap();
    let a = common::norm_adjacency(&lg.graph);
    let dense: DMatrix<f64> = &a * &a * &a * common::to_dmatrix(&x);
    let dense = FeatureMatrix::from_dmatrix(&dense);
    assert!(fit.features.max_abs_diff(&dense) <= 1e-12);
    assert_eq!(fit.model.predict(&fit.features), fit.model.predict(&dense));

    let again = fit_classifier(&lg, &x, &EdgeDistances::zeros(&lg.graph), &split, &cfg).unwrap();
    assert_eq!(again.model, fit.model);
    assert_eq!(again.history, fit.history);
}
