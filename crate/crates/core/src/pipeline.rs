//! Decoupled node classification: fixed feature map → parameter-free
//! propagation → multinomial logistic regression trained by full-batch
//! gradient descent.

use nalgebra::SymmetricEigen;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{compute_distances, DistanceKind, DistanceMode, EdgeDistances};
use crate::generators::rng;
use crate::graph::LabeledGraph;
use crate::matrix::FeatureMatrix;
use crate::propagation::{propagate, PropagationConfig};
use crate::{Error, Result};

/// Disjoint train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitSpec {
    /// Per-class shuffle, then the leading `round(train_frac·size)` nodes of
    /// each class go to train (at least one) and the next
    /// `round(val_frac·size)` to validation; the rest is test.
    pub fn stratified(
        labels: &[usize],
        num_classes: usize,
        train_frac: f64,
        val_frac: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "split fractions train={train_frac} val={val_frac} are invalid"
            )));
        }
        let mut rng = rng(seed);
        let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for c in 0..num_classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                return Err(Error::MissingClass(c));
            }
            members.shuffle(&mut rng);
            let size = members.len() as f64;
            let nt = ((train_frac * size).round() as usize).clamp(1, members.len());
            let nv = ((val_frac * size).round() as usize).min(members.len() - nt);
            train.extend_from_slice(&members[..nt]);
            val.extend_from_slice(&members[nt..nt + nv]);
            test.extend_from_slice(&members[nt + nv..]);
        }
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Ok(Self {
            train,
            val,
            test,
            seed,
        })
    }

    /// The default 60/20/20 split.
    pub fn default_for(lg: &LabeledGraph, seed: u64) -> Result<Self> {
        Self::stratified(lg.labels(), lg.num_classes(), 0.6, 0.2, seed)
    }

    pub fn validate(&self, labels: &[usize], num_classes: usize) -> Result<()> {
        let n = labels.len();
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n {
                return Err(Error::InvalidParameter(format!(
                    "split node {i} out of range for n={n}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "node {i} appears in more than one split"
                )));
            }
        }
        let mut present = vec![false; num_classes];
        for &i in &self.train {
            present[labels[i]] = true;
        }
        match present.iter().position(|&p| !p) {
            Some(c) => Err(Error::MissingClass(c)),
            None => Ok(()),
        }
    }
}

/// Fixed map from raw features `X` to `H⁽⁰⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum FeatureMap {
    Identity,
    /// `X R` with `R_ij ~ N(0, 1/dim)`.
    RandomProjection {
        dim: usize,
        seed: u64,
    },
    /// Projection of the centered `X` onto its top `dim` principal axes.
    TruncatedPca {
        dim: usize,
    },
}

impl FeatureMap {
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        x.ensure_finite()?;
        match *self {
            FeatureMap::Identity => Ok(x.clone()),
            FeatureMap::RandomProjection { dim, seed } => {
                if dim == 0 {
                    return Err(Error::InvalidParameter(
                        "projection dim must be positive".into(),
                    ));
                }
                let mut r = rng(seed);
                let s = 1.0 / (dim as f64).sqrt();
                let proj = FeatureMatrix::from_fn(x.cols(), dim, |_, _| {
                    s * r.sample::<f64, _>(StandardNormal)
                });
                Ok(x.matmul(&proj))
            }
            FeatureMap::TruncatedPca { dim } => {
                if dim == 0 || dim > x.cols() {
                    return Err(Error::InvalidParameter(format!(
                        "PCA dim {dim} must lie in 1..={}",
                        x.cols()
                    )));
                }
                let n = x.rows() as f64;
                let means: Vec<f64> = (0..x.cols())
                    .map(|c| x.col_vec(c).iter().sum::<f64>() / n)
                    .collect();
                let xc = FeatureMatrix::from_fn(x.rows(), x.cols(), |i, c| x.get(i, c) - means[c]);
                let eig = SymmetricEigen::new(xc.gram().to_dmatrix());
                let mut order: Vec<usize> = (0..x.cols()).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
                let mut axes = FeatureMatrix::zeros(x.cols(), dim);
                for (k, &src) in order.iter().take(dim).enumerate() {
                    let mut v: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
                    // fix the sign: largest-magnitude component positive
                    let lead =
                        v.iter()
                            .copied()
                            .fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
                    if lead < 0.0 {
                        v.iter_mut().for_each(|a| *a = -*a);
                    }
                    axes.set_col(k, &v);
                }
                Ok(xc.matmul(&axes))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub feature_map: FeatureMap,
    pub prop: PropagationConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.5,
            weight_decay: 5e-4,
            epochs: 500,
            patience: 100,
            feature_map: FeatureMap::Identity,
            prop: PropagationConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lr={} must be positive",
                self.lr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight decay {} must be >= 0",
                self.weight_decay
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be positive".into()));
        }
        self.prop.validate()
    }
}

/// Linear softmax classifier on standardized inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// `d x C`.
    pub weights: FeatureMatrix,
    pub bias: Vec<f64>,
}

impl SoftmaxModel {
    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn standardize(&self, h: &FeatureMatrix) -> FeatureMatrix {
        FeatureMatrix::from_fn(h.rows(), h.cols(), |i, c| {
            (h.get(i, c) - self.mean[c]) / self.scale[c]
        })
    }

    pub fn logits(&self, h: &FeatureMatrix) -> FeatureMatrix {
        logits(&self.standardize(h), &self.weights, &self.bias)
    }

    /// Argmax class per node; ties go to the lowest class index.
    pub fn predict(&self, h: &FeatureMatrix) -> Vec<usize> {
        let z = self.logits(h);
        (0..z.rows()).map(|i| argmax(z.row(i))).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

fn logits(z: &FeatureMatrix, w: &FeatureMatrix, b: &[f64]) -> FeatureMatrix {
    let mut out = z.matmul(w);
    for i in 0..out.rows() {
        for (o, bb) in out.row_mut(i).iter_mut().zip(b) {
            *o += bb;
        }
    }
    out
}

/// Mean cross-entropy over `nodes` plus `½ wd ‖W‖²`, and its gradient with
/// respect to `W` and `b`.
pub fn softmax_loss_and_grad(
    z: &FeatureMatrix,
    labels: &[usize],
    nodes: &[usize],
    w: &FeatureMatrix,
    b: &[f64],
    weight_decay: f64,
) -> (f64, FeatureMatrix, Vec<f64>) {
    let (d, c) = (w.rows(), w.cols());
    let mut gw = FeatureMatrix::zeros(d, c);
    let mut gb = vec![0.0; c];
    let mut loss = 0.0;
    let inv = 1.0 / nodes.len() as f64;
    let mut p = vec![0.0; c];
    for &i in nodes {
        let zi = z.row(i);
        for k in 0..c {
            p[k] = b[k] + (0..d).map(|a| zi[a] * w.get(a, k)).sum::<f64>();
        }
        let mx = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + p.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
        loss += lse - p[labels[i]];
        for k in 0..c {
            let r = (p[k] - lse).exp() - if k == labels[i] { 1.0 } else { 0.0 };
            gb[k] += inv * r;
            for (a, &za) in zi.iter().enumerate().take(d) {
                let g = gw.get(a, k) + inv * r * za;
                gw.set(a, k, g);
            }
        }
    }
    loss *= inv;
    let mut reg = 0.0;
    for a in 0..d {
        for k in 0..c {
            let wv = w.get(a, k);
            reg += wv * wv;
            gw.set(a, k, gw.get(a, k) + weight_decay * wv);
        }
    }
    (loss + 0.5 * weight_decay * reg, gw, gb)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Weights from the epoch with the best validation accuracy.
    pub model: SoftmaxModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Propagated representations the classifier was trained on.
    pub features: FeatureMatrix,
}

fn accuracy(pred: &[usize], labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    nodes.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / nodes.len() as f64
}

/// Trains the classifier on fixed representations `h`.
pub fn train_softmax(
    h: &FeatureMatrix,
    labels: &[usize],
    num_classes: usize,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<(SoftmaxModel, Vec<EpochRecord>, usize, f64)> {
    cfg.validate()?;
    split.validate(labels, num_classes)?;
    h.ensure_finite()?;
    let d = h.cols();
    let nt = split.train.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|c| split.train.iter().map(|&i| h.get(i, c)).sum::<f64>() / nt)
        .collect();
    let scale: Vec<f64> = (0..d)
        .map(|c| {
            let var = split
                .train
                .iter()
                .map(|&i| (h.get(i, c) - mean[c]).powi(2))
                .sum::<f64>()
                / nt;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut model = SoftmaxModel {
        mean,
        scale,
        weights: FeatureMatrix::zeros(d, num_classes),
        bias: vec![0.0; num_classes],
    };
    let z = model.standardize(h);
    let mut best = model.clone();
    let (mut best_val, mut best_epoch) = (f64::NEG_INFINITY, 0);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let (loss, gw, gb) = softmax_loss_and_grad(
            &z,
            labels,
            &split.train,
            &model.weights,
            &model.bias,
            cfg.weight_decay,
        );
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        for (wv, g) in model.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *wv -= cfg.lr * g;
        }
        for (bv, g) in model.bias.iter_mut().zip(&gb) {
            *bv -= cfg.lr * g;
        }
        let lg = logits(&z, &model.weights, &model.bias);
        let pred: Vec<usize> = (0..lg.rows()).map(|i| argmax(lg.row(i))).collect();
        let rec = EpochRecord {
            epoch,
            loss,
            train_acc: accuracy(&pred, labels, &split.train),
            val_acc: accuracy(&pred, labels, &split.val),
        };
        if rec.val_acc > best_val {
            best_val = rec.val_acc;
            best_epoch = epoch;
            best = model.clone();
        }
        history.push(rec);
        if cfg.patience > 0 && epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    Ok((best, history, best_epoch, best_val))
}

/// Feature map, propagation with the given distances, then classifier training.
pub fn fit_classifier(
    lg: &LabeledGraph,
    features: &FeatureMatrix,
    delta: &EdgeDistances,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    split.validate(lg.labels(), lg.num_classes())?;
    let h0 = cfg.feature_map.apply(features)?;
    let h = propagate(&lg.graph, &h0, delta, &cfg.prop)?;
    let (model, history, best_epoch, best_val_acc) =
        train_softmax(&h, lg.labels(), lg.num_classes(), split, cfg)?;
    Ok(FitResult {
        model,
        history,
        best_epoch,
        best_val_acc,
        features: h,
    })
}

/// Accuracy of `model` on `nodes`.
pub fn evaluate(model: &SoftmaxModel, h: &FeatureMatrix, labels: &[usize], nodes: &[usize]) -> f64 {
    accuracy(&model.predict(h), labels, nodes)
}

/// Picks the propagation config with the best validation accuracy (first
/// wins on ties) and returns its index with the fit.
pub fn select_by_validation(
    lg: &LabeledGraph,
    features: &FeatureMatrix,
    delta: &EdgeDistances,
    split: &SplitSpec,
    base: &TrainConfig,
    grid: &[PropagationConfig],
) -> Result<(usize, FitResult)> {
    let mut best: Option<(usize, FitResult)> = None;
    for (idx, prop) in grid.iter().enumerate() {
        let cfg = TrainConfig {
            prop: *prop,
            ..*base
        };
        let fit = fit_classifier(lg, features, delta, split, &cfg)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| fit.best_val_acc > b.best_val_acc)
        {
            best = Some((idx, fit));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty configuration grid".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub train: TrainConfig,
    pub distance_mode: DistanceMode,
    /// Orthogonality coefficients to sweep; `0` is the "without" arm.
    pub betas: Vec<f64>,
    pub train_frac: f64,
    pub val_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub kind: String,
    pub params: String,
    pub seed: u64,
    pub beta: f64,
    pub best_epoch: usize,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummary {
    pub kind: String,
    pub params: String,
    pub beta: f64,
    pub runs: usize,
    pub mean_test_acc: f64,
    pub std_test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub summary: Vec<AblationSummary>,
}

impl AblationTable {
    pub const CSV_HEADER: &'static str = "kind,params,seed,beta,best_epoch,val_acc,test_acc";
    pub const SUMMARY_HEADER: &'static str = "kind,params,beta,runs,mean_test_acc,std_test_acc";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.kind,
                r.params,
                r.seed,
                crate::io::fmt17(r.beta),
                r.best_epoch,
                crate::io::fmt17(r.val_acc),
                crate::io::fmt17(r.test_acc)
            ));
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(Self::SUMMARY_HEADER);
        s.push('\n');
        for r in &self.summary {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.kind,
                r.params,
                crate::io::fmt17(r.beta),
                r.runs,
                crate::io::fmt17(r.mean_test_acc),
                crate::io::fmt17(r.std_test_acc)
            ));
        }
        s
    }

    /// Mean test accuracy of `kind` at orthogonality coefficient `beta`.
    pub fn mean_for(&self, kind: &str, beta: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.kind == kind && r.beta == beta)
            .map(|r| r.mean_test_acc)
    }
}

/// Trains one model per distance kind, seed and orthogonality arm. Distances
/// are computed once per kind; seeds choose the split. Rows are ordered by
/// kind, then seed, then β.
pub fn run_ablation(
    lg: &LabeledGraph,
    features: &FeatureMatrix,
    kinds: &[DistanceKind],
    cfg: &AblationConfig,
    seeds: &[u64],
) -> Result<AblationTable> {
    cfg.train.validate()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &kind in kinds {
        let delta = compute_distances(&lg.graph, kind, cfg.distance_mode)?;
        let jobs: Vec<(u64, f64)> = seeds
            .iter()
            .flat_map(|&s| cfg.betas.iter().map(move |&b| (s, b)))
            .collect();
        let results: Vec<Result<AblationRow>> = jobs
            .par_iter()
            .map(|&(seed, beta)| {
                let split = SplitSpec::stratified(
                    lg.labels(),
                    lg.num_classes(),
                    cfg.train_frac,
                    cfg.val_frac,
                    seed,
                )?;
                let mut tc = cfg.train;
                tc.prop.beta = beta;
                let fit = fit_classifier(lg, features, &delta, &split, &tc)?;
                Ok(AblationRow {
                    kind: kind.name().to_string(),
                    params: kind.params(),
                    seed,
                    beta,
                    best_epoch: fit.best_epoch,
                    val_acc: fit.best_val_acc,
                    test_acc: evaluate(&fit.model, &fit.features, lg.labels(), &split.test),
                })
            })
            .collect();
        let kind_rows: Vec<AblationRow> = results.into_iter().collect::<Result<_>>()?;
        for &beta in &cfg.betas {
            let accs: Vec<f64> = kind_rows
                .iter()
                .filter(|r| r.beta == beta)
                .map(|r| r.test_acc)
                .collect();
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            summary.push(AblationSummary {
                kind: kind.name().to_string(),
                params: kind.params(),
                beta,
                runs: accs.len(),
                mean_test_acc: mean,
                std_test_acc: var.sqrt(),
            });
        }
        rows.extend(kind_rows);
    }
    Ok(AblationTable { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::KappaUsed;
    use crate::generators::{generate_sbm, SbmSpec};

    fn sbm(seed: u64) -> (LabeledGraph, FeatureMatrix) {
        generate_sbm(&SbmSpec {
            n: 60,
            classes: 3,
            p_in: 0.2,
            p_out: 0.02,
            feature_dim: 5,
            feature_sep: 3.0,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn stratified_split_is_disjoint_and_covers_classes() {
        let (lg, _) = sbm(1);
        let s = SplitSpec::default_for(&lg, 3).unwrap();
        s.validate(lg.labels(), 3).unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 60);
        assert_eq!(s.train.len(), 36);
        assert_eq!(s, SplitSpec::default_for(&lg, 3).unwrap());
    }

    #[test]
    fn split_validation_catches_overlap_and_missing_class() {
        let labels = vec![0, 0, 1, 1];
        let overlap = SplitSpec {
            train: vec![0, 2],
            val: vec![2],
            test: vec![],
            seed: 0,
        };
        assert!(overlap.validate(&labels, 2).is_err());
        let missing = SplitSpec {
            train: vec![0, 1],
            val: vec![2],
            test: vec![3],
            seed: 0,
        };
        assert!(matches!(
            missing.validate(&labels, 2),
            Err(Error::MissingClass(1))
        ));
    }

    #[test]
    fn classifier_gradient_matches_finite_differences() {
        let z = FeatureMatrix::from_rows(&[
            vec![0.3, -1.2, 0.5],
            vec![1.1, 0.4, -0.7],
            vec![-0.6, 0.9, 1.3],
            vec![0.2, 0.1, -0.4],
            vec![-1.5, -0.3, 0.8],
        ])
        .unwrap();
        let labels = vec![0, 1, 2, 1, 0];
        let nodes = vec![0, 1, 2, 3, 4];
        let w = FeatureMatrix::from_fn(3, 3, |a, k| 0.1 * (a as f64 - k as f64) + 0.05);
        let b = vec![0.1, -0.2, 0.05];
        let wd = 0.01;
        let (_, gw, gb) = softmax_loss_and_grad(&z, &labels, &nodes, &w, &b, wd);
        let h = 1e-6;
        for a in 0..3 {
            for k in 0..3 {
                let mut wp = w.clone();
                wp.set(a, k, w.get(a, k) + h);
                let mut wm = w.clone();
                wm.set(a, k, w.get(a, k) - h);
                let fd = (softmax_loss_and_grad(&z, &labels, &nodes, &wp, &b, wd).0
                    - softmax_loss_and_grad(&z, &labels, &nodes, &wm, &b, wd).0)
                    / (2.0 * h);
                assert!(
                    (fd - gw.get(a, k)).abs() <= 1e-6 * fd.abs().max(1e-3),
                    "{fd} {}",
                    gw.get(a, k)
                );
            }
        }
        for k in 0..3 {
            let mut bp = b.clone();
            bp[k] += h;
            let mut bm = b.clone();
            bm[k] -= h;
            let fd = (softmax_loss_and_grad(&z, &labels, &nodes, &w, &bp, wd).0
                - softmax_loss_and_grad(&z, &labels, &nodes, &w, &bm, wd).0)
                / (2.0 * h);
            assert!((fd - gb[k]).abs() <= 1e-6 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn separable_data_reaches_full_train_accuracy() {
        let h = FeatureMatrix::from_fn(20, 2, |i, c| {
            let s = if i < 10 { 1.0 } else { -1.0 };
            s * (1.0 + 0.1 * i as f64) * if c == 0 { 1.0 } else { 0.5 }
        });
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let split = SplitSpec::stratified(&labels, 2, 0.6, 0.2, 1).unwrap();
        let cfg = TrainConfig {
            weight_decay: 0.0,
            patience: 0,
            ..TrainConfig::default()
        };
        let (_, hist, _, _) = train_softmax(&h, &labels, 2, &split, &cfg).unwrap();
        assert!(hist.iter().take(500).any(|r| r.train_acc == 1.0));
    }

    #[test]
    fn ties_go_to_lowest_class() {
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
        let m = SoftmaxModel {
            mean: vec![0.0],
            scale: vec![1.0],
            weights: FeatureMatrix::zeros(1, 2),
            bias: vec![0.0, 0.0],
        };
        let h = FeatureMatrix::column(&[1.0, 2.0, 3.0, 4.0]);
        // constant predictor on a balanced 2-class set
        assert_eq!(evaluate(&m, &h, &[0, 1, 0, 1], &[0, 1, 2, 3]), 0.5);
    }

    #[test]
    fn sgc_pipeline_matches_dense_powers() {
        let (lg, x) = sbm(2);
        let split = SplitSpec::default_for(&lg, 1).unwrap();
        let cfg = TrainConfig {
            prop: PropagationConfig::smoothing(3),
            epochs: 200,
            ..TrainConfig::default()
        };
        let fit = fit_classifier(&lg, &x, &EdgeDistances::zeros(&lg.graph), &split, &cfg).unwrap();
        let a = lg.graph.dense_norm_adjacency();
        let dense = FeatureMatrix::from_dmatrix(&(&a * &a * &a * x.to_dmatrix()));
        assert!(fit.features.max_abs_diff(&dense) < 1e-12);
        let (model, ..) = train_softmax(&dense, lg.labels(), 3, &split, &cfg).unwrap();
        assert_eq!(model.predict(&dense), fit.model.predict(&fit.features));
    }

    #[test]
    fn feature_maps() {
        let (_, x) = sbm(3);
        let p = FeatureMap::RandomProjection { dim: 3, seed: 9 }
            .apply(&x)
            .unwrap();
        assert_eq!((p.rows(), p.cols()), (60, 3));
        let pca = FeatureMap::TruncatedPca { dim: 2 }.apply(&x).unwrap();
        // principal scores are uncorrelated
        let g = pca.gram();
        assert!(g.get(0, 1).abs() < 1e-9 * g.get(0, 0));
        assert!(g.get(0, 0) >= g.get(1, 1));
        assert!(FeatureMap::TruncatedPca { dim: 9 }.apply(&x).is_err());
    }

    #[test]
    fn ablation_is_deterministic_and_shaped() {
        let (lg, x) = sbm(4);
        let cfg = AblationConfig {
            train: TrainConfig {
                epochs: 50,
                ..TrainConfig::default()
            },
            distance_mode: DistanceMode::Exact,
            betas: vec![0.0, 0.05],
            train_frac: 0.6,
            val_frac: 0.2,
        };
        let kinds = [DistanceKind::Vdd { t: 2 }, DistanceKind::Zero];
        let a = run_ablation(&lg, &x, &kinds, &cfg, &[1, 2]).unwrap();
        let b = run_ablation(&lg, &x, &kinds, &cfg, &[1, 2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2 * 2 * 2);
        assert_eq!(a.summary.len(), 4);
        assert_eq!(a.to_csv().lines().count(), 9);
    }

    #[test]
    fn zero_distance_equals_no_distance_term() {
        let (lg, x) = sbm(5);
        let split = SplitSpec::default_for(&lg, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        let zero = EdgeDistances::zeros(&lg.graph);
        let a = fit_classifier(&lg, &x, &zero, &split, &cfg).unwrap();
        let no_eta = TrainConfig {
            prop: PropagationConfig {
                eta: 0.0,
                ..cfg.prop
            },
            ..cfg
        };
        let vdd = EdgeDistances {
            kind: DistanceKind::Vdd { t: 1 },
            kappa: KappaUsed::Exact,
            values: vec![1.0; lg.graph.edge_count()],
        };
        let b = fit_classifier(&lg, &x, &vdd, &split, &no_eta).unwrap();
        assert_eq!(a.features, b.features);
    }
}
