//! Stress-majorization message passing: the objective, its three terms and
//! the layer update obtained as a half gradient step on it.
//!
//! The objective on node representations `H` is
//!
//! ```text
//! L(H) = (1 − α − β) S(H) + β C(H) + α ‖H − H0‖²_F
//! S(H) = Σ_edges w_ij (‖H_i/√d_i − H_j/√d_j‖ − η Δ_ij)²
//! C(H) = ½ ‖HᵀH − I‖²_F
//! ```
//!
//! and one layer computes, per node,
//!
//! ```text
//! (1−α−β) Σ_j w_ij H_j/√(d_i d_j)
//!   + η(1−α−β) Σ_j w_ij Δ_ij (H_i/d_i − H_j/√(d_i d_j)) / max(r_ij, eps_denom)
//!   + β T_i + α H0_i
//! ```
//!
//! with `r_ij = ‖H_i/√d_i − H_j/√d_j‖`. Since `∇C = 2(HHᵀH − H)`, the
//! choice `T = 2H − HHᵀH` makes the layer exactly `H − ½∇L(H)`; see
//! [`ThirdTerm`] for the other variants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::EdgeDistances;
use crate::graph::{Graph, LabeledGraph};
use crate::matrix::{norm, FeatureMatrix};
use crate::metrics::{diagnostics, DiagnosticsReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThirdTerm {
    /// `T = 2H − HHᵀH`, the exact descent direction of the orthogonality term.
    Raw,
    /// `T = HHᵀH`, the cubic term alone.
    RawAsPrinted,
    /// `T = ĤĤᵀH` with unit-norm columns in `Ĥ` (zero columns stay zero);
    /// keeps the term's scale bounded.
    ColumnNormalized,
}

impl std::str::FromStr for ThirdTerm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "raw-as-printed" => Ok(Self::RawAsPrinted),
            "column-normalized" => Ok(Self::ColumnNormalized),
            _ => Err(Error::InvalidParameter(format!("unknown third term {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub layers: usize,
    /// Floor on the stress denominator `r_ij`.
    pub eps_denom: f64,
    pub third_term: ThirdTerm,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.0,
            eta: 1.0,
            layers: 4,
            eps_denom: 1e-8,
            third_term: ThirdTerm::ColumnNormalized,
        }
    }
}

impl PropagationConfig {
    /// Plain symmetric-normalized smoothing, `H ← ÂH`.
    pub fn smoothing(layers: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            eta: 0.0,
            layers,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return bad(format!(
                "alpha={} and beta={} must lie in [0, 1]",
                self.alpha, self.beta
            ));
        }
        if self.alpha + self.beta > 1.0 + 1e-12 {
            return bad(format!(
                "alpha + beta = {} exceeds 1",
                self.alpha + self.beta
            ));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta={} must be finite and >= 0", self.eta));
        }
        if self.eps_denom.is_nan() || self.eps_denom <= 0.0 {
            return bad(format!("eps_denom={} must be positive", self.eps_denom));
        }
        Ok(())
    }

    fn smooth_coef(&self) -> f64 {
        (1.0 - self.alpha - self.beta).max(0.0)
    }
}

fn check_shapes(g: &Graph, h: &FeatureMatrix, delta: &EdgeDistances) -> Result<()> {
    if h.rows() != g.node_count() {
        return Err(Error::DimensionMismatch {
            what: "feature rows",
            expected: g.node_count(),
            got: h.rows(),
        });
    }
    delta.check_aligned(g)
}

/// `S = Σ_edges w_ij (‖H_i/√d_i − H_j/√d_j‖ − η Δ_ij)²`.
pub fn stress_loss(g: &Graph, h: &FeatureMatrix, delta: &EdgeDistances, eta: f64) -> Result<f64> {
    check_shapes(g, h, delta)?;
    let isd = g.inv_sqrt_degrees();
    Ok(g.edges()
        .iter()
        .zip(&delta.values)
        .map(|(e, &dd)| {
            let r = h
                .row(e.u)
                .iter()
                .zip(h.row(e.v))
                .map(|(a, b)| (a * isd[e.u] - b * isd[e.v]).powi(2))
                .sum::<f64>()
                .sqrt();
            e.w * (r - eta * dd).powi(2)
        })
        .sum())
}

/// `C = ½ ‖HᵀH − I‖²_F`.
pub fn orth_loss(h: &FeatureMatrix) -> f64 {
    let g = h.gram();
    let d = g.rows();
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            let v = g.get(a, b) - if a == b { 1.0 } else { 0.0 };
            s += v * v;
        }
    }
    0.5 * s
}

pub fn ddsm_objective(
    g: &Graph,
    h: &FeatureMatrix,
    h0: &FeatureMatrix,
    delta: &EdgeDistances,
    cfg: &PropagationConfig,
) -> Result<f64> {
    cfg.validate()?;
    if (h.rows(), h.cols()) != (h0.rows(), h0.cols()) {
        return Err(Error::DimensionMismatch {
            what: "H0 entries",
            expected: h.rows() * h.cols(),
            got: h0.rows() * h0.cols(),
        });
    }
    let s = stress_loss(g, h, delta, cfg.eta)?;
    let fit = h.sub(h0).frobenius_norm().powi(2);
    Ok(cfg.smooth_coef() * s + cfg.beta * orth_loss(h) + cfg.alpha * fit)
}

fn third_term(h: &FeatureMatrix, kind: ThirdTerm) -> FeatureMatrix {
    match kind {
        ThirdTerm::Raw => {
            let cubic = h.matmul(&h.gram());
            FeatureMatrix::from_fn(h.rows(), h.cols(), |i, c| {
                2.0 * h.get(i, c) - cubic.get(i, c)
            })
        }
        ThirdTerm::RawAsPrinted => h.matmul(&h.gram()),
        ThirdTerm::ColumnNormalized => {
            let norms: Vec<f64> = (0..h.cols()).map(|c| norm(&h.col_vec(c))).collect();
            let hn = FeatureMatrix::from_fn(h.rows(), h.cols(), |i, c| {
                if norms[c] > 0.0 {
                    h.get(i, c) / norms[c]
                } else {
                    0.0
                }
            });
            hn.matmul(&hn.transpose_mul(h))
        }
    }
}

/// One propagation layer. All node updates read the same snapshot `H`.
pub fn ddsm_layer(
    g: &Graph,
    h: &FeatureMatrix,
    h0: &FeatureMatrix,
    delta: &EdgeDistances,
    cfg: &PropagationConfig,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    check_shapes(g, h, delta)?;
    if (h0.rows(), h0.cols()) != (h.rows(), h.cols()) {
        return Err(Error::DimensionMismatch {
            what: "H0 entries",
            expected: h.rows() * h.cols(),
            got: h0.rows() * h0.cols(),
        });
    }
    let d = h.cols();
    let cs = cfg.smooth_coef();
    let rep = cfg.eta * cs;
    let isd = g.inv_sqrt_degrees();
    let degrees = g.degrees();
    let t = (cfg.beta != 0.0).then(|| third_term(h, cfg.third_term));

    let mut out = FeatureMatrix::zeros(h.rows(), d);
    if d == 0 {
        return Ok(out);
    }
    let failures: Vec<(usize, &'static str)> = out
        .as_mut_slice()
        .par_chunks_mut(d)
        .enumerate()
        .filter_map(|(i, orow)| {
            let hi = h.row(i);
            let mut smooth = vec![0.0; d];
            let mut repel = vec![0.0; d];
            for (j, w, e) in g.incident_edges(i) {
                let hj = h.row(j);
                let c = w * isd[i] * isd[j];
                for (s, v) in smooth.iter_mut().zip(hj) {
                    *s += c * v;
                }
                let dd = delta.values[e];
                if rep != 0.0 && dd != 0.0 && j != i {
                    let r = hi
                        .iter()
                        .zip(hj)
                        .map(|(a, b)| (a * isd[i] - b * isd[j]).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        .max(cfg.eps_denom);
                    let k = w * dd / r;
                    for ((p, a), b) in repel.iter_mut().zip(hi).zip(hj) {
                        *p += k * (a / degrees[i] - b * isd[i] * isd[j]);
                    }
                }
            }
            for c in 0..d {
                let mut v = cs * smooth[c] + rep * repel[c] + cfg.alpha * h0.get(i, c);
                if let Some(t) = &t {
                    v += cfg.beta * t.get(i, c);
                }
                orow[c] = v;
            }
            if orow.iter().all(|v| v.is_finite()) {
                return None;
            }
            // name the first offending term
            let term = if !smooth.iter().all(|v| v.is_finite()) {
                "aggregation"
            } else if !repel.iter().all(|v| v.is_finite()) {
                "distance"
            } else if t
                .as_ref()
                .is_some_and(|t| !t.row(i).iter().all(|v| v.is_finite()))
            {
                "orthogonality"
            } else {
                "residual"
            };
            Some((i, term))
        })
        .collect();
    if let Some(&(node, term)) = failures.iter().min_by_key(|f| f.0) {
        return Err(Error::NonFinite { node, term });
    }
    Ok(out)
}

/// Per-layer record kept when diagnostics are requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerDiagnostics {
    pub layer: usize,
    pub objective: f64,
    pub report: DiagnosticsReport,
}

/// Applies `cfg.layers` layers starting from `H0`.
pub fn propagate(
    g: &Graph,
    h0: &FeatureMatrix,
    delta: &EdgeDistances,
    cfg: &PropagationConfig,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    check_shapes(g, h0, delta)?;
    h0.ensure_finite()?;
    let mut h = h0.clone();
    for _ in 0..cfg.layers {
        h = ddsm_layer(g, &h, h0, delta, cfg)?;
    }
    Ok(h)
}

/// [`propagate`] with diagnostics for `H0` (layer 0) and after every layer.
pub fn propagate_with_diagnostics(
    g: &Graph,
    h0: &FeatureMatrix,
    delta: &EdgeDistances,
    cfg: &PropagationConfig,
    labels: Option<&LabeledGraph>,
) -> Result<(FeatureMatrix, Vec<LayerDiagnostics>)> {
    cfg.validate()?;
    check_shapes(g, h0, delta)?;
    h0.ensure_finite()?;
    let record = |layer: usize, h: &FeatureMatrix| -> Result<LayerDiagnostics> {
        Ok(LayerDiagnostics {
            layer,
            objective: ddsm_objective(g, h, h0, delta, cfg)?,
            report: diagnostics(g, h, labels)?,
        })
    };
    let mut h = h0.clone();
    let mut history = vec![record(0, &h)?];
    for k in 0..cfg.layers {
        h = ddsm_layer(g, &h, h0, delta, cfg)?;
        history.push(record(k + 1, &h)?);
    }
    Ok((h, history))
}

/// Central-difference gradient of [`ddsm_objective`] with step `step`.
pub fn finite_difference_gradient(
    g: &Graph,
    h: &FeatureMatrix,
    h0: &FeatureMatrix,
    delta: &EdgeDistances,
    cfg: &PropagationConfig,
    step: f64,
) -> Result<FeatureMatrix> {
    let mut grad = FeatureMatrix::zeros(h.rows(), h.cols());
    let mut probe = h.clone();
    for i in 0..h.rows() {
        for c in 0..h.cols() {
            let v = h.get(i, c);
            probe.set(i, c, v + step);
            let up = ddsm_objective(g, &probe, h0, delta, cfg)?;
            probe.set(i, c, v - step);
            let down = ddsm_objective(g, &probe, h0, delta, cfg)?;
            probe.set(i, c, v);
            grad.set(i, c, (up - down) / (2.0 * step));
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    /// `‖(layer(H) − H) + ½∇L(H)‖_F`.
    pub abs_error: f64,
    pub grad_norm: f64,
    /// `abs_error / (1 + ‖∇L‖_F)`.
    pub rel_error: f64,
}

/// Compares one layer step with the half negative finite-difference gradient.
pub fn check_layer_gradient(
    g: &Graph,
    h: &FeatureMatrix,
    h0: &FeatureMatrix,
    delta: &EdgeDistances,
    cfg: &PropagationConfig,
    step: f64,
) -> Result<GradientCheck> {
    let next = ddsm_layer(g, h, h0, delta, cfg)?;
    let grad = finite_difference_gradient(g, h, h0, delta, cfg, step)?;
    let resid = FeatureMatrix::from_fn(h.rows(), h.cols(), |i, c| {
        next.get(i, c) - h.get(i, c) + 0.5 * grad.get(i, c)
    });
    let abs_error = resid.frobenius_norm();
    let grad_norm = grad.frobenius_norm();
    Ok(GradientCheck {
        abs_error,
        grad_norm,
        rel_error: abs_error / (1.0 + grad_norm),
    })
}
