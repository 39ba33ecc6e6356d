//! Dense reference computations written directly from the definitions, kept
//! separate from the library code paths they check.
#![allow(dead_code)]

use ddsm::distances::DistanceKind;
use ddsm::{FeatureMatrix, Graph};
use nalgebra::{DMatrix, SymmetricEigen};

pub fn adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for e in g.edges() {
        a[(e.u, e.v)] += e.w;
        if e.u != e.v {
            a[(e.v, e.u)] += e.w;
        }
    }
    a
}

pub fn degrees(g: &Graph) -> Vec<f64> {
    let a = adjacency(g);
    (0..g.node_count()).map(|i| a.row(i).sum()).collect()
}

/// `D^{-1/2} A D^{-1/2}`.
pub fn norm_adjacency(g: &Graph) -> DMatrix<f64> {
    let d = degrees(g);
    let a = adjacency(g);
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] / (d[i] * d[j]).sqrt()
    })
}

/// `D^{-1} A`.
pub fn transition(g: &Graph) -> DMatrix<f64> {
    let d = degrees(g);
    let a = adjacency(g);
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / d[i])
}

fn edge_norms(g: &Graph, z: &DMatrix<f64>) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|e| (z.row(e.u) - z.row(e.v)).norm())
        .collect()
}

/// Random-walk series embeddings `Σ_s c_s P^s D^{-1/2}` (with the right
/// `D^{-1/2}`), evaluated on every canonical edge.
pub fn series_distances(g: &Graph, kind: DistanceKind) -> Vec<f64> {
    let n = g.node_count();
    let p = transition(g);
    let d = degrees(g);
    let isd = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        d.iter().map(|x| 1.0 / x.sqrt()),
    ));
    let acc = walk_series(&p, kind);
    edge_norms(g, &(acc * isd))
}

/// Heat-kernel series `Σ_s e^{−γ} γ^s/s! P^s` without the right `D^{-1/2}`.
pub fn literal_heat_distances(g: &Graph, gamma: f64) -> Vec<f64> {
    let acc = walk_series(&transition(g), DistanceKind::Hkdd { gamma });
    edge_norms(g, &acc)
}

fn walk_series(p: &DMatrix<f64>, kind: DistanceKind) -> DMatrix<f64> {
    let n = p.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    match kind {
        DistanceKind::Vdd { t } => (0..t).fold(id, |m, _| m * p),
        DistanceKind::Prdd { gamma } => {
            // tail Σ_{s>T} γ^s ‖P^s‖ ≤ γ^{T+1}/(1−γ)
            let mut acc = id.clone();
            let mut term = id;
            let mut c = 1.0;
            while c * gamma / (1.0 - gamma) >= 1e-15 {
                term = &term * p;
                c *= gamma;
                acc += &term * c;
            }
            acc
        }
        DistanceKind::Hkdd { gamma } => {
            let mut w = (-gamma).exp();
            let mut acc = &id * w;
            let mut term = id;
            let mut cum = w;
            let mut s = 0.0;
            while cum < 1.0 - 1e-15 && !(s > gamma && w < 1e-20) {
                s += 1.0;
                term = &term * p;
                w *= gamma / s;
                acc += &term * w;
                cum += w;
            }
            acc
        }
        other => panic!("{other} is not a diffusion distance"),
    }
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn sym_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn to_dmatrix(h: &FeatureMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(h.rows(), h.cols(), |i, j| h.get(i, j))
}
