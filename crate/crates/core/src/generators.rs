//! Seeded synthetic graphs: stochastic block models with Gaussian node
//! features, connected Erdős–Rényi graphs, and a few closed-form families.
//!
//! All randomness comes from [`rng`], a ChaCha8 stream seeded with
//! `ChaCha8Rng::seed_from_u64`. ChaCha is a counter-based generator whose
//! output is fixed by the seed on every platform, so generated graphs and
//! features are reproducible bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, Graph, LabeledGraph};
use crate::matrix::FeatureMatrix;
use crate::{Error, Result};

const ISOLATION_RETRIES: usize = 100;

pub type Prng = ChaCha8Rng;

pub fn rng(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stochastic block model with class-conditional Gaussian features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub n: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_sep: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.classes == 0 || self.n / self.classes < 2 {
            return bad(format!(
                "n={} cannot be split into {} blocks of size >= 2",
                self.n, self.classes
            ));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name}={p} must lie in [0, 1]"));
            }
        }
        if self.feature_dim < self.classes {
            return bad(format!(
                "feature_dim={} must be at least the class count {}",
                self.feature_dim, self.classes
            ));
        }
        if !self.feature_sep.is_finite() || self.feature_sep < 0.0 {
            return bad(format!(
                "feature_sep={} must be finite and >= 0",
                self.feature_sep
            ));
        }
        Ok(())
    }

    /// Block index of every node; blocks are contiguous and the first
    /// `n mod classes` blocks hold one extra node.
    pub fn block_labels(&self) -> Vec<usize> {
        let base = self.n / self.classes;
        let extra = self.n % self.classes;
        let mut labels = Vec::with_capacity(self.n);
        for c in 0..self.classes {
            let size = base + usize::from(c < extra);
            labels.extend(std::iter::repeat_n(c, size));
        }
        labels
    }
}

/// Samples an SBM graph and its feature matrix.
///
/// Class `c` has mean `feature_sep / sqrt(2) * e_c`, so any two class means
/// are `feature_sep` apart; features add unit-variance Gaussian noise. A node
/// left isolated has its incident pairs resampled up to 100 times.
pub fn generate_sbm(spec: &SbmSpec) -> Result<(LabeledGraph, FeatureMatrix)> {
    spec.validate()?;
    let mut rng = rng(spec.seed);
    let labels = spec.block_labels();
    let n = spec.n;
    let prob = |i: usize, j: usize| {
        if labels[i] == labels[j] {
            spec.p_in
        } else {
            spec.p_out
        }
    };

    let mut adj = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < prob(i, j) {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
            }
        }
    }
    for i in 0..n {
        let mut tries = 0;
        while !(0..n).any(|j| adj[i * n + j]) {
            if tries == ISOLATION_RETRIES {
                return Err(Error::Generator(format!(
                    "node {i} still isolated after {ISOLATION_RETRIES} resamples"
                )));
            }
            for j in (0..n).filter(|&j| j != i) {
                if rng.random::<f64>() < prob(i, j) {
                    adj[i * n + j] = true;
                    adj[j * n + i] = true;
                }
            }
            tries += 1;
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i * n + j] {
                edges.push((i, j, 1.0));
            }
        }
    }
    let graph = build_graph(&edges, n, false)?;

    let shift = spec.feature_sep / std::f64::consts::SQRT_2;
    let d = spec.feature_dim;
    let mut x = FeatureMatrix::zeros(n, d);
    for (i, &label) in labels.iter().enumerate() {
        let row = x.row_mut(i);
        for (k, v) in row.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *v = noise + if k == label { shift } else { 0.0 };
        }
    }
    let lg = LabeledGraph::new(graph, labels, spec.classes)?;
    Ok((lg, x))
}

/// Erdős–Rényi `G(n, p)` made connected by linking each extra component to
/// a random earlier node.
pub fn erdos_renyi_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter("need n >= 2".into()));
    }
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    connect_components(n, &mut edges, &mut rng);
    build_graph(&edges, n, false)
}

/// Same as [`erdos_renyi_connected`] with edge weights uniform in `[lo, hi)`.
pub fn weighted_erdos_renyi_connected(
    n: usize,
    p: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<Graph> {
    let g = erdos_renyi_connected(n, p, seed)?;
    let mut rng = rng(seed ^ 0x005e_ed0f_ea57);
    let edges: Vec<_> = g
        .edges()
        .iter()
        .map(|e| (e.u, e.v, rng.random_range(lo..hi)))
        .collect();
    build_graph(&edges, n, false)
}

fn connect_components(n: usize, edges: &mut Vec<(usize, usize, f64)>, rng: &mut Prng) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v, _) in edges.iter() {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
        }
    }
    // components ordered by their smallest node
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(i);
    }
    let mut merged = comps[0].clone();
    for comp in &comps[1..] {
        let target = merged[rng.random_range(0..merged.len())];
        let head = comp[0];
        edges.push((target.min(head), target.max(head), 1.0));
        merged.extend_from_slice(comp);
    }
}

pub fn path_graph(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1, 1.0)).collect();
    build_graph(&edges, n, false)
}

pub fn cycle_graph(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    build_graph(&edges, n, false)
}

pub fn complete_graph(n: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, 1.0));
        }
    }
    build_graph(&edges, n, false)
}

/// Circulant graph: `i ~ i ± s (mod n)` for each offset `s`. Always regular.
pub fn circulant_graph(n: usize, offsets: &[usize]) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 0..n {
        for &s in offsets {
            let j = (i + s) % n;
            if i != j {
                edges.push((i.min(j), i.max(j), 1.0));
            }
        }
    }
    edges.sort_by_key(|a| (a.0, a.1));
    edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    build_graph(&edges, n, false)
}

/// Random regular graph from the circulant family with `k` distinct offsets.
pub fn random_circulant(n: usize, k: usize, seed: u64) -> Result<Graph> {
    let mut rng = rng(seed);
    let mut offs: Vec<usize> = vec![1];
    let max_off = (n - 1) / 2;
    while offs.len() < k.min(max_off) {
        let s = rng.random_range(1..=max_off);
        if !offs.contains(&s) {
            offs.push(s);
        }
    }
    circulant_graph(n, &offs)
}
