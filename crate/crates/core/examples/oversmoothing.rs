//! Repeated normalized-adjacency smoothing collapses features onto the
//! stationary direction; this prints how fast.

use ddsm::generators::{erdos_renyi_connected, rng};
use ddsm::metrics::check_oversmoothing_limit;
use ddsm::FeatureMatrix;
use rand::Rng;

fn main() -> ddsm::Result<()> {
    let mut r = rng(5);
    for (n, p) in [(50, 0.1), (200, 0.03), (400, 0.01)] {
        let g = erdos_renyi_connected(n, p, 5)?;
        let h0 = FeatureMatrix::from_fn(n, 4, |_, _| r.random_range(-1.0..1.0));
        let rep = check_oversmoothing_limit(&g, &h0, 1e-8, 100_000)?;
        println!(
            "n={n:<4} |λ₂|={:.4} layers={:<6} residual={:.2e} σ₂/σ₁={:.2e} passed={}",
            rep.lambda2_abs,
            rep.k,
            rep.residual,
            rep.sigma2 / rep.sigma1,
            rep.passed
        );
    }
    Ok(())
}
