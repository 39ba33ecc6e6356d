//! Layer-by-layer diagnostics for plain smoothing and for distance-guided
//! propagation with the orthogonality term.
//!
//! The column-normalized orthogonality update does not descend the raw
//! `‖HᵀH − I‖²` penalty, so large β over many layers inflates the features;
//! keep β small when stacking deep.

use ddsm::distances::{compute_distances, DistanceKind, DistanceMode, EdgeDistances};
use ddsm::generators::{generate_sbm, SbmSpec};
use ddsm::propagation::{propagate_with_diagnostics, PropagationConfig};

fn main() -> ddsm::Result<()> {
    let spec = SbmSpec {
        n: 200,
        classes: 3,
        p_in: 0.1,
        p_out: 0.01,
        feature_dim: 8,
        feature_sep: 1.0,
        seed: 11,
    };
    let (lg, x) = generate_sbm(&spec)?;
    let delta = compute_distances(&lg.graph, DistanceKind::Vdd { t: 4 }, DistanceMode::Exact)?;

    let runs = [
        (
            "smoothing",
            PropagationConfig::smoothing(16),
            EdgeDistances::zeros(&lg.graph),
        ),
        (
            "ddsm",
            PropagationConfig {
                alpha: 0.1,
                beta: 0.01,
                eta: 1.0,
                layers: 16,
                ..PropagationConfig::default()
            },
            delta,
        ),
    ];
    for (name, cfg, d) in runs {
        let (_, layers) = propagate_with_diagnostics(&lg.graph, &x, &d, &cfg, Some(&lg))?;
        println!("{name}");
        println!(
            "  {:>5} {:>12} {:>10} {:>8} {:>8}",
            "layer", "objective", "dirichlet", "smv", "hos"
        );
        for l in layers
            .iter()
            .filter(|l| l.layer.is_power_of_two() || l.layer == 0)
        {
            println!(
                "  {:>5} {:>12.4} {:>10.4} {:>8.4} {:>8.4}",
                l.layer,
                l.objective,
                l.report.dirichlet,
                l.report.smv,
                l.report.hos.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
