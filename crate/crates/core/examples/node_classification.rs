//! Trains a softmax classifier on propagated SBM features, picking the
//! propagation setting by validation accuracy.

use ddsm::distances::{compute_distances, DistanceKind, DistanceMode};
use ddsm::generators::{generate_sbm, SbmSpec};
use ddsm::pipeline::{evaluate, select_by_validation, SplitSpec, TrainConfig};
use ddsm::propagation::PropagationConfig;
use ddsm::spectral::LanczosConfig;

fn main() -> ddsm::Result<()> {
    let spec = SbmSpec {
        n: 300,
        classes: 3,
        p_in: 0.06,
        p_out: 0.01,
        feature_dim: 16,
        feature_sep: 0.8,
        seed: 2,
    };
    let (lg, x) = generate_sbm(&spec)?;
    let split = SplitSpec::default_for(&lg, 0)?;

    let mut grid = Vec::new();
    for alpha in [0.05, 0.1, 0.2] {
        for beta in [0.0, 0.05] {
            grid.push(PropagationConfig {
                alpha,
                beta,
                eta: 1.0,
                layers: 8,
                ..PropagationConfig::default()
            });
        }
    }
    let mode = DistanceMode::Truncated {
        kappa: 32,
        lanczos: LanczosConfig::default(),
    };
    let kinds = [
        DistanceKind::Zero,
        DistanceKind::Vdd { t: 10 },
        DistanceKind::Prdd { gamma: 0.9 },
        DistanceKind::Hkdd { gamma: 10.0 },
    ];
    for kind in kinds {
        let delta = compute_distances(&lg.graph, kind, mode)?;
        let (idx, fit) =
            select_by_validation(&lg, &x, &delta, &split, &TrainConfig::default(), &grid)?;
        let test = evaluate(&fit.model, &fit.features, lg.labels(), &split.test);
        let p = grid[idx];
        println!(
            "{:>18}: α={} β={} val={:.3} test={:.3} (epoch {})",
            kind.to_string(),
            p.alpha,
            p.beta,
            fit.best_val_acc,
            test,
            fit.best_epoch
        );
    }
    Ok(())
}
