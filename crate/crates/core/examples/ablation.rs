//! Distance kind × orthogonality ablation over several random splits.

use ddsm::distances::{DistanceKind, DistanceMode};
use ddsm::generators::{generate_sbm, SbmSpec};
use ddsm::pipeline::{run_ablation, AblationConfig, TrainConfig};

fn main() -> ddsm::Result<()> {
    let spec = SbmSpec {
        n: 150,
        classes: 3,
        p_in: 0.12,
        p_out: 0.02,
        feature_dim: 8,
        feature_sep: 1.0,
        seed: 9,
    };
    let (lg, x) = generate_sbm(&spec)?;
    let kinds = [
        DistanceKind::Vdd { t: 10 },
        DistanceKind::Hkdd { gamma: 10.0 },
        DistanceKind::Spd,
        DistanceKind::Zero,
    ];
    let cfg = AblationConfig {
        train: TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        },
        distance_mode: DistanceMode::Exact,
        betas: vec![0.0, 0.1],
        train_frac: 0.6,
        val_frac: 0.2,
    };
    let table = run_ablation(&lg, &x, &kinds, &cfg, &[0, 1, 2, 3, 4])?;
    for s in &table.summary {
        println!(
            "{:>8} {:<10} β={:<4} {:.3} ± {:.3} over {} splits",
            s.kind, s.params, s.beta, s.mean_test_acc, s.std_test_acc, s.runs
        );
    }
    Ok(())
}
