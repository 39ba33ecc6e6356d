//! Truncated diffusion distances from a handful of Lanczos eigenpairs,
//! compared against the exact random-walk series.

use ddsm::distances::{exact_diffusion_oracle, truncated_distances, DistanceKind};
use ddsm::generators::erdos_renyi_connected;
use ddsm::spectral::{eig_truncated, LanczosConfig, OperatorKind, Selection};

fn main() -> ddsm::Result<()> {
    let g = erdos_renyi_connected(300, 0.03, 7)?;
    println!("graph: n={} m={}", g.node_count(), g.edge_count());

    let cfg = LanczosConfig::default();
    let top = eig_truncated(
        &g,
        OperatorKind::NormAdjacency,
        Selection::LargestAbs,
        6,
        &cfg,
    )?;
    println!(
        "largest |λ| of the normalized adjacency: {:.6?}",
        top.eigenvalues
    );

    let kinds = [
        DistanceKind::Vdd { t: 10 },
        DistanceKind::Prdd { gamma: 0.9 },
        DistanceKind::Hkdd { gamma: 10.0 },
    ];
    for kind in kinds {
        let exact = exact_diffusion_oracle(&g, kind)?;
        print!("{:>18}:", kind.to_string());
        for kappa in [8, 32, 128] {
            let approx = truncated_distances(&g, kind, kappa, &cfg)?;
            let err = exact
                .values
                .iter()
                .zip(&approx.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            print!("  κ={kappa:<3} max err {err:.2e}");
        }
        println!("  (max distance {:.4})", exact.max());
    }
    Ok(())
}
