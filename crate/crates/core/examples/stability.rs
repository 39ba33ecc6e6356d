//! Edge-weight perturbations of growing size and the resulting change in
//! diffusion distances.

use ddsm::distances::{perturbation_stability_probe, DistanceKind, STABILITY_EPSILONS};
use ddsm::generators::erdos_renyi_connected;

fn main() -> ddsm::Result<()> {
    let g = erdos_renyi_connected(40, 0.15, 21)?;
    println!("ε: {STABILITY_EPSILONS:?}");
    for kind in [
        DistanceKind::Vdd { t: 3 },
        DistanceKind::Prdd { gamma: 0.9 },
        DistanceKind::Hkdd { gamma: 1.0 },
    ] {
        let rep = perturbation_stability_probe(&g, kind, 5, 20, 1)?;
        let worst: Vec<String> = (0..rep.epsilons.len())
            .map(|i| {
                rep.trials
                    .iter()
                    .map(|t| t.max_changes[i])
                    .fold(0.0, f64::max)
            })
            .map(|v| format!("{v:.2e}"))
            .collect();
        println!(
            "{:>18}: monotone {:.0}%  ε=0 change {:.1e}  worst change per ε [{}]",
            kind.to_string(),
            100.0 * rep.monotone_fraction,
            rep.zero_change,
            worst.join(", ")
        );
    }
    Ok(())
}
