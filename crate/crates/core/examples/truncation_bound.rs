//! Watches the two-sided truncation bound tighten as κ grows.

use ddsm::distances::{check_truncation_bound, DistanceKind};
use ddsm::generators::weighted_erdos_renyi_connected;

fn main() -> ddsm::Result<()> {
    let g = weighted_erdos_renyi_connected(80, 0.1, 0.5, 2.0, 3)?;
    for kind in [
        DistanceKind::Vdd { t: 3 },
        DistanceKind::Prdd { gamma: 0.7 },
        DistanceKind::Hkdd { gamma: 2.0 },
    ] {
        println!("{kind}");
        println!(
            "  {:>4} {:>12} {:>12} {:>12} holds",
            "κ", "λ_κ", "ε", "max gap"
        );
        for kappa in [2, 5, 10, 20, 40, 80] {
            let r = check_truncation_bound(&g, kind, kappa)?;
            println!(
                "  {:>4} {:>12.4e} {:>12.4e} {:>12.4e} {}",
                r.kappa, r.lambda_kappa, r.epsilon, r.max_gap, r.passed
            );
        }
    }
    Ok(())
}
