//! Runs the built-in property suites at reduced scale and prints a summary.

use ddsm::checks::{run_checks, CheckOptions, CheckScale, Suite};

fn main() -> ddsm::Result<()> {
    let opts = CheckOptions {
        seed: 0,
        scale: CheckScale::quick(),
        graph: None,
    };
    let report = run_checks(&Suite::ALL, &opts)?;
    for s in &report.suites {
        println!(
            "{:<10} {:?} {}/{} cases",
            s.suite.name(),
            s.status,
            s.cases - s.failures,
            s.cases
        );
        for (k, v) in &s.metrics {
            println!("    {k} = {v:.3e}");
        }
    }
    println!("all passed: {}", report.passed);
    Ok(())
}
