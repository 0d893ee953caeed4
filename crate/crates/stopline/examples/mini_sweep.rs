//! A two-minute controller comparison on the isolated intersection:
//! turn-sampled versus expected-traffic scheduling over a few seeds, written
//! to a temporary directory the way the full experiment harness does it.

use stopline::experiment::{build_scenario, ControllerKind, SweepSpec};
use stopline::sim::DemandProfile;

fn main() {
    let mut scenario = build_scenario("isolated").expect("built-in scenario");
    // Two minutes of generation keep the example quick; the full harness
    // default is fifteen.
    scenario.demand = DemandProfile::uniform(scenario.demand.vehicles_per_hour, 120.0);

    let mut spec = SweepSpec::new(scenario);
    spec.controllers = vec![ControllerKind::UTuS, ControllerKind::USUR];
    spec.sample_counts = vec![10];
    spec.seeds = (0..4).collect();
    spec.levels = vec![900.0];
    spec.time_limit = 0.2;

    let dir = std::env::temp_dir().join("stopline_mini_sweep");
    let out = stopline::experiment::run_sweep(&spec, &dir).expect("sweep runs");

    println!("cells ({} runs) written under {}", out.cells.len(), dir.display());
    println!("controller  seeds  mean-delay  std     vs-baseline");
    for row in &out.summary {
        let (mean, std) = row.delay.expect("no failed cells in this sweep");
        let vs = match (row.pct_vs_baseline, &row.baseline) {
            (Some((m, s)), Some(b)) => format!("{m:+.1}% +/- {s:.1} vs {b}"),
            _ => "baseline".into(),
        };
        println!(
            "{:<10}  {:>5}  {:>10.2}  {:>6.2}  {vs}",
            row.controller.label(row.samples),
            row.seeds,
            mean,
            std
        );
    }
}
