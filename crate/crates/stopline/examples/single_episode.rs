//! One complete simulated episode on the isolated intersection: generate
//! demand, run the decision loop to drain, and print the delay summary, the
//! solver effort totals, and the first seconds of the signal trace.

use stopline::experiment::{build_scenario, ControllerKind};
use stopline::sim::{run_episode, summarize, SimConfig};

fn main() {
    let scenario = build_scenario("isolated").expect("built-in scenario");
    let sim = SimConfig::default();
    let planner = ControllerKind::UTuS.planner(&scenario, &sim, 10, false, 0.5);
    let demand = scenario.demand_at(900.0);

    let result =
        run_episode(&scenario.topology, &planner, &demand, &sim, 7).expect("episode runs");
    let summary = summarize(&result.finished);

    println!("generated {} vehicles, drained at {:.1}s", result.generated, result.end_time);
    println!(
        "finished {} vehicles, mean delay {:.2}s, max delay {:.2}s",
        summary.vehicles, summary.mean_delay, summary.max_delay
    );
    println!(
        "decisions {}, solver nodes {}, budget exhausted {} times",
        result.totals.decisions, result.totals.solver_nodes, result.totals.budget_exhausted
    );

    println!("first 60s of the signal trace:");
    for ev in result.trace.iter().filter(|ev| ev.t <= 60) {
        println!("  t={:>3} {:?}", ev.t, ev.kind);
    }
}
