//! Builds the three bundled scenario networks, prints their shape, and runs
//! the structural validator over each. A deliberately broken copy shows what
//! a rejection looks like.

use stopline::experiment::{build_scenario, SCENARIO_NAMES};
use stopline::model::validate_network;

fn main() {
    for name in SCENARIO_NAMES {
        let scenario = build_scenario(name).expect("built-in scenario");
        let topo = &scenario.topology;
        let phases: usize =
            topo.intersection_ids().map(|x| topo.intersection(x).phase_model.len()).sum();
        println!("{name}:");
        println!("  intersections {}", topo.intersection_ids().count());
        println!("  roads         {}", topo.road_ids().count());
        println!("  sources       {}", topo.source_roads().len());
        println!("  phases        {phases}");
        println!("  demand levels {:?}", scenario.demand_levels);
        let violations = validate_network(topo);
        println!("  validation    {}", if violations.is_empty() { "ok" } else { "BROKEN" });
        for v in &violations {
            println!("    {v}");
        }
    }

    // Skew one turn probability so the entry no longer sums to one; the
    // validator names the offending entry road.
    let mut broken = build_scenario("isolated").expect("built-in scenario").topology;
    broken.intersections[0].turn_probabilities[0].p = 0.5;
    println!("isolated with a 0.5/0.2/0.2 entry:");
    for v in validate_network(&broken) {
        println!("  {v}");
    }
}
