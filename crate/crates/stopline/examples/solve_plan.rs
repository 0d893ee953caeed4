//! One scheduling decision end to end: put standing queues and an
//! approaching platoon in front of the isolated intersection, solve, and
//! print the chosen signal plan next to the all-minimum alternative.

use std::collections::BTreeMap;
use stopline::experiment::{build_scenario, ControllerKind};
use stopline::model::{IntersectionId, RoadId, VehicleId};
use stopline::sampler::{DetectedVehicle, TurnTable};
use stopline::sim::{decide, DecisionInput, SimConfig};

fn main() {
    let scenario = build_scenario("isolated").expect("built-in scenario");
    let topo = &scenario.topology;
    let x = IntersectionId(0);
    let table = TurnTable::build(topo, x).expect("turn table");
    let north = topo.road_by_name("n>x").expect("north entry");
    let east = topo.road_by_name("e>x").expect("east entry");

    // Six stopped vehicles on the north approach, three more arriving on
    // the east approach in a platoon.
    let mut local: Vec<DetectedVehicle> = (0..6)
        .map(|i| DetectedVehicle { id: VehicleId(i), entry: north, eta: 0.0, weight: 1.0 })
        .collect();
    local.extend((0..3).map(|i| DetectedVehicle {
        id: VehicleId(100 + i),
        entry: east,
        eta: 12.0 + 2.5 * i as f64,
        weight: 1.0,
    }));

    let sim = SimConfig::default();
    let travel: BTreeMap<RoadId, f64> = BTreeMap::new();
    let input = DecisionInput {
        intersection: x,
        phase_model: &topo.intersection(x).phase_model,
        table: &table,
        current_phase: 0,
        green_start: 0,
        now: 0,
        local: &local,
        incoming: &[],
        travel_in: &travel,
        travel_out: &travel,
        prev_plan: None,
        seed: 7,
    };

    for kind in [ControllerKind::USUR, ControllerKind::UTuS] {
        let cfg = kind.planner(&scenario, &sim, 10, false, 5.0);
        let d = decide(&cfg, &input).expect("decision");
        println!("{}:", kind.label(10));
        println!("  action    {:?}", d.action);
        println!("  objective {:.3} (mean dispatch delay over scenarios)", d.solution.objective);
        println!("  nodes     {}", d.solution.stats.nodes);
        for (j, slot) in d.solution.plan.slots.iter().enumerate() {
            println!(
                "  slot {j} phase {} green [{:>3}, {:>3}]",
                d.solution.plan.slot_phase(j),
                slot.start,
                slot.end
            );
        }
    }
}
