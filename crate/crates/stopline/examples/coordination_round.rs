//! One round of neighbor coordination on a two-signal corridor. The
//! upstream intersection schedules a platoon, projects the resulting
//! stop-line crossings onto its exit link, and the downstream intersection
//! decides once without and once with that message spliced into its view.

use std::collections::BTreeMap;
use stopline::coordination::merge_nonlocal;
use stopline::experiment::build_scenario;
use stopline::model::{RoadId, VehicleId};
use stopline::sampler::{DetectedVehicle, TurnTable};
use stopline::sim::{decide, DecisionInput, PlannerConfig, TrafficModel};

fn main() {
    // Westernmost two signals of the arterial: x0's east exit feeds x1.
    let scenario = build_scenario("arterial_1x5").expect("built-in scenario");
    let topo = &scenario.topology;
    let x0 = topo
        .intersection_ids()
        .find(|&x| topo.intersection(x).name == "x0")
        .expect("first arterial signal");
    let x1 = topo
        .intersection_ids()
        .find(|&x| topo.intersection(x).name == "x1")
        .expect("second arterial signal");
    let link = topo.road_by_name("x0>x1").expect("connecting link");
    let west_in = topo.road_by_name("w>x0").expect("western entry");
    let travel = topo.road(link).length / 10.0;

    let cfg = PlannerConfig {
        model: TrafficModel::Sampled { count: 4 },
        coordinated: true,
        ..PlannerConfig::default()
    };

    // A six-vehicle platoon 10 s out from x0, heading east.
    let platoon: Vec<DetectedVehicle> = (0..6)
        .map(|i| DetectedVehicle {
            id: VehicleId(i),
            entry: west_in,
            eta: 10.0 + 2.5 * i as f64,
            weight: 1.0,
        })
        .collect();
    let t0 = TurnTable::build(topo, x0).expect("turn table");
    let up_travel_out: BTreeMap<RoadId, f64> = BTreeMap::from([(link, travel)]);
    let empty: BTreeMap<RoadId, f64> = BTreeMap::new();
    let up = decide(&cfg, &DecisionInput {
        intersection: x0,
        phase_model: &topo.intersection(x0).phase_model,
        table: &t0,
        current_phase: 0,
        green_start: 0,
        now: 0,
        local: &platoon,
        incoming: &[],
        travel_in: &empty,
        travel_out: &up_travel_out,
        prev_plan: None,
        seed: 3,
    })
    .expect("upstream decision");

    let msg = up.messages.iter().find(|m| m.link == link).expect("projection on the link");
    println!("upstream projects onto {} (travel {travel:.1}s):", topo.road(link).name);
    for (j, vehicles) in msg.per_sample.iter().enumerate() {
        let line: Vec<String> =
            vehicles.iter().map(|v| format!("#{}@{:.1}", v.id.0, v.arrival)).collect();
        println!("  sample {j}: {}", line.join(" "));
    }

    // Downstream, the message is the only traffic in sight.
    let t1 = TurnTable::build(topo, x1).expect("turn table");
    let down_travel_in: BTreeMap<RoadId, f64> = BTreeMap::from([(link, travel)]);
    let merged = merge_nonlocal(&[], &[msg.clone()], &down_travel_in, 0.0, 4, 20.0)
        .expect("aligned samples");
    println!(
        "downstream view per sample: {:?} projected vehicles",
        merged.iter().map(Vec::len).collect::<Vec<_>>()
    );

    for (label, incoming) in [("without message", vec![]), ("with message", vec![msg.clone()])] {
        let d = decide(&cfg, &DecisionInput {
            intersection: x1,
            phase_model: &topo.intersection(x1).phase_model,
            table: &t1,
            current_phase: 0,
            green_start: 0,
            now: 0,
            local: &[],
            incoming: &incoming,
            travel_in: &down_travel_in,
            travel_out: &empty,
            prev_plan: None,
            seed: 4,
        })
        .expect("downstream decision");
        let head = &d.solution.plan.slots[0];
        println!(
            "downstream {label:>15}: objective {:>7.3}, phase 0 green [{}, {}]",
            d.solution.objective, head.start, head.end
        );
    }
}
