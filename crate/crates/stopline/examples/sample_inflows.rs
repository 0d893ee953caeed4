//! Turns one observation into scheduler inflows both ways: a handful of
//! sampled turn realizations next to the single expected realization, then a
//! larger draw to show the sampled exit frequencies converging to the
//! configured turning proportions.
//!
//! The observation approaches the arterial bottleneck from the west, where
//! through and right traffic is served by one phase but lefts by another, so
//! each turn realization produces a visibly different per-phase demand.

use stopline::experiment::build_scenario;
use stopline::model::{InflowSample, VehicleId};
use stopline::rng;
use stopline::sampler::{
    draw_sample_set, expected_inflow, sample_turns, DetectedVehicle, SamplerConfig, TurnTable,
};

fn print_sample(label: &str, s: &InflowSample) {
    println!("{label}:");
    for (phase, clusters) in s.per_phase.iter().enumerate() {
        for c in clusters {
            println!(
                "  phase {phase}: arrival {:>5.1}  length {:>5.2}  weight {:.2}",
                c.arrival, c.length, c.count
            );
        }
    }
}

fn main() {
    let scenario = build_scenario("arterial_1x5").expect("built-in scenario");
    let topo = &scenario.topology;
    let x2 = topo
        .intersection_ids()
        .find(|&x| topo.intersection(x).name == "x2")
        .expect("bottleneck signal");
    let table = TurnTable::build(topo, x2).expect("turn table");
    let west = topo.road_by_name("x1>x2").expect("western entry");

    // Five vehicles rolling toward the stop line from the west. Each goes
    // through with probability 0.65, left with 0.15, right with 0.2;
    // through and right share a phase, lefts wait for their own.
    let local: Vec<DetectedVehicle> = (0..5)
        .map(|i| DetectedVehicle {
            id: VehicleId(i),
            entry: west,
            eta: 4.0 * i as f64,
            weight: 1.0,
        })
        .collect();

    let cfg = SamplerConfig { discharge_headway: 2.5, merge_threshold: 3.0 };
    let set = draw_sample_set(&local, &table, &cfg, 3, 42);
    for (j, s) in set.samples.iter().enumerate() {
        print_sample(&format!("sample {j}"), s);
    }
    print_sample("expected", &expected_inflow(&local, &table, &cfg));

    // Exit frequencies over many independent draws of the same observation.
    let mut hits = std::collections::BTreeMap::new();
    let draws: u64 = 10_000;
    for j in 0..draws {
        let mut stream = rng::substream(42, &[j]);
        for o in sample_turns(&local[..1], &table, &mut stream) {
            *hits.entry(o.exit).or_insert(0u32) += 1;
        }
    }
    println!("exit frequencies for one vehicle over {draws} draws:");
    for o in table.options(west) {
        let seen = f64::from(*hits.get(&o.exit).unwrap_or(&0)) / draws as f64;
        println!("  {} p {:.2} observed {:.4}", topo.road(o.exit).name, o.p, seen);
    }
}
