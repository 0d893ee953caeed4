//! Cross-checks the branch-and-bound solver against exhaustive enumeration
//! on random small instances, printing objectives and visited node counts
//! side by side. The two share nothing but the plan dispatcher, so equal
//! answers on every row say the search's pruning never cuts off a minimizer.

use rand::Rng;
use stopline::model::{Cluster, InflowSample, Phase, PhaseModel, RoadId, TurnMovement};
use stopline::rng::substream;
use stopline::sampler::SampleSet;
use stopline::scheduler::{brute_force_oracle, solve, ScheduleProblem, SolverParams};

fn phases(k: usize, g_min: i64, g_max: i64, intergreen: i64) -> PhaseModel {
    PhaseModel::new(
        (0..k)
            .map(|i| Phase {
                turns: vec![TurnMovement {
                    entry: RoadId(2 * i as u32),
                    exit: RoadId(2 * i as u32 + 1),
                }],
                g_min,
                g_max,
                intergreen,
            })
            .collect(),
    )
}

fn main() {
    let params = SolverParams { time_limit: 10.0, nodes_per_second: 200_000 };
    let cases = 40u64;
    let mut agreements = 0;
    println!("case  slots  plans     oracle-best  search-best  search-nodes");
    for case in 0..cases {
        let mut rng = substream(0xD1CE, &[case]);
        let k = rng.random_range(1..=3usize);
        let h = rng.random_range(1..=2usize);
        let g_max = 5 + rng.random_range(0..=2i64);
        let model = phases(k, 5, g_max, rng.random_range(0..=5i64));
        let samples: Vec<InflowSample> = (0..rng.random_range(1..=2usize))
            .map(|_| InflowSample {
                per_phase: (0..k)
                    .map(|_| {
                        let mut clusters: Vec<Cluster> = (0..rng.random_range(0..=2))
                            .map(|_| {
                                let vehicles = rng.random_range(1..=3) as f64;
                                Cluster {
                                    arrival: rng.random_range(0..30i64) as f64,
                                    length: 2.5 * vehicles,
                                    count: vehicles,
                                    members: Vec::new(),
                                }
                            })
                            .collect();
                        clusters.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
                        clusters
                    })
                    .collect(),
            })
            .collect();
        let problem = ScheduleProblem::new(
            &model,
            rng.random_range(0..k),
            0,
            0,
            h,
            SampleSet { samples, seed: case },
        )
        .expect("valid instance");

        let reference = brute_force_oracle(&problem).expect("small enough to enumerate");
        let searched = solve(&problem, &params, None).expect("solvable");
        let same = searched.objective == reference.objective
            && searched.plan.lengths() == reference.plan.lengths();
        agreements += u32::from(same);
        println!(
            "{case:>4}  {:>5}  {:>8}  {:>11.3}  {:>11.3}  {:>12}{}",
            problem.slot_count(),
            reference.stats.dispatches,
            reference.objective,
            searched.objective,
            searched.stats.nodes,
            if same { "" } else { "  MISMATCH" },
        );
    }
    println!("{agreements}/{cases} instances agree exactly");
}
