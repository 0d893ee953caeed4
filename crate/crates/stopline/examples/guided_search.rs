//! Warm starts across consecutive decisions. The first solve runs cold; one
//! second later the situation has barely changed, so the previous plan is
//! shifted onto the new signal state and seeds the incumbent. The warm solve
//! must never end up above its seed, and a completed warm solve returns
//! exactly the cold answer.

use stopline::model::{Cluster, InflowSample, Phase, PhaseModel, RoadId, TurnMovement};
use stopline::sampler::SampleSet;
use stopline::scheduler::{guided_search_shift, solve, ScheduleProblem, SolverParams};

fn main() {
    let pm = PhaseModel::new(
        (0..2)
            .map(|i| Phase {
                turns: vec![TurnMovement {
                    entry: RoadId(2 * i as u32),
                    exit: RoadId(2 * i as u32 + 1),
                }],
                g_min: 5,
                g_max: 40,
                intergreen: 5,
            })
            .collect(),
    );
    let queue = |arrival: f64, vehicles: f64| Cluster {
        arrival,
        length: 2.5 * vehicles,
        count: vehicles,
        members: Vec::new(),
    };
    let inflow_at = |t: f64| InflowSample {
        per_phase: vec![vec![queue(t, 4.0)], vec![queue(t + 12.0, 3.0)]],
    };
    let params = SolverParams { time_limit: 1.0, nodes_per_second: 200_000 };

    // Decision at t=0, cold.
    let p0 = ScheduleProblem::new(&pm, 0, 0, 0, 2, SampleSet {
        samples: vec![inflow_at(0.0)],
        seed: 1,
    })
    .expect("valid problem");
    let cold = solve(&p0, &params, None).expect("solvable");
    println!("t=0 cold : objective {:>8.3}  nodes {:>7}", cold.objective, cold.stats.nodes);

    // Decision at t=1: same green, queues one second older.
    let p1 = ScheduleProblem::new(&pm, 0, 0, 1, 2, SampleSet {
        samples: vec![inflow_at(1.0)],
        seed: 1,
    })
    .expect("valid problem");
    let warm_plan =
        guided_search_shift(&cold.plan, &pm, 0, 0, 1).expect("plan survives one second");
    let warm = solve(&p1, &params, Some(&warm_plan)).expect("solvable");
    let cold1 = solve(&p1, &params, None).expect("solvable");
    println!(
        "t=1 warm : objective {:>8.3}  nodes {:>7}  seed objective {:.3}",
        warm.objective,
        warm.stats.nodes,
        warm.stats.warm_objective.expect("warm start accepted"),
    );
    println!("t=1 cold : objective {:>8.3}  nodes {:>7}", cold1.objective, cold1.stats.nodes);

    assert!(warm.objective <= warm.stats.warm_objective.expect("warm start accepted") + 1e-12);
    assert_eq!(warm.objective, cold1.objective);
    assert_eq!(warm.plan, cold1.plan);
    println!("warm solve never exceeds its seed and completes to the cold answer");
}
