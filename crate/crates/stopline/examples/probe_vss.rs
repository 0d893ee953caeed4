// Temporary diagnostic: one-shot out-of-sample value of sampled planning.
//
// Builds synthetic observations at an isolated protected-left intersection,
// solves the scheduling problem under (a) 10 turn samples and (b) the single
// expected inflow, then evaluates both plans on fresh realizations drawn
// from the same turn distribution. Reports the out-of-sample mean delay of
// each plan across observation densities.

use stopline::experiment::build_scenario;
use stopline::model::IntersectionId;
use stopline::rng;
use stopline::sampler::{
    cluster_vehicles, draw_sample_set, expected_inflow, sample_turns, DetectedVehicle,
    SamplerConfig, TurnTable, TurnedVehicle,
};
use stopline::scheduler::{dispatch_value, solve, ScheduleProblem, SolverParams};
use stopline::model::VehicleId;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = build_scenario("isolated")?;
    let topo = &sc.topology;
    let pm = &topo.intersections[0].phase_model;
    let table = TurnTable::build(topo, IntersectionId(0))?;
    let cfg = SamplerConfig { discharge_headway: 1.25, merge_threshold: 3.0 };
    let params = SolverParams { time_limit: 10.0, nodes_per_second: 200_000 };
    let entries: Vec<_> = topo.source_roads();

    // (queued per road, moving vehicles per road over 30 s)
    let grid = [(0usize, 2usize), (2, 2), (5, 3), (10, 4), (15, 6), (25, 8)];
    for (nq, nm) in grid {
        let mut d_saa = 0.0;
        let mut d_exp = 0.0;
        let mut d_perfect = 0.0;
        let reps = 8;
        for rep in 0..reps {
            let seed = rng::mix(77, &[nq as u64, nm as u64, rep]);
            // Observation: nq queued (eta 0) and nm moving vehicles per road.
            let mut obs = Vec::new();
            let mut id = 0u64;
            let mut r = rng::substream(seed, &[1]);
            for &e in &entries {
                for _ in 0..nq {
                    obs.push(DetectedVehicle { id: VehicleId(id), entry: e, eta: 0.0, weight: 1.0 });
                    id += 1;
                }
                for _ in 0..nm {
                    let eta: f64 = 30.0 * r.random::<f64>();
                    obs.push(DetectedVehicle { id: VehicleId(id), entry: e, eta, weight: 1.0 });
                    id += 1;
                }
            }
            let saa = draw_sample_set(&obs, &table, &cfg, 10, rng::mix(seed, &[2]));
            let exp = stopline::sampler::SampleSet {
                samples: vec![expected_inflow(&obs, &table, &cfg)],
                seed: 0,
            };
            let prob_saa = ScheduleProblem::new(pm, 0, 0, 0, 3, saa)?;
            let prob_exp = ScheduleProblem::new(pm, 0, 0, 0, 3, exp)?;
            let plan_saa = solve(&prob_saa, &params, None)?.plan;
            let plan_exp = solve(&prob_exp, &params, None)?.plan;

            // Out-of-sample: fresh realizations of the same observation.
            let m = 64;
            for k in 0..m {
                let mut rr = rng::substream(seed, &[3, k]);
                let opts = sample_turns(&obs, &table, &mut rr);
                let turned: Vec<TurnedVehicle> = obs
                    .iter()
                    .zip(&opts)
                    .map(|(v, o)| TurnedVehicle {
                        id: v.id,
                        eta: v.eta,
                        exit: o.exit,
                        phase: o.phase,
                        weight: 1.0,
                    })
                    .collect();
                let real = cluster_vehicles(&turned, pm.len(), &cfg);
                d_saa += dispatch_value(&plan_saa, &real) / m as f64;
                d_exp += dispatch_value(&plan_exp, &real) / m as f64;
                // Clairvoyant: plan solved against this realization alone.
                let one = stopline::sampler::SampleSet { samples: vec![real.clone()], seed: 0 };
                let p = ScheduleProblem::new(pm, 0, 0, 0, 3, one)?;
                let plan_oracle = solve(&p, &params, None)?.plan;
                d_perfect += dispatch_value(&plan_oracle, &real) / m as f64;
            }
        }
        let n_tot = 4 * (nq + nm);
        println!(
            "queued/road {nq:2} moving/road {nm:2} (n={n_tot:3}) | SAA10 {:9.1} | expected {:9.1} | clairvoyant {:9.1} | gap {:+6.2}%",
            d_saa / reps as f64,
            d_exp / reps as f64,
            d_perfect / reps as f64,
            100.0 * (d_saa - d_exp) / d_exp.max(1e-9)
        );
    }
    Ok(())
}
