//! Exhaustive reference solver.
//!
//! Enumerates every integer length vector in the slot domains in ascending
//! lexicographic order and prices each through the one real dispatcher.
//! No bounds, no pruning, no shared state with the branch-and-bound search
//! beyond the dispatcher itself, which makes it the ground truth the search
//! is tested against on small instances.

use crate::model::SignalTimingPlan;

use super::dispatch::{dispatch_sample, dispatch_value, ClusterSchedule};
use super::{ScheduleProblem, SearchStats, Solution, SolveError, SolveStatus};

/// Largest plan count the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

pub fn brute_force_oracle(problem: &ScheduleProblem<'_>) -> Result<Solution, SolveError> {
    let (lo, hi) = problem.domains()?;
    let size: u128 = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as u128).product();
    if size > BRUTE_FORCE_LIMIT {
        return Err(SolveError::BruteForceTooLarge(size));
    }

    let samples = &problem.samples.samples;
    let n = lo.len();
    let mut lengths = lo.clone();
    let mut best_total = f64::INFINITY;
    let mut best = Vec::new();
    let mut evals: u64 = 0;
    let mut done = false;
    while !done {
        let plan = SignalTimingPlan::from_lengths(
            problem.phase_model,
            problem.current_phase,
            problem.horizon_cycles,
            problem.green_start,
            &lengths,
        );
        let mut total = 0.0;
        for s in samples {
            total += dispatch_value(&plan, s);
        }
        evals += 1;
        // Ascending lex enumeration: a strict improvement keeps the first,
        // therefore lexicographically smallest, minimizer.
        if total < best_total {
            best_total = total;
            best = lengths.clone();
        }

        done = true;
        for i in (0..n).rev() {
            if lengths[i] < hi[i] {
                lengths[i] += 1;
                for (v, &l) in lengths[i + 1..].iter_mut().zip(&lo[i + 1..]) {
                    *v = l;
                }
                done = false;
                break;
            }
        }
    }

    let plan = SignalTimingPlan::from_lengths(
        problem.phase_model,
        problem.current_phase,
        problem.horizon_cycles,
        problem.green_start,
        &best,
    );
    let per_sample: Vec<_> = samples.iter().map(|s| dispatch_sample(&plan, s).0).collect();
    Ok(Solution {
        plan,
        schedule: ClusterSchedule { per_sample },
        objective: best_total / samples.len() as f64,
        status: SolveStatus::Optimal,
        stats: SearchStats { dispatches: evals, ..SearchStats::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, InflowSample, Phase, PhaseModel, RoadId, TurnMovement};
    use crate::rng::substream;
    use crate::sampler::SampleSet;
    use crate::scheduler::{check_solution, solve, SolverParams};
    use rand::Rng;

    fn pm(k: usize, g_min: i64, g_max: i64, y: i64) -> PhaseModel {
        PhaseModel::new(
            (0..k)
                .map(|i| Phase {
                    turns: vec![TurnMovement {
                        entry: RoadId(2 * i as u32),
                        exit: RoadId(2 * i as u32 + 1),
                    }],
                    g_min,
                    g_max,
                    intergreen: y,
                })
                .collect(),
        )
    }

    #[test]
    fn rejects_oversized_domains() {
        let pm2 = pm(2, 5, 55, 5);
        let samples = SampleSet { samples: vec![InflowSample::empty(2)], seed: 0 };
        // 51^6 plans, far over the cap.
        let problem = crate::scheduler::ScheduleProblem::new(&pm2, 0, 0, 0, 3, samples).unwrap();
        assert!(matches!(
            brute_force_oracle(&problem),
            Err(SolveError::BruteForceTooLarge(_))
        ));
    }

    #[test]
    fn enumerates_in_ascending_lex_order_and_keeps_the_first_minimizer() {
        // Empty traffic: every plan scores zero, so the answer must be the
        // very first vector enumerated, the all-minimum plan.
        let pm2 = pm(2, 5, 7, 3);
        let samples = SampleSet { samples: vec![InflowSample::empty(2)], seed: 0 };
        let problem = crate::scheduler::ScheduleProblem::new(&pm2, 1, 0, 0, 2, samples).unwrap();
        let sol = brute_force_oracle(&problem).unwrap();
        assert_eq!(sol.plan.lengths(), vec![5, 5, 5, 5]);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.stats.dispatches, 81);
    }

    /// 200 random small instances: the branch-and-bound answer must equal
    /// the exhaustive one bitwise, plan and objective alike.
    #[test]
    fn search_matches_exhaustive_enumeration() {
        let params = SolverParams { time_limit: 10.0, nodes_per_second: 200_000 };
        for case in 0u64..200 {
            let mut rng = substream(0xACE0_BA5E, &[case]);
            let k = rng.random_range(1..=3usize);
            let h = rng.random_range(1..=2usize);
            let g_min = 5i64;
            let g_max = g_min + rng.random_range(0..=2i64);
            let y = rng.random_range(0..=5i64);
            let model = pm(k, g_min, g_max, y);
            let now = rng.random_range(0..=10i64);
            let current = rng.random_range(0..k);
            let elapsed = rng.random_range(0..=g_min);
            let n_samples = rng.random_range(1..=3usize);
            let samples: Vec<InflowSample> = (0..n_samples)
                .map(|_| {
                    let per_phase = (0..k)
                        .map(|_| {
                            let mut clusters: Vec<Cluster> = (0..rng.random_range(0..=3))
                                .map(|_| {
                                    let vehicles = rng.random_range(1..=4) as f64;
                                    Cluster {
                                        arrival: (now + rng.random_range(0..30i64)) as f64,
                                        length: 2.5 * vehicles,
                                        count: vehicles,
                                        members: Vec::new(),
                                    }
                                })
                                .collect();
                            clusters.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
                            clusters
                        })
                        .collect();
                    InflowSample { per_phase }
                })
                .collect();
            let problem = crate::scheduler::ScheduleProblem::new(
                &model,
                current,
                now - elapsed,
                now,
                h,
                SampleSet { samples, seed: case },
            )
            .unwrap();

            let truth = brute_force_oracle(&problem).unwrap();
            let fast = solve(&problem, &params, None).unwrap();
            assert_eq!(fast.status, SolveStatus::Optimal, "case {case} hit the budget");
            assert_eq!(
                fast.plan.lengths(),
                truth.plan.lengths(),
                "case {case}: plans diverge\n{}",
                crate::scheduler::dump_problem(&problem)
            );
            assert_eq!(
                fast.objective.to_bits(),
                truth.objective.to_bits(),
                "case {case}: objectives diverge {} vs {}",
                fast.objective,
                truth.objective
            );
            assert!(check_solution(&problem, &fast).is_empty(), "case {case}: infeasible answer");
        }
    }
}
