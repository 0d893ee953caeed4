//! Signal timing as single-machine scheduling.
//!
//! One decision = one `ScheduleProblem`: the signal's current phase and how
//! long it has held green, a planning horizon in cycles, and a set of
//! equally likely inflow realizations. The solver picks integer slot lengths
//! minimizing mean dispatch delay across the realizations; with one
//! realization holding probability-weighted fractional vehicles this is the
//! expected-traffic baseline, so both controller families share every line
//! of scheduling code.

mod checker;
mod dispatch;
mod guided;
mod oracle;
mod search;

pub use checker::{check_schedule, check_solution};
pub use dispatch::{
    dispatch_sample, dispatch_value, dispatch_with, evaluate_solution, ClusterSchedule, Fragment,
    MIN_FRAGMENT,
};
pub use guided::guided_search_shift;
pub use oracle::{brute_force_oracle, BRUTE_FORCE_LIMIT};

use crate::model::{DecisionAction, InflowSample, PhaseModel, SignalTimingPlan};
use crate::sampler::SampleSet;
use search::Search;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("no feasible slot lengths: {0}")]
    Infeasible(String),
    #[error("exhaustive enumeration over {0} plans exceeds the limit")]
    BruteForceTooLarge(u128),
}

/// One scheduling instance, pinned to a phase model owned by the caller.
#[derive(Clone, Debug)]
pub struct ScheduleProblem<'a> {
    pub phase_model: &'a PhaseModel,
    /// Phase holding (or about to receive) right-of-way.
    pub current_phase: usize,
    /// When `current_phase` got or gets green. May exceed `now` during an
    /// intergreen, in which case the plan starts in the future.
    pub green_start: i64,
    /// Decision instant. All cluster arrivals are at or after it.
    pub now: i64,
    pub horizon_cycles: usize,
    pub samples: SampleSet,
}

impl<'a> ScheduleProblem<'a> {
    pub fn new(
        phase_model: &'a PhaseModel,
        current_phase: usize,
        green_start: i64,
        now: i64,
        horizon_cycles: usize,
        samples: SampleSet,
    ) -> Result<Self, SolveError> {
        let p = ScheduleProblem {
            phase_model,
            current_phase,
            green_start,
            now,
            horizon_cycles,
            samples,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn slot_count(&self) -> usize {
        self.phase_model.len() * self.horizon_cycles
    }

    fn validate(&self) -> Result<(), SolveError> {
        let k = self.phase_model.len();
        let fail = |msg: String| Err(SolveError::InvalidProblem(msg));
        if k == 0 {
            return fail("phase model is empty".into());
        }
        if self.horizon_cycles == 0 {
            return fail("horizon must cover at least one cycle".into());
        }
        if self.current_phase >= k {
            return fail(format!("current phase {} of {k}", self.current_phase));
        }
        if self.samples.is_empty() {
            return fail("no inflow samples".into());
        }
        for (i, s) in self.samples.samples.iter().enumerate() {
            if s.per_phase.len() != k {
                return fail(format!("sample {i} covers {} phases of {k}", s.per_phase.len()));
            }
            for (ph, clusters) in s.per_phase.iter().enumerate() {
                let mut prev = f64::NEG_INFINITY;
                for (q, c) in clusters.iter().enumerate() {
                    let ok = c.arrival.is_finite()
                        && c.length.is_finite()
                        && c.count.is_finite()
                        && c.length >= 0.0
                        && c.count >= 0.0;
                    if !ok {
                        return fail(format!("sample {i} phase {ph} cluster {q} is degenerate"));
                    }
                    if c.arrival < self.now as f64 - 1e-9 {
                        return fail(format!(
                            "sample {i} phase {ph} cluster {q} arrives at {} before now {}",
                            c.arrival, self.now
                        ));
                    }
                    if c.arrival < prev {
                        return fail(format!("sample {i} phase {ph} clusters out of order"));
                    }
                    prev = c.arrival;
                }
            }
        }
        Ok(())
    }

    /// Per-slot length bounds. Slot 0 can never end before `now`, so its
    /// lower bound absorbs the green already spent.
    pub(crate) fn domains(&self) -> Result<(Vec<i64>, Vec<i64>), SolveError> {
        let k = self.phase_model.len();
        let n = self.slot_count();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for j in 0..n {
            let ph = self.phase_model.phase((self.current_phase + j) % k);
            let mut l = ph.g_min;
            if j == 0 {
                l = l.max(self.now - self.green_start);
            }
            if l > ph.g_max {
                return Err(SolveError::Infeasible(format!(
                    "slot {j} needs at least {l}s but the phase caps at {}s",
                    ph.g_max
                )));
            }
            lo.push(l);
            hi.push(ph.g_max);
        }
        Ok((lo, hi))
    }
}

/// Deterministic search effort: the wall-clock limit is converted into a
/// node budget at a fixed rate, so identical inputs explore identical trees
/// regardless of machine load.
#[derive(Clone, Copy, Debug)]
pub struct SolverParams {
    pub time_limit: f64,
    pub nodes_per_second: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { time_limit: 5.0, nodes_per_second: 200_000 }
    }
}

impl SolverParams {
    pub fn budget(&self) -> u64 {
        ((self.time_limit * self.nodes_per_second as f64).round() as u64).max(1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SolveStatus {
    /// Search ran to completion: the plan is a minimizer, and among
    /// minimizers has lexicographically smallest slot lengths.
    Optimal,
    /// Node budget ran out; the plan is the best incumbent found.
    Feasible,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    pub nodes: u64,
    pub budget: u64,
    /// Full plan pricings through the dispatcher.
    pub dispatches: u64,
    /// Objective of the accepted warm-start plan, when one was offered.
    pub warm_objective: Option<f64>,
    /// All samples were bitwise identical, so the search ran on one.
    pub deduplicated: bool,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub plan: SignalTimingPlan,
    pub schedule: ClusterSchedule,
    /// Mean dispatch delay over the problem's samples, vehicle-seconds.
    pub objective: f64,
    pub status: SolveStatus,
    pub stats: SearchStats,
}

fn warm_ok(problem: &ScheduleProblem<'_>, plan: &SignalTimingPlan) -> bool {
    plan.first_phase == problem.current_phase
        && plan.phase_count == problem.phase_model.len()
        && plan.slot_count() == problem.slot_count()
        && crate::model::check_plan(plan, problem.phase_model, problem.green_start, problem.now)
            .is_empty()
}

/// Solves a scheduling instance, optionally warm-started from a previous
/// decision's shifted plan. The warm plan only seeds the incumbent; when the
/// search completes, the answer is identical to a cold solve.
pub fn solve(
    problem: &ScheduleProblem<'_>,
    params: &SolverParams,
    warm: Option<&SignalTimingPlan>,
) -> Result<Solution, SolveError> {
    problem.validate()?;
    let (lo, hi) = problem.domains()?;
    let all = &problem.samples.samples;
    let dedup = all.len() > 1 && all.windows(2).all(|w| w[0] == w[1]);
    let active: &[InflowSample] = if dedup { &all[..1] } else { all.as_slice() };
    let mut stats = SearchStats {
        budget: params.budget(),
        deduplicated: dedup,
        ..SearchStats::default()
    };

    if active.iter().all(|s| s.is_empty()) {
        // Nothing to serve: the lex-smallest plan is optimal at zero delay.
        let plan = SignalTimingPlan::from_lengths(
            problem.phase_model,
            problem.current_phase,
            problem.horizon_cycles,
            problem.green_start,
            &lo,
        );
        stats.warm_objective = warm.filter(|w| warm_ok(problem, w)).map(|_| 0.0);
        let schedule = ClusterSchedule {
            per_sample: all
                .iter()
                .map(|s| s.per_phase.iter().map(|c| vec![Vec::new(); c.len()]).collect())
                .collect(),
        };
        return Ok(Solution { plan, schedule, objective: 0.0, status: SolveStatus::Optimal, stats });
    }

    let mut search = Search::new(
        problem.phase_model,
        problem.current_phase,
        problem.horizon_cycles,
        problem.green_start,
        lo.clone(),
        hi,
        active,
        stats.budget,
    );
    // Baseline incumbent so even a zero-budget call returns a feasible plan.
    search.consider(&lo);
    if let Some(w) = warm {
        if warm_ok(problem, w) {
            let lengths = w.lengths();
            let total = search.eval_lengths(&lengths);
            stats.warm_objective = Some(total / active.len() as f64);
            search.offer(&lengths, total);
        }
    }
    search.run();

    stats.nodes = search.nodes;
    stats.dispatches = search.dispatches;
    let status = if search.aborted { SolveStatus::Feasible } else { SolveStatus::Optimal };
    let plan = SignalTimingPlan::from_lengths(
        problem.phase_model,
        problem.current_phase,
        problem.horizon_cycles,
        problem.green_start,
        &search.best_lengths,
    );
    let objective = search.best_total / active.len() as f64;
    let mut per_sample: Vec<_> = active.iter().map(|s| dispatch_sample(&plan, s).0).collect();
    if dedup {
        per_sample = vec![per_sample[0].clone(); all.len()];
    }
    Ok(Solution {
        plan,
        schedule: ClusterSchedule { per_sample },
        objective,
        status,
        stats,
    })
}

/// Converts a plan into the action for the next control step: extend the
/// running green up to `resolution` seconds, or terminate it when the plan
/// ends slot 0 now.
pub fn decide_action(solution: &Solution, now: i64, resolution: i64) -> DecisionAction {
    let end = solution.plan.slots[0].end;
    if end <= now {
        DecisionAction::Terminate
    } else {
        DecisionAction::Extend(resolution.min(end - now))
    }
}

/// Plain-text rendering of a problem for logs and golden tests.
pub fn dump_problem(p: &ScheduleProblem<'_>) -> String {
    use std::fmt::Write;
    let mut out = format!(
        "problem phases={} current={} green_start={} now={} cycles={} samples={}\n",
        p.phase_model.len(),
        p.current_phase,
        p.green_start,
        p.now,
        p.horizon_cycles,
        p.samples.len()
    );
    for (i, s) in p.samples.samples.iter().enumerate() {
        for (k, clusters) in s.per_phase.iter().enumerate() {
            for (q, c) in clusters.iter().enumerate() {
                writeln!(out, "s{i} k{k} q{q}: a={} l={} n={}", c.arrival, c.length, c.count)
                    .expect("write to string");
            }
        }
    }
    out
}

/// Plain-text rendering of a solution for logs and golden tests.
pub fn dump_solution(sol: &Solution) -> String {
    use std::fmt::Write;
    let mut out = format!(
        "plan first={} lengths={:?} start={} end={}\nobjective={} status={:?}\n",
        sol.plan.first_phase,
        sol.plan.lengths(),
        sol.plan.slots[0].start,
        sol.plan.horizon_end(),
        sol.objective,
        sol.status,
    );
    for (i, s) in sol.schedule.per_sample.iter().enumerate() {
        for (k, clusters) in s.iter().enumerate() {
            for (q, frags) in clusters.iter().enumerate() {
                let parts: Vec<String> = frags
                    .iter()
                    .map(|f| {
                        let slot = f.slot.map_or("spill".into(), |j| format!("slot{j}"));
                        format!("{}+{}@{slot}", f.start, f.length)
                    })
                    .collect();
                writeln!(out, "s{i} k{k} q{q}: {}", parts.join(" ")).expect("write to string");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Phase, PhaseModel, RoadId, TurnMovement};

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

    fn cl(arrival: f64, length: f64, count: f64) -> Cluster {
        Cluster { arrival, length, count, members: Vec::new() }
    }

    fn set(samples: Vec<InflowSample>) -> SampleSet {
        SampleSet { samples, seed: 0 }
    }

    fn quick() -> SolverParams {
        SolverParams { time_limit: 1.0, nodes_per_second: 200_000 }
    }

    #[test]
    fn holds_green_to_clear_a_platoon_instead_of_cycling() {
        // One platoon of 4 vehicles over 10 s on the running phase. Cutting
        // at minimum green strands half of it past the horizon, so the
        // optimum holds exactly 10 s and reaches zero delay. The search
        // must not prune that subtree even though the all-minimum completion
        // of the root looks expensive.
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(0.0, 10.0, 4.0)], vec![]] };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.plan.lengths(), vec![10, 5]);
        assert!(check_solution(&problem, &sol).is_empty());
    }

    #[test]
    fn splits_green_between_competing_phases() {
        // Phase 1 holds the heavier platoon; the optimum ends phase 0 at
        // minimum green. Hand-checked: lengths [5, 10] give phase-1 delay
        // (10-2)*4 = 32 and phase-0 delay 0; no plan does better because
        // phase 1 cannot open before 10 (minimum green 5 plus intergreen 5).
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample {
            per_phase: vec![vec![cl(0.0, 2.5, 1.0)], vec![cl(2.0, 10.0, 4.0)]],
        };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.plan.lengths(), vec![5, 10]);
        assert_eq!(sol.objective, 32.0);
    }

    #[test]
    fn mean_objective_across_two_samples() {
        // Sample A needs 10 s of phase 0, sample B only 5 s. Holding 10 s
        // clears both at zero delay for A and zero for B, so the SAA
        // optimum is the same plan; the objective averages the two runs.
        let pm2 = pm(2, 5, 55, 5);
        let a = InflowSample { per_phase: vec![vec![cl(0.0, 10.0, 4.0)], vec![]] };
        let b = InflowSample { per_phase: vec![vec![cl(0.0, 5.0, 2.0)], vec![]] };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![a, b])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.plan.lengths(), vec![10, 5]);
        let recount = evaluate_solution(&sol.schedule, &problem.samples.samples);
        assert_eq!(recount, sol.objective);
    }

    #[test]
    fn empty_traffic_returns_the_all_minimum_plan() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample::empty(2);
        let problem = ScheduleProblem::new(&pm2, 1, 0, 0, 2, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.plan.lengths(), vec![5, 5, 5, 5]);
        assert_eq!(sol.plan.first_phase, 1);
    }

    #[test]
    fn identical_samples_are_solved_once() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(3.0, 7.5, 3.0)], vec![cl(5.0, 5.0, 2.0)]] };
        let one = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s.clone()])).unwrap();
        let ten = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s; 10])).unwrap();
        let sol1 = solve(&one, &quick(), None).unwrap();
        let sol10 = solve(&ten, &quick(), None).unwrap();
        assert!(sol10.stats.deduplicated);
        assert!(!sol1.stats.deduplicated);
        assert_eq!(sol10.plan, sol1.plan);
        assert_eq!(sol10.objective, sol1.objective);
        assert_eq!(sol10.stats.nodes, sol1.stats.nodes);
        assert_eq!(sol10.schedule.per_sample.len(), 10);
        assert_eq!(sol10.schedule.per_sample[3], sol1.schedule.per_sample[0]);
    }

    #[test]
    fn zero_budget_still_returns_a_feasible_plan() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(0.0, 10.0, 4.0)], vec![]] };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s.clone()])).unwrap();
        let starved = SolverParams { time_limit: 1e-9, nodes_per_second: 1 };
        let sol = solve(&problem, &starved, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible);
        assert_eq!(sol.plan.lengths(), vec![5, 5]);
        assert!(check_solution(&problem, &sol).is_empty());
        // Same starved call twice: identical answer, effort is not a clock.
        let again = solve(&problem, &starved, None).unwrap();
        assert_eq!(again.plan, sol.plan);
        assert_eq!(again.objective, sol.objective);
    }

    #[test]
    fn warm_start_seeds_but_never_beats_a_completed_search() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample {
            per_phase: vec![vec![cl(0.0, 2.5, 1.0)], vec![cl(2.0, 10.0, 4.0)]],
        };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s])).unwrap();
        let cold = solve(&problem, &quick(), None).unwrap();
        let warm_plan =
            SignalTimingPlan::from_lengths(&pm2, 0, 1, 0, &[7, 12]);
        let warm = solve(&problem, &quick(), Some(&warm_plan)).unwrap();
        let warm_obj = warm.stats.warm_objective.expect("warm plan was feasible");
        assert!(warm.objective <= warm_obj);
        assert_eq!(warm.plan, cold.plan);
        assert_eq!(warm.objective, cold.objective);
    }

    #[test]
    fn elapsed_green_floors_the_first_slot() {
        // 12 s already spent on phase 0: every plan must keep slot 0 at
        // least that long, so its end can never precede the decision time.
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![], vec![cl(12.0, 5.0, 2.0)]] };
        let problem = ScheduleProblem::new(&pm2, 0, -12, 0, 1, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.plan.slots[0].start, -12);
        assert!(sol.plan.slots[0].length() >= 12);
        assert!(check_solution(&problem, &sol).is_empty());
    }

    #[test]
    fn overlong_green_is_rejected() {
        let pm2 = pm(2, 5, 20, 5);
        let s = InflowSample::empty(2);
        let problem = ScheduleProblem::new(&pm2, 0, -21, 0, 1, set(vec![s])).unwrap();
        assert!(matches!(solve(&problem, &quick(), None), Err(SolveError::Infeasible(_))));
    }

    #[test]
    fn future_green_start_is_planned_from_the_onset() {
        // Decision taken during an intergreen: phase 1 opens at t=3. The
        // platoon arriving at 3 is served from the onset with zero delay.
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![], vec![cl(3.0, 5.0, 2.0)]] };
        let problem = ScheduleProblem::new(&pm2, 1, 3, 0, 1, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.plan.slots[0].start, 3);
        assert_eq!(sol.objective, 0.0);
        assert!(check_solution(&problem, &sol).is_empty());
    }

    #[test]
    fn single_phase_problems_are_legal() {
        let pm1 = pm(1, 5, 55, 0);
        let s = InflowSample { per_phase: vec![vec![cl(0.0, 5.0, 2.0)]] };
        let problem = ScheduleProblem::new(&pm1, 0, 0, 0, 2, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn actions_extend_until_the_planned_end_then_terminate() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(0.0, 10.0, 4.0)], vec![]] };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s.clone()])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(decide_action(&sol, 0, 1), DecisionAction::Extend(1));

        // Re-solving at t=10 with the platoon gone: slot 0 is pinned to its
        // elapsed 10 s and the plan moves on, so the action is Terminate.
        let later = InflowSample { per_phase: vec![vec![], vec![cl(11.0, 5.0, 2.0)]] };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 10, 1, set(vec![later])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.plan.slots[0].end, 10);
        assert_eq!(decide_action(&sol, 10, 1), DecisionAction::Terminate);
    }

    #[test]
    fn negative_clock_values_do_not_confuse_the_bound() {
        // Slot 0 started in the past, so opening times are negative. The
        // optimum extends the green just enough to clear the cluster; a
        // bound that mishandles negative times prunes this at the root.
        let pm1 = pm(1, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(1.0, 2.5, 1.0)]] };
        let problem = ScheduleProblem::new(&pm1, 0, -2, 0, 2, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.plan.lengths(), vec![6, 5]);
    }

    #[test]
    fn arrivals_before_now_are_rejected() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(4.0, 5.0, 2.0)], vec![]] };
        let err = ScheduleProblem::new(&pm2, 0, 0, 5, 1, set(vec![s])).unwrap_err();
        assert!(matches!(err, SolveError::InvalidProblem(_)));
    }

    #[test]
    fn dumps_are_stable_one_liner_per_entity() {
        let pm2 = pm(2, 5, 55, 5);
        let s = InflowSample { per_phase: vec![vec![cl(3.0, 7.5, 3.0)], vec![]] };
        let problem = ScheduleProblem::new(&pm2, 0, 0, 0, 1, set(vec![s])).unwrap();
        let sol = solve(&problem, &quick(), None).unwrap();
        let p = dump_problem(&problem);
        assert!(p.contains("problem phases=2 current=0 green_start=0 now=0 cycles=1 samples=1"));
        assert!(p.contains("s0 k0 q0: a=3 l=7.5 n=3"));
        let d = dump_solution(&sol);
        assert!(d.starts_with("plan first=0 lengths="));
        assert!(d.contains("status=Optimal"));
    }
}
