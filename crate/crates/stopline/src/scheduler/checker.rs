//! Independent feasibility audit for plans and dispatch schedules.
//!
//! The checker re-derives every constraint from the raw structures rather
//! than trusting the dispatcher: mass conservation per cluster, fragment
//! containment in green windows of the right phase, FIFO order within each
//! phase, arrival causality, and the minimum-fragment rule. The controller
//! runs it on every accepted solution, so a dispatch bug surfaces as a
//! violation report instead of a silently wrong experiment.

use crate::model::{InflowSample, SignalTimingPlan, Violation};

use super::dispatch::{ClusterSchedule, MIN_FRAGMENT};
use super::{ScheduleProblem, Solution};

const EPS: f64 = 1e-6;

/// Checks one sample's fragments against the plan and the sample itself.
pub fn check_schedule(
    plan: &SignalTimingPlan,
    schedule: &ClusterSchedule,
    samples: &[InflowSample],
) -> Vec<Violation> {
    let mut out = Vec::new();
    if schedule.per_sample.len() != samples.len() {
        out.push(Violation::new(
            "schedule",
            format!(
                "covers {} samples, problem has {}",
                schedule.per_sample.len(),
                samples.len()
            ),
        ));
        return out;
    }
    let h_end = plan.horizon_end() as f64;
    for (s, (per_phase, sample)) in schedule.per_sample.iter().zip(samples).enumerate() {
        if per_phase.len() != sample.per_phase.len() {
            out.push(Violation::new(
                format!("sample {s}"),
                "schedule phase count differs from sample",
            ));
            continue;
        }
        for (k, (clusters_frags, clusters)) in
            per_phase.iter().zip(&sample.per_phase).enumerate()
        {
            let ent = |q: usize| format!("sample {s} phase {k} cluster {q}");
            if clusters_frags.len() != clusters.len() {
                out.push(Violation::new(
                    format!("sample {s} phase {k}"),
                    "fragment lists do not cover the clusters one to one",
                ));
                continue;
            }
            let mut prev_end = f64::NEG_INFINITY;
            let mut prev_last_slot = 0usize;
            for (q, (frags, c)) in clusters_frags.iter().zip(clusters).enumerate() {
                if c.length <= 0.0 {
                    continue;
                }
                let total: f64 = frags.iter().map(|f| f.length).sum();
                if (total - c.length).abs() > EPS {
                    out.push(Violation::new(
                        ent(q),
                        format!("fragments sum to {total}, cluster length is {}", c.length),
                    ));
                }
                let mut served = 0.0;
                for (i, f) in frags.iter().enumerate() {
                    let remaining = c.length - served;
                    if f.length < MIN_FRAGMENT.min(remaining) - EPS || f.length > remaining + EPS {
                        out.push(Violation::new(
                            ent(q),
                            format!("fragment {i} length {} breaks the minimum-fragment rule", f.length),
                        ));
                    }
                    if f.start < c.arrival - EPS {
                        out.push(Violation::new(
                            ent(q),
                            format!("fragment {i} starts at {} before arrival {}", f.start, c.arrival),
                        ));
                    }
                    if f.start < prev_end - EPS {
                        out.push(Violation::new(
                            ent(q),
                            format!("fragment {i} overlaps the preceding departure"),
                        ));
                    }
                    match f.slot {
                        Some(j) => {
                            if j < prev_last_slot {
                                out.push(Violation::new(ent(q), "fragments out of FIFO slot order"));
                            }
                            prev_last_slot = j;
                            match plan.slots.get(j) {
                                Some(iv) if plan.slot_phase(j) == k => {
                                    if f.start < iv.start as f64 - EPS
                                        || f.end() > iv.end as f64 + EPS
                                    {
                                        out.push(Violation::new(
                                            ent(q),
                                            format!(
                                                "fragment {i} [{}, {}] leaves slot {j} [{}, {}]",
                                                f.start,
                                                f.end(),
                                                iv.start,
                                                iv.end
                                            ),
                                        ));
                                    }
                                }
                                Some(_) => out.push(Violation::new(
                                    ent(q),
                                    format!("fragment {i} assigned to a slot of another phase"),
                                )),
                                None => out.push(Violation::new(
                                    ent(q),
                                    format!("fragment {i} names slot {j} outside the plan"),
                                )),
                            }
                        }
                        None => {
                            prev_last_slot = plan.slot_count();
                            if f.start < h_end - EPS {
                                out.push(Violation::new(
                                    ent(q),
                                    format!(
                                        "spill fragment {i} starts at {} before horizon end {h_end}",
                                        f.start
                                    ),
                                ));
                            }
                        }
                    }
                    prev_end = f.start + f.length;
                    served += f.length;
                }
            }
        }
    }
    out
}

/// Full audit of a solver answer: plan structure, schedule feasibility, and
/// agreement between the reported objective and an independent recount.
pub fn check_solution(problem: &ScheduleProblem<'_>, solution: &Solution) -> Vec<Violation> {
    let mut out = crate::model::check_plan(
        &solution.plan,
        problem.phase_model,
        problem.green_start,
        problem.now,
    );
    if solution.plan.first_phase != problem.current_phase {
        out.push(Violation::new(
            "plan",
            format!(
                "starts with phase {}, controller is in phase {}",
                solution.plan.first_phase, problem.current_phase
            ),
        ));
    }
    out.extend(check_schedule(&solution.plan, &solution.schedule, &problem.samples.samples));
    let recount = super::dispatch::evaluate_solution(&solution.schedule, &problem.samples.samples);
    if (recount - solution.objective).abs() > EPS {
        out.push(Violation::new(
            "objective",
            format!("reported {} but fragments recount to {recount}", solution.objective),
        ));
    }
    out
}
