//! Cluster dispatch under a fixed timing plan.
//!
//! Given a plan, the departure schedule is forced: clusters leave in FIFO
//! order per phase, each starting as soon as its arrival, its predecessor,
//! and the next usable green window allow, splitting across windows when a
//! window is too short. Delay accounts each dispatched second of a cluster
//! at the cluster's vehicle density, so the objective of a plan is simply
//! the sum of fragment delays, and the scheduling problem reduces to a
//! search over plans.

use crate::model::{InflowSample, SignalTimingPlan};

/// Shortest fragment the stop line bothers dispatching, seconds. A window
/// with less usable room than this passes the whole remainder to the next
/// window (clusters shorter than this fit as a whole).
pub const MIN_FRAGMENT: f64 = 1.0;

/// A contiguous piece of one cluster crossing the stop line. `slot` is the
/// plan slot containing the fragment; `None` marks residue that did not fit
/// within the plan horizon and is accounted at the horizon end as a finite
/// spill penalty.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Fragment {
    pub start: f64,
    pub length: f64,
    pub slot: Option<usize>,
}

impl Fragment {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// Fragments for every sample, phase, and cluster of a problem, aligned with
/// the sample set that produced them.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct ClusterSchedule {
    /// Indexed `[sample][phase][cluster][fragment]`.
    pub per_sample: Vec<Vec<Vec<Vec<Fragment>>>>,
}

/// Dispatches one sample under `plan`, reporting each fragment through
/// `on_frag(phase, cluster, fragment)`, and returns the sample's total
/// delay. This single code path defines dispatch semantics for the solver,
/// the brute-force oracle, and every evaluation.
pub fn dispatch_with(
    plan: &SignalTimingPlan,
    sample: &InflowSample,
    mut on_frag: impl FnMut(usize, usize, Fragment),
) -> f64 {
    let h_end = plan.horizon_end() as f64;
    let mut delay = 0.0;
    for (k, clusters) in sample.per_phase.iter().enumerate() {
        let mut windows = plan.windows_of(k);
        let mut w = windows.next();
        let mut cursor = f64::NEG_INFINITY;
        for (q, c) in clusters.iter().enumerate() {
            if c.length <= 0.0 {
                continue;
            }
            let mut rem = c.length;
            while rem > 0.0 {
                match w {
                    Some((slot, iv)) => {
                        let start = cursor.max(c.arrival).max(iv.start as f64);
                        let avail = iv.end as f64 - start;
                        let need = MIN_FRAGMENT.min(rem);
                        if avail < need {
                            // Window unusable for this cluster; FIFO forbids
                            // followers from taking it either.
                            w = windows.next();
                            continue;
                        }
                        let take = rem.min(avail);
                        delay += (start - c.arrival) * c.count * take / c.length;
                        on_frag(k, q, Fragment { start, length: take, slot: Some(slot) });
                        cursor = start + take;
                        rem -= take;
                        if rem > 0.0 {
                            w = windows.next();
                        }
                    }
                    None => {
                        // Past the last window: queue the residue at the
                        // horizon end, in FIFO order.
                        let start = cursor.max(c.arrival).max(h_end);
                        delay += (start - c.arrival) * c.count * rem / c.length;
                        on_frag(k, q, Fragment { start, length: rem, slot: None });
                        cursor = start + rem;
                        rem = 0.0;
                    }
                }
            }
        }
    }
    delay
}

/// Dispatch yielding the fragments of one sample plus its delay.
pub fn dispatch_sample(
    plan: &SignalTimingPlan,
    sample: &InflowSample,
) -> (Vec<Vec<Vec<Fragment>>>, f64) {
    let mut frags: Vec<Vec<Vec<Fragment>>> = sample
        .per_phase
        .iter()
        .map(|clusters| vec![Vec::new(); clusters.len()])
        .collect();
    let delay = dispatch_with(plan, sample, |k, q, f| frags[k][q].push(f));
    (frags, delay)
}

/// Dispatch computing only the delay.
pub fn dispatch_value(plan: &SignalTimingPlan, sample: &InflowSample) -> f64 {
    dispatch_with(plan, sample, |_, _, _| {})
}

/// Recomputes an objective from stored fragments: the mean over samples of
/// the summed fragment delays. Pure; never re-dispatches.
pub fn evaluate_solution(schedule: &ClusterSchedule, samples: &[InflowSample]) -> f64 {
    assert_eq!(schedule.per_sample.len(), samples.len(), "schedule/sample count mismatch");
    let mut total = 0.0;
    for (per_phase, sample) in schedule.per_sample.iter().zip(samples) {
        for (clusters_frags, clusters) in per_phase.iter().zip(&sample.per_phase) {
            for (frags, c) in clusters_frags.iter().zip(clusters) {
                for f in frags {
                    total += (f.start - c.arrival) * c.count * f.length / c.length;
                }
            }
        }
    }
    total / samples.len().max(1) as f64
}
