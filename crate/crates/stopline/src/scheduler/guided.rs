//! Warm-start propagation between consecutive decisions.
//!
//! Decisions repeat every second, and the situation rarely changes much in
//! one second, so the previous decision's plan is usually still close to
//! optimal. This module shifts that plan onto the new signal state; the
//! solver uses it purely as the starting incumbent, which tightens pruning
//! without changing what a completed search returns.

use crate::model::{check_plan, PhaseModel, SignalTimingPlan};

/// Shifts `prev` (the plan accepted one decision ago) onto the current
/// signal state and returns it if still structurally feasible.
///
/// Two situations are recoverable:
/// - the same phase still holds green: the plan carries over unchanged;
/// - the signal advanced exactly one phase: the served head slot is
///   dropped and a fresh minimum-green slot of the head's phase is appended,
///   keeping the slot count intact.
///
/// Anything else (phase model changed, signal jumped phases, or the shifted
/// plan breaks a green bound) yields `None` and the caller solves cold.
pub fn guided_search_shift(
    prev: &SignalTimingPlan,
    pm: &PhaseModel,
    current_phase: usize,
    green_start: i64,
    now: i64,
) -> Option<SignalTimingPlan> {
    if prev.phase_count != pm.len() || prev.slot_count() == 0 || current_phase >= pm.len() {
        return None;
    }
    let mut lengths = prev.lengths();
    if current_phase == prev.first_phase {
        // Same green: keep the lengths, re-anchor to the unchanged onset.
    } else if current_phase == pm.next_phase(prev.first_phase) {
        let head_phase = prev.first_phase;
        lengths.rotate_left(1);
        *lengths.last_mut().expect("non-empty plan") = pm.phase(head_phase).g_min;
    } else {
        return None;
    }
    let shifted = SignalTimingPlan::from_lengths(
        pm,
        current_phase,
        prev.horizon_cycles,
        green_start,
        &lengths,
    );
    if check_plan(&shifted, pm, green_start, now).is_empty() {
        Some(shifted)
    } else {
        None
    }
}
