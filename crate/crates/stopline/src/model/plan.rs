use super::phase::PhaseModel;
use super::validate::Violation;

/// A half-open-ended green interval on the integer second grid.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PlanInterval {
    pub start: i64,
    pub end: i64,
}

impl PlanInterval {
    pub fn length(&self) -> i64 {
        self.end - self.start
    }
}

/// A phase timing plan over `horizon_cycles` full rotations of the phase
/// sequence, laid out as consecutive time slots. Slot 0 is the interval of
/// the phase holding right-of-way when the plan was made (`first_phase`);
/// slot `j` serves phase `(first_phase + j) % phase_count`. Consecutive
/// slots are separated by exactly the intergreen of the earlier slot's
/// phase, so the slot list fixes the whole signal trajectory.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignalTimingPlan {
    pub first_phase: usize,
    pub phase_count: usize,
    pub horizon_cycles: usize,
    pub slots: Vec<PlanInterval>,
}

impl SignalTimingPlan {
    pub fn slot_count(&self) -> usize {
        self.phase_count * self.horizon_cycles
    }

    /// Canonical phase served by slot `j`.
    pub fn slot_phase(&self, j: usize) -> usize {
        (self.first_phase + j) % self.phase_count
    }

    /// The interval of phase `k` in cycle `r` (cycles count rotations of the
    /// phase sequence starting at `first_phase`).
    pub fn interval(&self, phase: usize, cycle: usize) -> PlanInterval {
        let offset = (phase + self.phase_count - self.first_phase) % self.phase_count;
        self.slots[cycle * self.phase_count + offset]
    }

    /// All green windows of `phase`, in time order, tagged with slot index.
    pub fn windows_of(&self, phase: usize) -> impl Iterator<Item = (usize, PlanInterval)> + '_ {
        let first = (phase + self.phase_count - self.first_phase) % self.phase_count;
        (0..self.horizon_cycles).map(move |r| {
            let j = r * self.phase_count + first;
            (j, self.slots[j])
        })
    }

    /// End of the final slot; residual demand is queued past this point.
    pub fn horizon_end(&self) -> i64 {
        self.slots.last().map_or(0, |s| s.end)
    }

    pub fn lengths(&self) -> Vec<i64> {
        self.slots.iter().map(|s| s.length()).collect()
    }

    /// Rebuilds a plan from slot lengths and the slot-0 start time.
    pub fn from_lengths(
        pm: &PhaseModel,
        first_phase: usize,
        horizon_cycles: usize,
        start: i64,
        lengths: &[i64],
    ) -> Self {
        let phase_count = pm.len();
        debug_assert_eq!(lengths.len(), phase_count * horizon_cycles);
        let mut slots = Vec::with_capacity(lengths.len());
        let mut t = start;
        for (j, &len) in lengths.iter().enumerate() {
            let phase = (first_phase + j) % phase_count;
            slots.push(PlanInterval { start: t, end: t + len });
            t += len + pm.phase(phase).intergreen;
        }
        Self { first_phase, phase_count, horizon_cycles, slots }
    }
}

/// Checks a plan against the structural feasibility rules, given the signal
/// state it was made for: `green_start` is when slot 0's phase received (or
/// will receive) right-of-way and `now` is the decision time. Returns every
/// violation found; an empty list means the plan is feasible.
///
/// Rules checked:
/// - slot layout matches `phase_count * horizon_cycles`;
/// - every slot length is within the green bounds of its phase;
/// - consecutive slots are chained by exactly the intergreen, both within a
///   cycle and across the cycle boundary;
/// - slot 0 starts at `green_start` and does not end before `now`.
pub fn check_plan(
    plan: &SignalTimingPlan,
    pm: &PhaseModel,
    green_start: i64,
    now: i64,
) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut flag = |entity: String, rule: String| v.push(Violation { entity, rule });

    if plan.phase_count != pm.len() {
        flag("plan".into(), format!("phase_count {} != model {}", plan.phase_count, pm.len()));
        return v;
    }
    if plan.horizon_cycles == 0 {
        flag("plan".into(), "horizon_cycles is zero".into());
        return v;
    }
    if plan.slots.len() != plan.slot_count() {
        flag(
            "plan".into(),
            format!("{} slots, expected {}", plan.slots.len(), plan.slot_count()),
        );
        return v;
    }
    if plan.first_phase >= pm.len() {
        flag("plan".into(), format!("first_phase {} out of range", plan.first_phase));
        return v;
    }

    for (j, slot) in plan.slots.iter().enumerate() {
        let k = plan.slot_phase(j);
        let phase = pm.phase(k);
        let len = slot.length();
        if len < phase.g_min || len > phase.g_max {
            flag(
                format!("slot {j}"),
                format!("length {len} outside [{}, {}] of phase {k}", phase.g_min, phase.g_max),
            );
        }
        if j + 1 < plan.slots.len() {
            let expected = slot.end + phase.intergreen;
            let next = plan.slots[j + 1].start;
            if next != expected {
                flag(
                    format!("slot {}", j + 1),
                    format!("starts at {next}, expected {expected} (end + intergreen {})", phase.intergreen),
                );
            }
        }
    }

    let head = plan.slots[0];
    if head.start != green_start {
        flag("slot 0".into(), format!("starts at {}, expected green start {green_start}", head.start));
    }
    if head.end < now {
        flag("slot 0".into(), format!("ends at {} before decision time {now}", head.end));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Phase, TurnMovement};
    use crate::model::RoadId;

    fn pm(k: usize) -> PhaseModel {
        PhaseModel::new(
            (0..k)
                .map(|i| Phase {
                    turns: vec![TurnMovement {
                        entry: RoadId(2 * i as u32),
                        exit: RoadId(2 * i as u32 + 1),
                    }],
                    g_min: 5,
                    g_max: 55,
                    intergreen: 5,
                })
                .collect(),
        )
    }

    #[test]
    fn from_lengths_chains_slots_with_intergreen() {
        let pm = pm(2);
        let p = SignalTimingPlan::from_lengths(&pm, 0, 2, 100, &[10, 5, 5, 5]);
        assert_eq!(p.slots[0], PlanInterval { start: 100, end: 110 });
        assert_eq!(p.slots[1], PlanInterval { start: 115, end: 120 });
        assert_eq!(p.slots[2], PlanInterval { start: 125, end: 130 });
        assert_eq!(p.interval(0, 1), p.slots[2]);
        assert_eq!(p.horizon_end(), 140);
        assert!(check_plan(&p, &pm, 100, 105).is_empty());
    }

    #[test]
    fn rotation_maps_slots_onto_canonical_phases() {
        let pm3 = pm(3);
        let p = SignalTimingPlan::from_lengths(&pm3, 2, 2, 0, &[5; 6]);
        assert_eq!(p.slot_phase(0), 2);
        assert_eq!(p.slot_phase(1), 0);
        assert_eq!(p.slot_phase(2), 1);
        assert_eq!(p.slot_phase(3), 2);
        assert_eq!(p.interval(2, 0), p.slots[0]);
        assert_eq!(p.interval(0, 1), p.slots[4]);
        let windows: Vec<usize> = p.windows_of(0).map(|(j, _)| j).collect();
        assert_eq!(windows, vec![1, 4]);
    }

    #[test]
    fn checker_flags_bound_chain_and_initial_violations() {
        let pm = pm(2);
        let mut p = SignalTimingPlan::from_lengths(&pm, 0, 1, 100, &[10, 5]);
        p.slots[0].end = 100 + 56; // above g_max
        let v = check_plan(&p, &pm, 100, 100);
        assert!(v.iter().any(|x| x.rule.contains("outside")));
        assert!(v.iter().any(|x| x.rule.contains("expected"))); // chain broken by the edit

        let p = SignalTimingPlan::from_lengths(&pm, 0, 1, 100, &[10, 5]);
        let v = check_plan(&p, &pm, 99, 100);
        assert!(v.iter().any(|x| x.rule.contains("green start")));
        // Plan ending slot 0 before the decision time is infeasible.
        let v = check_plan(&p, &pm, 100, 111);
        assert!(v.iter().any(|x| x.rule.contains("before decision time")));
    }
}
