//! Signal head state and the safety audit of its recorded history.

use crate::model::{IntersectionId, PhaseModel, Violation};

/// State of one signal head. There is no yellow state of its own: the
/// intergreen that follows a terminated phase is modeled as all-red.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SignalState {
    Green { phase: usize, since: i64 },
    /// Clearance between phases; `next` receives green at `green_start`.
    AllRed { next: usize, green_start: i64 },
}

impl SignalState {
    /// Phase currently holding right-of-way, with its onset.
    pub fn green(&self) -> Option<(usize, i64)> {
        match *self {
            SignalState::Green { phase, since } => Some((phase, since)),
            SignalState::AllRed { .. } => None,
        }
    }

    /// Phase the controller should plan for and the (possibly future)
    /// instant it holds or will hold green from.
    pub fn planning_phase(&self) -> (usize, i64) {
        match *self {
            SignalState::Green { phase, since } => (phase, since),
            SignalState::AllRed { next, green_start } => (next, green_start),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SignalEventKind {
    GreenStart(usize),
    GreenEnd(usize),
}

/// One recorded transition of one signal head.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SignalEvent {
    pub t: i64,
    pub intersection: IntersectionId,
    pub kind: SignalEventKind,
}

/// Audits the recorded transitions of one intersection against its phase
/// model: greens alternate with all-red gaps of exactly the intergreen,
/// phases rotate in order, and every completed green lasts within
/// `[g_min, g_max]`. A trailing green without its end event is legal (the
/// episode ended mid-green).
pub fn check_trace(
    intersection: IntersectionId,
    pm: &PhaseModel,
    events: &[SignalEvent],
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |t: i64, rule: String| {
        out.push(Violation::new(format!("{intersection} t={t}"), rule));
    };
    let mut open: Option<(usize, i64)> = None;
    let mut last_end: Option<(usize, i64)> = None;
    for ev in events.iter().filter(|e| e.intersection == intersection) {
        match (ev.kind, open) {
            (SignalEventKind::GreenStart(p), None) => {
                if let Some((prev_phase, end_t)) = last_end {
                    let y = pm.phase(prev_phase).intergreen;
                    if ev.t - end_t != y {
                        flag(ev.t, format!(
                            "all-red after phase {prev_phase} lasted {}s, intergreen is {y}s",
                            ev.t - end_t
                        ));
                    }
                    if p != pm.next_phase(prev_phase) {
                        flag(ev.t, format!("phase {p} follows {prev_phase} out of rotation"));
                    }
                }
                open = Some((p, ev.t));
            }
            (SignalEventKind::GreenEnd(p), Some((open_phase, start_t))) => {
                if p != open_phase {
                    flag(ev.t, format!("green end for phase {p} while {open_phase} is green"));
                }
                let held = ev.t - start_t;
                let ph = pm.phase(open_phase);
                if held < ph.g_min || held > ph.g_max {
                    flag(ev.t, format!(
                        "phase {open_phase} held green {held}s, bounds [{}, {}]",
                        ph.g_min, ph.g_max
                    ));
                }
                open = None;
                last_end = Some((open_phase, ev.t));
            }
            (SignalEventKind::GreenStart(p), Some(_)) => {
                flag(ev.t, format!("green start for phase {p} while another green is open"));
            }
            (SignalEventKind::GreenEnd(p), None) => {
                flag(ev.t, format!("green end for phase {p} with no green open"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Phase, RoadId, TurnMovement};

    fn pm2() -> PhaseModel {
        PhaseModel::new(
            (0..2)
                .map(|i| Phase {
                    turns: vec![TurnMovement {
                        entry: RoadId(2 * i),
                        exit: RoadId(2 * i + 1),
                    }],
                    g_min: 5,
                    g_max: 55,
                    intergreen: 5,
                })
                .collect(),
        )
    }

    fn ev(t: i64, kind: SignalEventKind) -> SignalEvent {
        SignalEvent { t, intersection: IntersectionId(0), kind }
    }

    #[test]
    fn a_legal_rotation_passes() {
        let events = vec![
            ev(0, SignalEventKind::GreenStart(0)),
            ev(12, SignalEventKind::GreenEnd(0)),
            ev(17, SignalEventKind::GreenStart(1)),
            ev(22, SignalEventKind::GreenEnd(1)),
            ev(27, SignalEventKind::GreenStart(0)),
        ];
        assert!(check_trace(IntersectionId(0), &pm2(), &events).is_empty());
    }

    #[test]
    fn short_green_and_short_clearance_are_flagged() {
        let events = vec![
            ev(0, SignalEventKind::GreenStart(0)),
            ev(3, SignalEventKind::GreenEnd(0)),
            ev(6, SignalEventKind::GreenStart(1)),
        ];
        let v = check_trace(IntersectionId(0), &pm2(), &events);
        assert!(v.iter().any(|v| v.rule.contains("held green 3s")));
        assert!(v.iter().any(|v| v.rule.contains("lasted 3s")));
    }

    #[test]
    fn out_of_rotation_phase_is_flagged() {
        let events = vec![
            ev(0, SignalEventKind::GreenStart(0)),
            ev(10, SignalEventKind::GreenEnd(0)),
            ev(15, SignalEventKind::GreenStart(0)),
        ];
        let v = check_trace(IntersectionId(0), &pm2(), &events);
        assert!(v.iter().any(|v| v.rule.contains("out of rotation")));
    }

    #[test]
    fn planning_phase_covers_both_states() {
        assert_eq!(SignalState::Green { phase: 1, since: 40 }.planning_phase(), (1, 40));
        assert_eq!(SignalState::AllRed { next: 0, green_start: 61 }.planning_phase(), (0, 61));
        assert_eq!(SignalState::AllRed { next: 0, green_start: 61 }.green(), None);
    }
}
