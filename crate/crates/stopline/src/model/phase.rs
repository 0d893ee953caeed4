use super::ids::RoadId;
use super::ModelError;
use serde::{Deserialize, Serialize};

/// A permitted movement through an intersection: entry road to exit road.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct TurnMovement {
    pub entry: RoadId,
    pub exit: RoadId,
}

/// One signal phase: the turn movements that share right-of-way, together
/// with the green bounds and the all-red time that follows the phase.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Phase {
    pub turns: Vec<TurnMovement>,
    /// Minimum green, seconds. Strictly positive.
    pub g_min: i64,
    /// Maximum green, seconds. At least `g_min`.
    pub g_max: i64,
    /// All-red clearance after this phase ends, seconds. Non-negative.
    pub intergreen: i64,
}

/// The fixed cyclic phase sequence of one intersection. Phase `k` is always
/// followed by phase `(k + 1) % len`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct PhaseModel {
    pub phases: Vec<Phase>,
}

impl PhaseModel {
    pub fn new(phases: Vec<Phase>) -> Self {
        Self { phases }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phase(&self, k: usize) -> &Phase {
        &self.phases[k]
    }

    pub fn next_phase(&self, k: usize) -> usize {
        (k + 1) % self.phases.len()
    }

    /// The phase serving `entry -> exit`, if any phase lists that movement.
    pub fn phase_for_turn(&self, entry: RoadId, exit: RoadId) -> Result<usize, ModelError> {
        for (k, phase) in self.phases.iter().enumerate() {
            if phase.turns.iter().any(|t| t.entry == entry && t.exit == exit) {
                return Ok(k);
            }
        }
        Err(ModelError::TurnNotServed { entry, exit })
    }
}

/// Signal state at a decision instant: which phase holds right-of-way and
/// for how long it has held it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct InitialConditions {
    pub current_phase: usize,
    /// Seconds of green already consumed; within `[0, g_max]` of the phase.
    pub elapsed_green: i64,
}

/// Controller output for one decision step.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DecisionAction {
    /// Keep the current phase green for another `0 < s <= resolution` seconds.
    Extend(i64),
    /// End the current phase now; the intergreen clearance starts immediately.
    Terminate,
}
