//! Per-road vehicle storage: a moving section and per-phase stop-line bays.

use crate::model::{Road, RoadId, VehicleId};
use std::collections::VecDeque;

/// A vehicle in the moving section of a road. `pos` is meters from the road
/// tail; it can be negative right after a mid-tick crossing, meaning the
/// vehicle is still inside the upstream intersection box.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct MovingVehicle {
    pub id: VehicleId,
    pub pos: f64,
    /// Next road on the vehicle's route.
    pub exit: RoadId,
    /// Phase serving `(this road, exit)` at the downstream intersection.
    pub phase: usize,
}

/// A vehicle waiting in a stop-line bay.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct QueuedVehicle {
    pub id: VehicleId,
    pub exit: RoadId,
}

/// Mutable state of one directed road.
///
/// Each phase of the downstream intersection gets its own bay: a through
/// vehicle is never stuck behind a queued left-turner. The bays share the
/// road's physical storage only through `occupancy`, which caps admission.
#[derive(Clone, Debug)]
pub struct RoadState {
    pub id: RoadId,
    pub length: f64,
    pub lanes: u32,
    /// Vehicles the road can hold at jam spacing.
    pub capacity: usize,
    spacing: f64,
    pub moving: VecDeque<MovingVehicle>,
    /// One bay per downstream phase; empty for sink roads.
    pub bays: Vec<VecDeque<QueuedVehicle>>,
    /// Earliest instant the stop line may release the next vehicle.
    pub free_ready_at: f64,
    /// Vehicles present or inbound (reserved mid-crossing).
    pub occupancy: usize,
}

impl RoadState {
    pub fn new(id: RoadId, road: &Road, phase_count: usize, spacing: f64) -> Self {
        let capacity = (road.length * road.lanes as f64 / spacing).floor() as usize;
        RoadState {
            id,
            length: road.length,
            lanes: road.lanes,
            capacity: capacity.max(1),
            spacing,
            moving: VecDeque::new(),
            bays: (0..phase_count).map(|_| VecDeque::new()).collect(),
            free_ready_at: f64::NEG_INFINITY,
            occupancy: 0,
        }
    }

    pub fn has_space(&self) -> bool {
        self.occupancy < self.capacity
    }

    pub fn queued_total(&self) -> usize {
        self.bays.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy == 0 && self.moving.is_empty() && self.queued_total() == 0
    }

    /// Where a vehicle bound for `phase` has to stop: the stop line, set back
    /// by the jam length of the vehicles already in its bay.
    pub fn stop_pos(&self, phase: usize) -> f64 {
        self.length - self.spacing * self.bays[phase].len() as f64 / self.lanes as f64
    }

    /// Seconds of green the stop line needs per vehicle.
    pub fn discharge_headway(&self, saturation_headway: f64) -> f64 {
        saturation_headway / self.lanes as f64
    }
}
