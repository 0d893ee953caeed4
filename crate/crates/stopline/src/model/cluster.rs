use super::ids::{RoadId, VehicleId};

/// One vehicle's contribution to a cluster. `weight` is 1 for a sampled
/// (integer) realization and a fraction of 1 when the cluster represents an
/// expected inflow.
#[derive(Clone, PartialEq, Debug)]
pub struct ClusterMember {
    pub vehicle: VehicleId,
    /// Estimated stop-line arrival, absolute seconds, quantized to the
    /// controller grid.
    pub eta: f64,
    /// The exit road assumed for this member in this realization.
    pub exit: RoadId,
    pub weight: f64,
}

/// A platoon of (possibly fractional) vehicles approaching the stop line on
/// one phase: arrival time of its head, temporal length, and total weight.
#[derive(Clone, PartialEq, Debug)]
pub struct Cluster {
    /// Arrival of the first member, absolute seconds.
    pub arrival: f64,
    /// Seconds of green needed to discharge the whole cluster. At least the
    /// arrival span of its members, at least `count * discharge_headway`.
    pub length: f64,
    /// Sum of member weights.
    pub count: f64,
    /// Members ordered by (eta, vehicle id).
    pub members: Vec<ClusterMember>,
}

impl Cluster {
    /// Last-member arrival.
    pub fn arrival_end(&self) -> f64 {
        self.members.last().map_or(self.arrival, |m| m.eta)
    }
}

/// One realization of the approaching traffic: per phase, the clusters in
/// non-decreasing arrival order.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct InflowSample {
    pub per_phase: Vec<Vec<Cluster>>,
}

impl InflowSample {
    pub fn empty(phase_count: usize) -> Self {
        Self { per_phase: vec![Vec::new(); phase_count] }
    }

    pub fn is_empty(&self) -> bool {
        self.per_phase.iter().all(|c| c.is_empty())
    }

    pub fn cluster_count(&self) -> usize {
        self.per_phase.iter().map(|c| c.len()).sum()
    }

    pub fn vehicle_weight(&self) -> f64 {
        self.per_phase
            .iter()
            .flatten()
            .map(|c| c.count)
            .sum()
    }
}
