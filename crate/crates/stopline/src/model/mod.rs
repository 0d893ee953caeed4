//! Domain types shared by the sampler, scheduler, coordinator, and simulator.

mod cluster;
mod ids;
mod network;
mod phase;
mod plan;
mod validate;

pub use cluster::{Cluster, ClusterMember, InflowSample};
pub use ids::{IntersectionId, RoadId, VehicleId};
pub use network::{IntersectionConfig, NetworkTopology, Road, TurnProbability};
pub use phase::{DecisionAction, InitialConditions, Phase, PhaseModel, TurnMovement};
pub use plan::{check_plan, PlanInterval, SignalTimingPlan};
pub use validate::{validate_network, Violation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("turn {entry:?} -> {exit:?} is not served by any phase")]
    TurnNotServed { entry: RoadId, exit: RoadId },
    #[error("unknown road name {0:?}")]
    UnknownRoad(String),
    #[error("unknown intersection name {0:?}")]
    UnknownIntersection(String),
    #[error("invalid network: {0} violation(s), first: {1}")]
    InvalidNetwork(usize, String),
}
