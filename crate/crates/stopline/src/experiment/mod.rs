//! Benchmark scenarios, scenario files, and controller comparison sweeps.
//!
//! [`build_scenario`] constructs the built-in networks; [`save_scenario`] /
//! [`load_scenario`] move them through a versioned, name-based text format
//! where every timing default can be overridden; [`run_sweep`] runs a
//! controller-by-demand matrix of episodes and writes per-vehicle, per-cell,
//! and summary tables suitable for plotting.

mod config;
mod scenario;
mod sweep;

pub use config::{load_scenario, save_scenario, scenario_from_toml, scenario_to_toml};
pub use scenario::{build_scenario, Scenario, ScenarioDefaults, SCENARIO_NAMES};
pub use sweep::{
    run_sweep, CellMetrics, CellResult, ControllerKind, SummaryRow, SweepOutput, SweepSpec,
};

use crate::sim::SimError;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum ExperimentError {
    #[error("unknown scenario {0:?}; built-ins are isolated, arterial_1x5, grid_5x5")]
    UnknownScenario(String),
    #[error("unknown controller {0:?}; expected UTuS, CTuS, USUR, or CSUR")]
    UnknownController(String),
    /// A scenario file that parses but does not describe a usable scenario.
    #[error("scenario file: {0}")]
    Schema(String),
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario file: {0}")]
    Emit(#[from] toml::ser::Error),
    #[error("sweep: {0}")]
    BadSweep(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
