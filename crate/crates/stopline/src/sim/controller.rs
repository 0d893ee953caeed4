//! One controller decision: observe, (optionally) merge neighbor
//! projections, realize turn scenarios, solve, and act.

use super::SimError;
use crate::coordination::{merge_nonlocal, project_outflows, OutflowMessage, PROJECTION_EXTENSION};
use crate::model::{DecisionAction, IntersectionId, PhaseModel, RoadId, SignalTimingPlan};
use crate::sampler::{
    draw_sample_set, draw_sample_set_extended, expected_inflow, DetectedVehicle, SampleSet,
    SamplerConfig, TurnTable,
};
use crate::scheduler::{
    check_solution, decide_action, guided_search_shift, solve, ScheduleProblem, Solution,
    SolverParams,
};
use std::collections::BTreeMap;

/// How the controller turns one observation into scheduling scenarios.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TrafficModel {
    /// Monte Carlo turn realizations; the objective is their average.
    Sampled { count: usize },
    /// One scenario of probability-weighted fractional copies.
    Expected,
}

/// Per-intersection planning policy. The same config drives every
/// intersection of an episode.
#[derive(Clone, Copy, Debug)]
pub struct PlannerConfig {
    pub model: TrafficModel,
    /// Splice neighbor outflow projections into the observation.
    pub coordinated: bool,
    /// Seed each solve with the previous decision's shifted plan.
    pub guided: bool,
    pub horizon_cycles: usize,
    /// Budget for each of the once-per-second solves. The default allows
    /// far less than [`SolverParams::default`], which is sized for offline
    /// solving rather than a rolling decision loop.
    pub solver: SolverParams,
    /// Clustering parameters. `discharge_headway` is the single-lane value;
    /// the engine divides it by each intersection's entry lane count.
    pub sampler: SamplerConfig,
    /// How far past a merged plan's last service the neighbor projection
    /// window reaches, seconds.
    pub projection_extension: f64,
    /// Green extension granted per decision, seconds.
    pub resolution: i64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            model: TrafficModel::Sampled { count: 10 },
            coordinated: false,
            guided: false,
            horizon_cycles: 3,
            solver: SolverParams { time_limit: 0.05, nodes_per_second: 200_000 },
            sampler: SamplerConfig { discharge_headway: 2.5, merge_threshold: 3.0 },
            projection_extension: PROJECTION_EXTENSION,
            resolution: 1,
        }
    }
}

impl PlannerConfig {
    /// Scenario count per decision; the expected model is one scenario.
    pub fn sample_count(&self) -> usize {
        match self.model {
            TrafficModel::Sampled { count } => count,
            TrafficModel::Expected => 1,
        }
    }
}

/// Everything one intersection knows at one decision instant.
pub struct DecisionInput<'a> {
    pub intersection: IntersectionId,
    pub phase_model: &'a PhaseModel,
    pub table: &'a TurnTable,
    pub current_phase: usize,
    pub green_start: i64,
    pub now: i64,
    pub local: &'a [DetectedVehicle],
    /// Last round's messages on this intersection's incoming links.
    pub incoming: &'a [OutflowMessage],
    pub travel_in: &'a BTreeMap<RoadId, f64>,
    pub travel_out: &'a BTreeMap<RoadId, f64>,
    pub prev_plan: Option<&'a SignalTimingPlan>,
    pub seed: u64,
}

/// The product of one decision.
pub struct Decision {
    pub action: DecisionAction,
    pub solution: Solution,
    /// Outflow projections for downstream neighbors; empty when
    /// uncoordinated.
    pub messages: Vec<OutflowMessage>,
    /// A shifted previous plan seeded the search.
    pub warm_used: bool,
    /// The scenarios the solution was priced on, for external audits.
    pub samples: SampleSet,
}

fn build_samples(cfg: &PlannerConfig, input: &DecisionInput<'_>) -> Result<SampleSet, SimError> {
    if cfg.coordinated {
        let merged = merge_nonlocal(
            input.local,
            input.incoming,
            input.travel_in,
            input.now as f64,
            cfg.sample_count(),
            cfg.projection_extension,
        )?;
        Ok(match cfg.model {
            TrafficModel::Sampled { .. } => {
                draw_sample_set_extended(&merged, input.table, &cfg.sampler, input.seed)
            }
            TrafficModel::Expected => SampleSet {
                samples: vec![expected_inflow(&merged[0], input.table, &cfg.sampler)],
                seed: input.seed,
            },
        })
    } else {
        Ok(match cfg.model {
            TrafficModel::Sampled { count } => {
                draw_sample_set(input.local, input.table, &cfg.sampler, count, input.seed)
            }
            TrafficModel::Expected => SampleSet {
                samples: vec![expected_inflow(input.local, input.table, &cfg.sampler)],
                seed: input.seed,
            },
        })
    }
}

/// Runs one full decision. Every solution passes the schedule checker
/// before it is acted on; a rejection is a bug, not a recoverable state.
pub fn decide(cfg: &PlannerConfig, input: &DecisionInput<'_>) -> Result<Decision, SimError> {
    let samples = build_samples(cfg, input)?;
    let problem = ScheduleProblem::new(
        input.phase_model,
        input.current_phase,
        input.green_start,
        input.now,
        cfg.horizon_cycles,
        samples,
    )?;
    let warm = if cfg.guided {
        input.prev_plan.and_then(|p| {
            guided_search_shift(
                p,
                input.phase_model,
                input.current_phase,
                input.green_start,
                input.now,
            )
        })
    } else {
        None
    };
    let warm_used = warm.is_some();
    let solution = solve(&problem, &cfg.solver, warm.as_ref())?;
    if let Some(v) = check_solution(&problem, &solution).first() {
        return Err(SimError::InvalidSolution {
            intersection: input.intersection,
            t: input.now,
            detail: v.to_string(),
        });
    }
    let action = decide_action(&solution, input.now, cfg.resolution);
    let messages = if cfg.coordinated {
        project_outflows(
            &solution.schedule,
            &problem.samples.samples,
            input.intersection,
            input.travel_out,
        )
    } else {
        Vec::new()
    };
    Ok(Decision { action, solution, messages, warm_used, samples: problem.samples })
}
