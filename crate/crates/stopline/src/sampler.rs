//! Turn sampling and cluster construction.
//!
//! A controller only observes (vehicle id, entry road, estimated stop-line
//! arrival). Where each vehicle goes next is uncertain; this module turns
//! such observations into scheduler inflows in two ways:
//!
//! - [`draw_sample_set`]: draw integer turn realizations per vehicle from the
//!   known turning proportions, one independent substream per sample;
//! - [`expected_inflow`]: split every vehicle into fractional copies weighted
//!   by turn probability, producing the single expected traffic realization.
//!
//! Either way the assigned vehicles are grouped per phase and clustered by
//! arrival proximity on the 1 s controller grid.

use crate::model::{
    Cluster, ClusterMember, InflowSample, IntersectionId, ModelError, NetworkTopology, RoadId,
    VehicleId,
};
use crate::rng;
use rand::Rng;

/// Controller time grid, seconds. Arrival estimates are quantized to this
/// resolution before clustering.
pub const CONTROLLER_GRID: f64 = 1.0;

/// Substream tag for turn sampling.
const TAG_TURNS: u64 = 0x7475_726e;

/// One observed vehicle. `weight` is 1 for a physically observed vehicle and
/// fractional for an expected copy relayed by a neighbor.
#[derive(Clone, PartialEq, Debug)]
pub struct DetectedVehicle {
    pub id: VehicleId,
    pub entry: RoadId,
    /// Estimated stop-line arrival, absolute seconds.
    pub eta: f64,
    pub weight: f64,
}

/// A vehicle with an assigned exit road (sampled or expected copy).
#[derive(Clone, PartialEq, Debug)]
pub struct TurnedVehicle {
    pub id: VehicleId,
    pub eta: f64,
    pub exit: RoadId,
    pub phase: usize,
    pub weight: f64,
}

/// Clustering parameters.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SamplerConfig {
    /// Seconds of green one vehicle consumes at the stop line.
    pub discharge_headway: f64,
    /// Clusters closer than this on the arrival axis are merged, seconds.
    pub merge_threshold: f64,
}

/// A set of equally likely inflow realizations for one decision.
#[derive(Clone, PartialEq, Debug)]
pub struct SampleSet {
    pub samples: Vec<InflowSample>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One turning option out of an entry road.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TurnOption {
    pub exit: RoadId,
    pub p: f64,
    pub phase: usize,
}

/// Per-intersection lookup from entry road to its turning options, with the
/// serving phase resolved once up front. Option order follows the
/// configuration row order, which fixes the sampling stream layout.
#[derive(Clone, Debug)]
pub struct TurnTable {
    phase_count: usize,
    by_entry: Vec<(RoadId, Vec<TurnOption>)>,
}

impl TurnTable {
    pub fn build(topo: &NetworkTopology, i: IntersectionId) -> Result<Self, ModelError> {
        let ic = topo.intersection(i);
        let mut by_entry: Vec<(RoadId, Vec<TurnOption>)> = topo
            .entry_roads(i)
            .iter()
            .map(|&r| (r, Vec::new()))
            .collect();
        for tp in &ic.turn_probabilities {
            let phase = ic.phase_model.phase_for_turn(tp.entry, tp.exit)?;
            let slot = by_entry
                .iter_mut()
                .find(|(r, _)| *r == tp.entry)
                .ok_or(ModelError::UnknownRoad(format!("{}", tp.entry)))?;
            slot.1.push(TurnOption { exit: tp.exit, p: tp.p, phase });
        }
        Ok(Self { phase_count: ic.phase_model.len(), by_entry })
    }

    pub fn phase_count(&self) -> usize {
        self.phase_count
    }

    pub fn options(&self, entry: RoadId) -> &[TurnOption] {
        self.by_entry
            .iter()
            .find(|(r, _)| *r == entry)
            .map(|(_, o)| o.as_slice())
            .unwrap_or(&[])
    }

    /// Draws one exit for a vehicle entering on `entry`. Exactly one uniform
    /// draw is consumed even when only one turn is permitted, so substream
    /// alignment does not depend on the road a vehicle happens to be on.
    pub fn sample_exit(&self, entry: RoadId, rng: &mut impl Rng) -> TurnOption {
        let options = self.options(entry);
        debug_assert!(!options.is_empty(), "entry road without turn options");
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &o in options {
            acc += o.p;
            if u < acc {
                return o;
            }
        }
        *options.last().expect("non-empty options")
    }
}

/// Draws one exit per vehicle, in input order. Returned options align with
/// the input slice.
pub fn sample_turns(
    vehicles: &[DetectedVehicle],
    table: &TurnTable,
    rng: &mut impl Rng,
) -> Vec<TurnOption> {
    vehicles.iter().map(|v| table.sample_exit(v.entry, rng)).collect()
}

fn quantize(eta: f64) -> f64 {
    (eta / CONTROLLER_GRID).round() * CONTROLLER_GRID
}

/// Groups assigned vehicles per phase and merges arrival-adjacent vehicles
/// into clusters. Arrivals are quantized to the controller grid; a gap of at
/// most `merge_threshold` seconds joins two neighbors into one cluster. A
/// cluster's length is `max(arrival span, count * discharge_headway)`.
pub fn cluster_vehicles(
    turned: &[TurnedVehicle],
    phase_count: usize,
    cfg: &SamplerConfig,
) -> InflowSample {
    let mut buckets: Vec<Vec<ClusterMember>> = vec![Vec::new(); phase_count];
    for t in turned {
        debug_assert!(t.phase < phase_count);
        buckets[t.phase].push(ClusterMember {
            vehicle: t.id,
            eta: quantize(t.eta),
            exit: t.exit,
            weight: t.weight,
        });
    }
    let mut per_phase = Vec::with_capacity(phase_count);
    for mut members in buckets {
        members.sort_by(|a, b| a.eta.total_cmp(&b.eta).then(a.vehicle.cmp(&b.vehicle)));
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut run: Vec<ClusterMember> = Vec::new();
        for m in members {
            if let Some(last) = run.last() {
                if m.eta - last.eta > cfg.merge_threshold {
                    clusters.push(finish_cluster(std::mem::take(&mut run), cfg));
                }
            }
            run.push(m);
        }
        if !run.is_empty() {
            clusters.push(finish_cluster(run, cfg));
        }
        per_phase.push(clusters);
    }
    InflowSample { per_phase }
}

fn finish_cluster(members: Vec<ClusterMember>, cfg: &SamplerConfig) -> Cluster {
    let arrival = members[0].eta;
    let span = members.last().expect("non-empty cluster").eta - arrival;
    let count: f64 = members.iter().map(|m| m.weight).sum();
    let length = span.max(count * cfg.discharge_headway);
    Cluster { arrival, length, count, members }
}

/// The single expected realization: every vehicle contributes one fractional
/// copy per permitted turn, weighted by `vehicle.weight * p`.
pub fn expected_inflow(
    vehicles: &[DetectedVehicle],
    table: &TurnTable,
    cfg: &SamplerConfig,
) -> InflowSample {
    let mut turned = Vec::new();
    for v in vehicles {
        for o in table.options(v.entry) {
            turned.push(TurnedVehicle {
                id: v.id,
                eta: v.eta,
                exit: o.exit,
                phase: o.phase,
                weight: v.weight * o.p,
            });
        }
    }
    cluster_vehicles(&turned, table.phase_count(), cfg)
}

fn sample_one(
    vehicles: &[DetectedVehicle],
    table: &TurnTable,
    cfg: &SamplerConfig,
    rng: &mut impl Rng,
) -> InflowSample {
    let turned: Vec<TurnedVehicle> = vehicles
        .iter()
        .map(|v| {
            let o = table.sample_exit(v.entry, rng);
            TurnedVehicle { id: v.id, eta: v.eta, exit: o.exit, phase: o.phase, weight: v.weight }
        })
        .collect();
    cluster_vehicles(&turned, table.phase_count(), cfg)
}

/// Draws `count` independent realizations of the same observation. Sample
/// `j` uses the substream `(seed, j)`, so adding samples never perturbs the
/// draws of earlier ones.
pub fn draw_sample_set(
    vehicles: &[DetectedVehicle],
    table: &TurnTable,
    cfg: &SamplerConfig,
    count: usize,
    seed: u64,
) -> SampleSet {
    let samples = (0..count)
        .map(|j| {
            let mut rng = rng::substream(seed, &[TAG_TURNS, j as u64]);
            sample_one(vehicles, table, cfg, &mut rng)
        })
        .collect();
    SampleSet { samples, seed }
}

/// Like [`draw_sample_set`], but each sample has its own observation list
/// (local vehicles plus the matching sample of neighbor projections).
pub fn draw_sample_set_extended(
    per_sample: &[Vec<DetectedVehicle>],
    table: &TurnTable,
    cfg: &SamplerConfig,
    seed: u64,
) -> SampleSet {
    let samples = per_sample
        .iter()
        .enumerate()
        .map(|(j, vehicles)| {
            let mut rng = rng::substream(seed, &[TAG_TURNS, j as u64]);
            sample_one(vehicles, table, cfg, &mut rng)
        })
        .collect();
    SampleSet { samples, seed }
}
