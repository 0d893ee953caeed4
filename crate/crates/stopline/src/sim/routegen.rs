//! Demand generation: Poisson entries on the boundary roads, each vehicle
//! with a full route drawn from the network's turning proportions. These
//! routes are the ground truth the controllers never see; they only learn a
//! vehicle's turn when it crosses the stop line.

use super::SimError;
use crate::model::{NetworkTopology, RoadId, VehicleId};
use crate::rng;
use crate::sampler::TurnTable;
use rand::Rng;

/// Substream tag for per-source spawn and route draws.
const TAG_SPAWN: u64 = 0x7370_6177;

/// Walks longer than this indicate a trapped random walk.
const MAX_ROUTE_LEGS: usize = 1_000;

/// One piece of a piecewise-constant demand split: from `from` until the
/// next band (or the end of generation), entry road `r` receives the
/// fraction `shares[r]` of the total rate. Roads left out receive none.
#[derive(Clone, PartialEq, Debug)]
pub struct ShareBand {
    pub from: f64,
    pub shares: Vec<(RoadId, f64)>,
}

/// Aggregate demand and how it is split over the boundary entry roads.
#[derive(Clone, PartialEq, Debug)]
pub struct DemandProfile {
    /// Network-total entry rate.
    pub vehicles_per_hour: f64,
    /// Entries occur in `[0, duration)` seconds; the episode then drains.
    pub duration: f64,
    /// Share schedule; empty means a uniform split for the whole window.
    pub bands: Vec<ShareBand>,
}

impl DemandProfile {
    pub fn uniform(vehicles_per_hour: f64, duration: f64) -> Self {
        DemandProfile { vehicles_per_hour, duration, bands: Vec::new() }
    }
}

/// One generated vehicle: its entry instant and the roads it will take. The
/// last leg is the sink road it leaves the network on.
#[derive(Clone, PartialEq, Debug)]
pub struct SpawnedVehicle {
    pub id: VehicleId,
    pub spawn: f64,
    pub route: Vec<RoadId>,
}

fn walk_route(
    topo: &NetworkTopology,
    tables: &[TurnTable],
    start: RoadId,
    rng: &mut impl Rng,
) -> Result<Vec<RoadId>, SimError> {
    let mut route = vec![start];
    let mut road = start;
    while let Some(x) = topo.downstream(road) {
        if route.len() >= MAX_ROUTE_LEGS {
            return Err(SimError::RouteTooLong { entry: start });
        }
        let choice = tables[x.0 as usize].sample_exit(road, rng);
        route.push(choice.exit);
        road = choice.exit;
    }
    Ok(route)
}

/// The share schedule as consecutive windows with per-source fractions.
fn resolve_bands(
    demand: &DemandProfile,
    sources: &[RoadId],
) -> Result<Vec<(f64, f64, Vec<(RoadId, f64)>)>, SimError> {
    if demand.bands.is_empty() {
        let share = 1.0 / sources.len() as f64;
        let shares = sources.iter().map(|&r| (r, share)).collect();
        return Ok(vec![(0.0, demand.duration, shares)]);
    }
    let mut out = Vec::new();
    for (i, band) in demand.bands.iter().enumerate() {
        let expected_from = if i == 0 { 0.0 } else { demand.bands[i - 1].from };
        if (i == 0 && band.from != 0.0) || (i > 0 && band.from <= expected_from) {
            return Err(SimError::BadConfig(format!(
                "demand band {i} starts at {}; bands must begin at 0 and ascend",
                band.from
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for &(r, share) in &band.shares {
            if !sources.contains(&r) {
                return Err(SimError::BadConfig(format!("{r} in band {i} is not an entry road")));
            }
            if !seen.insert(r) {
                return Err(SimError::BadConfig(format!("{r} appears twice in band {i}")));
            }
            if !(share >= 0.0) {
                return Err(SimError::BadConfig(format!("negative share in band {i}")));
            }
            total += share;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimError::BadConfig(format!("band {i} shares sum to {total}, not 1")));
        }
        let end = demand.bands.get(i + 1).map_or(demand.duration, |b| b.from);
        out.push((band.from, end.min(demand.duration), band.shares.clone()));
    }
    Ok(out)
}

/// Generates the full episode demand. Each source road draws from its own
/// substream of `seed` (exponential gaps, then the route of each vehicle),
/// so sources are independent and insensitive to each other's volume. Ids
/// are assigned in spawn order after all sources are merged.
pub fn generate_traffic(
    topo: &NetworkTopology,
    demand: &DemandProfile,
    seed: u64,
) -> Result<Vec<SpawnedVehicle>, SimError> {
    let tables = topo
        .intersection_ids()
        .map(|i| TurnTable::build(topo, i))
        .collect::<Result<Vec<_>, _>>()?;
    let sources = topo.source_roads();
    let mut all: Vec<(f64, RoadId, Vec<RoadId>)> = Vec::new();
    if !sources.is_empty() && demand.vehicles_per_hour > 0.0 {
        let bands = resolve_bands(demand, &sources)?;
        for &r in &sources {
            let mut rng = rng::substream(seed, &[TAG_SPAWN, r.0 as u64]);
            for (from, until, shares) in &bands {
                let share = shares.iter().find(|(s, _)| *s == r).map_or(0.0, |(_, v)| *v);
                let rate = demand.vehicles_per_hour * share / 3600.0;
                if rate <= 0.0 {
                    continue;
                }
                let mut t = *from;
                loop {
                    let u: f64 = rng.random();
                    t += -(1.0 - u).ln() / rate;
                    if t >= *until {
                        break;
                    }
                    all.push((t, r, walk_route(topo, &tables, r, &mut rng)?));
                }
            }
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(all
        .into_iter()
        .enumerate()
        .map(|(i, (spawn, _, route))| SpawnedVehicle { id: VehicleId(i as u64), spawn, route })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        IntersectionConfig, NetworkTopology, Phase, PhaseModel, Road, TurnMovement,
        TurnProbability,
    };

    /// in -> X -> {straight (0.7), side (0.3)}, both sinks.
    fn fork() -> NetworkTopology {
        let roads = vec![
            Road { name: "in".into(), from: "a".into(), to: "X".into(), length: 300.0, lanes: 1 },
            Road { name: "s".into(), from: "X".into(), to: "b".into(), length: 300.0, lanes: 1 },
            Road { name: "l".into(), from: "X".into(), to: "c".into(), length: 300.0, lanes: 1 },
        ];
        let pm = PhaseModel::new(vec![
            Phase {
                turns: vec![TurnMovement { entry: RoadId(0), exit: RoadId(1) }],
                g_min: 5,
                g_max: 55,
                intergreen: 5,
            },
            Phase {
                turns: vec![TurnMovement { entry: RoadId(0), exit: RoadId(2) }],
                g_min: 5,
                g_max: 55,
                intergreen: 5,
            },
        ]);
        let ic = IntersectionConfig {
            name: "X".into(),
            phase_model: pm,
            turn_probabilities: vec![
                TurnProbability { entry: RoadId(0), exit: RoadId(1), p: 0.7 },
                TurnProbability { entry: RoadId(0), exit: RoadId(2), p: 0.3 },
            ],
        };
        NetworkTopology::new(roads, vec![ic])
    }

    #[test]
    fn volume_tracks_the_poisson_rate() {
        let topo = fork();
        let demand = DemandProfile::uniform(900.0, 900.0);
        let vehicles = generate_traffic(&topo, &demand, 11).unwrap();
        // One source at 0.25 veh/s for 900 s: mean 225, sd 15. Stay within 4 sd.
        let n = vehicles.len() as f64;
        assert!((n - 225.0).abs() < 60.0, "got {n} spawns");
    }

    #[test]
    fn routes_end_on_a_sink_and_ids_follow_spawn_order() {
        let topo = fork();
        let demand = DemandProfile::uniform(600.0, 300.0);
        let vehicles = generate_traffic(&topo, &demand, 7).unwrap();
        assert!(!vehicles.is_empty());
        let mut straight = 0usize;
        for (i, v) in vehicles.iter().enumerate() {
            assert_eq!(v.id, VehicleId(i as u64));
            assert_eq!(v.route[0], RoadId(0));
            let last = *v.route.last().unwrap();
            assert!(topo.is_sink(last));
            if i > 0 {
                assert!(v.spawn >= vehicles[i - 1].spawn);
            }
            if last == RoadId(1) {
                straight += 1;
            }
        }
        let share = straight as f64 / vehicles.len() as f64;
        assert!((share - 0.7).abs() < 0.2, "straight share {share}");
    }

    #[test]
    fn same_seed_reproduces_the_same_demand() {
        let topo = fork();
        let demand = DemandProfile::uniform(900.0, 200.0);
        let a = generate_traffic(&topo, &demand, 3).unwrap();
        let b = generate_traffic(&topo, &demand, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_traffic(&topo, &demand, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_demand_spawns_nothing() {
        let topo = fork();
        let demand = DemandProfile::uniform(0.0, 900.0);
        assert!(generate_traffic(&topo, &demand, 1).unwrap().is_empty());
    }

    /// {a, b} -> X -> out; two entries so share schedules are observable.
    fn merge2() -> NetworkTopology {
        let roads = vec![
            Road { name: "a".into(), from: "p".into(), to: "X".into(), length: 300.0, lanes: 1 },
            Road { name: "b".into(), from: "q".into(), to: "X".into(), length: 300.0, lanes: 1 },
            Road { name: "out".into(), from: "X".into(), to: "r".into(), length: 300.0, lanes: 1 },
        ];
        let phase = |entry: u32| Phase {
            turns: vec![TurnMovement { entry: RoadId(entry), exit: RoadId(2) }],
            g_min: 5,
            g_max: 55,
            intergreen: 5,
        };
        let ic = IntersectionConfig {
            name: "X".into(),
            phase_model: PhaseModel::new(vec![phase(0), phase(1)]),
            turn_probabilities: vec![
                TurnProbability { entry: RoadId(0), exit: RoadId(2), p: 1.0 },
                TurnProbability { entry: RoadId(1), exit: RoadId(2), p: 1.0 },
            ],
        };
        NetworkTopology::new(roads, vec![ic])
    }

    #[test]
    fn share_bands_move_the_load_between_entries() {
        let topo = merge2();
        let demand = DemandProfile {
            vehicles_per_hour: 1800.0,
            duration: 200.0,
            bands: vec![
                ShareBand { from: 0.0, shares: vec![(RoadId(0), 1.0)] },
                ShareBand { from: 100.0, shares: vec![(RoadId(0), 0.2), (RoadId(1), 0.8)] },
            ],
        };
        let vehicles = generate_traffic(&topo, &demand, 5).unwrap();
        let (mut early_b, mut late_a, mut late_b) = (0, 0, 0);
        for v in &vehicles {
            assert!(v.spawn < 200.0);
            match (v.spawn < 100.0, v.route[0]) {
                (true, RoadId(1)) => early_b += 1,
                (false, RoadId(0)) => late_a += 1,
                (false, RoadId(1)) => late_b += 1,
                _ => {}
            }
        }
        assert_eq!(early_b, 0, "road b must be silent in the first band");
        assert!(late_b > 2 * late_a, "late split {late_a}:{late_b} should favour b");
    }

    #[test]
    fn malformed_band_schedules_are_rejected() {
        let topo = merge2();
        let attempt = |bands: Vec<ShareBand>| {
            let demand = DemandProfile { vehicles_per_hour: 600.0, duration: 100.0, bands };
            generate_traffic(&topo, &demand, 1)
        };
        // First band must start at 0.
        assert!(attempt(vec![ShareBand { from: 5.0, shares: vec![(RoadId(0), 1.0)] }]).is_err());
        // Band starts must ascend.
        assert!(attempt(vec![
            ShareBand { from: 0.0, shares: vec![(RoadId(0), 1.0)] },
            ShareBand { from: 0.0, shares: vec![(RoadId(1), 1.0)] },
        ])
        .is_err());
        // Shares must sum to one.
        assert!(attempt(vec![ShareBand {
            from: 0.0,
            shares: vec![(RoadId(0), 0.5), (RoadId(1), 0.4)],
        }])
        .is_err());
        // Only entry roads may carry a share.
        assert!(attempt(vec![ShareBand {
            from: 0.0,
            shares: vec![(RoadId(2), 1.0)],
        }])
        .is_err());
        // No road twice within a band.
        assert!(attempt(vec![ShareBand {
            from: 0.0,
            shares: vec![(RoadId(0), 0.5), (RoadId(0), 0.5)],
        }])
        .is_err());
    }
}
