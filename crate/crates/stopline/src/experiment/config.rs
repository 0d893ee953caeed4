//! Scenario files: a versioned, name-based text representation of a
//! [`Scenario`] in TOML. Roads are referenced by name everywhere, phase
//! timing falls back to the file's `[defaults]` table, and the loader
//! rejects anything the network validator would refuse to run.

use super::scenario::{Scenario, ScenarioDefaults};
use super::ExperimentError;
use crate::model::{
    validate_network, IntersectionConfig, NetworkTopology, Phase, PhaseModel, Road, RoadId,
    TurnMovement, TurnProbability,
};
use crate::sim::{DemandProfile, ShareBand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    version: u32,
    name: String,
    demand_levels: Vec<f64>,
    defaults: ScenarioDefaults,
    demand: DemandRow,
    #[serde(rename = "road")]
    roads: Vec<RoadRow>,
    #[serde(rename = "intersection")]
    intersections: Vec<IntersectionRow>,
}

#[derive(Serialize, Deserialize)]
struct DemandRow {
    vehicles_per_hour: f64,
    duration: f64,
    #[serde(rename = "band", default, skip_serializing_if = "Vec::is_empty")]
    bands: Vec<BandRow>,
}

#[derive(Serialize, Deserialize)]
struct BandRow {
    from: f64,
    #[serde(rename = "share")]
    shares: Vec<ShareRow>,
}

#[derive(Serialize, Deserialize)]
struct ShareRow {
    road: String,
    fraction: f64,
}

#[derive(Serialize, Deserialize)]
struct RoadRow {
    /// Defaults to `from>to`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    from: String,
    to: String,
    length: f64,
    #[serde(default = "one_lane")]
    lanes: u32,
}

fn one_lane() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
struct IntersectionRow {
    name: String,
    #[serde(rename = "phase")]
    phases: Vec<PhaseRow>,
    #[serde(rename = "turn")]
    turns: Vec<TurnRow>,
}

#[derive(Serialize, Deserialize)]
struct PhaseRow {
    /// `[entry road, exit road]` name pairs served by this phase.
    turns: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intergreen: Option<i64>,
}

#[derive(Serialize, Deserialize)]
struct TurnRow {
    entry: String,
    exit: String,
    p: f64,
}

fn to_file(s: &Scenario) -> ScenarioFile {
    let road_name = |id: RoadId| s.topology.road(id).name.clone();
    ScenarioFile {
        version: FORMAT_VERSION,
        name: s.name.clone(),
        demand_levels: s.demand_levels.clone(),
        defaults: s.defaults,
        demand: DemandRow {
            vehicles_per_hour: s.demand.vehicles_per_hour,
            duration: s.demand.duration,
            bands: s
                .demand
                .bands
                .iter()
                .map(|b| BandRow {
                    from: b.from,
                    shares: b
                        .shares
                        .iter()
                        .map(|&(r, fraction)| ShareRow { road: road_name(r), fraction })
                        .collect(),
                })
                .collect(),
        },
        roads: s
            .topology
            .roads
            .iter()
            .map(|r| RoadRow {
                name: (r.name != format!("{}>{}", r.from, r.to)).then(|| r.name.clone()),
                from: r.from.clone(),
                to: r.to.clone(),
                length: r.length,
                lanes: r.lanes,
            })
            .collect(),
        intersections: s
            .topology
            .intersections
            .iter()
            .map(|ic| IntersectionRow {
                name: ic.name.clone(),
                phases: ic
                    .phase_model
                    .phases
                    .iter()
                    .map(|p| PhaseRow {
                        turns: p
                            .turns
                            .iter()
                            .map(|t| (road_name(t.entry), road_name(t.exit)))
                            .collect(),
                        g_min: (p.g_min != s.defaults.g_min).then_some(p.g_min),
                        g_max: (p.g_max != s.defaults.g_max).then_some(p.g_max),
                        intergreen: (p.intergreen != s.defaults.intergreen)
                            .then_some(p.intergreen),
                    })
                    .collect(),
                turns: ic
                    .turn_probabilities
                    .iter()
                    .map(|tp| TurnRow {
                        entry: road_name(tp.entry),
                        exit: road_name(tp.exit),
                        p: tp.p,
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn from_file(f: ScenarioFile) -> Result<Scenario, ExperimentError> {
    if f.version != FORMAT_VERSION {
        return Err(ExperimentError::Schema(format!(
            "unsupported scenario file version {}; this build reads version {FORMAT_VERSION}",
            f.version
        )));
    }
    f.defaults.check()?;
    if f.demand_levels.is_empty() {
        return Err(ExperimentError::Schema("demand_levels must not be empty".into()));
    }

    let mut roads = Vec::new();
    let mut by_name = BTreeMap::new();
    for row in &f.roads {
        let name = row.name.clone().unwrap_or_else(|| format!("{}>{}", row.from, row.to));
        if by_name.insert(name.clone(), RoadId(roads.len() as u32)).is_some() {
            return Err(ExperimentError::Schema(format!("duplicate road name {name:?}")));
        }
        roads.push(Road {
            name,
            from: row.from.clone(),
            to: row.to.clone(),
            length: row.length,
            lanes: row.lanes,
        });
    }
    let road = |name: &str| {
        by_name
            .get(name)
            .copied()
            .ok_or_else(|| ExperimentError::Schema(format!("references unknown road {name:?}")))
    };

    let mut intersections = Vec::new();
    for row in &f.intersections {
        let mut phases = Vec::new();
        for p in &row.phases {
            let turns = p
                .turns
                .iter()
                .map(|(entry, exit)| {
                    Ok(TurnMovement { entry: road(entry)?, exit: road(exit)? })
                })
                .collect::<Result<_, ExperimentError>>()?;
            phases.push(Phase {
                turns,
                g_min: p.g_min.unwrap_or(f.defaults.g_min),
                g_max: p.g_max.unwrap_or(f.defaults.g_max),
                intergreen: p.intergreen.unwrap_or(f.defaults.intergreen),
            });
        }
        let turn_probabilities = row
            .turns
            .iter()
            .map(|t| {
                Ok(TurnProbability { entry: road(&t.entry)?, exit: road(&t.exit)?, p: t.p })
            })
            .collect::<Result<_, ExperimentError>>()?;
        intersections.push(IntersectionConfig {
            name: row.name.clone(),
            phase_model: PhaseModel::new(phases),
            turn_probabilities,
        });
    }

    let topology = NetworkTopology::new(roads, intersections);
    let violations = validate_network(&topology);
    if !violations.is_empty() {
        let mut msg =
            violations.iter().take(3).map(ToString::to_string).collect::<Vec<_>>().join("; ");
        if violations.len() > 3 {
            msg.push_str(&format!("; and {} more", violations.len() - 3));
        }
        return Err(ExperimentError::Schema(format!("network invalid: {msg}")));
    }

    let bands = f
        .demand
        .bands
        .iter()
        .map(|b| {
            Ok(ShareBand {
                from: b.from,
                shares: b
                    .shares
                    .iter()
                    .map(|s| Ok((road(&s.road)?, s.fraction)))
                    .collect::<Result<_, ExperimentError>>()?,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    Ok(Scenario {
        name: f.name,
        topology,
        demand: DemandProfile {
            vehicles_per_hour: f.demand.vehicles_per_hour,
            duration: f.demand.duration,
            bands,
        },
        demand_levels: f.demand_levels,
        defaults: f.defaults,
    })
}

pub fn scenario_to_toml(s: &Scenario) -> Result<String, ExperimentError> {
    Ok(toml::to_string(&to_file(s))?)
}

pub fn scenario_from_toml(text: &str) -> Result<Scenario, ExperimentError> {
    from_file(toml::from_str(text)?)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    Ok(fs::write(path, scenario_to_toml(s)?)?)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ExperimentError> {
    scenario_from_toml(&fs::read_to_string(path)?)
}
