//! The built-in benchmark networks: a single intersection, a five-node
//! arterial, and a 5x5 grid.
//!
//! Compass conventions used throughout: neighbor arrays run north, east,
//! south, west; a vehicle entering from the north exits south when going
//! straight, east when turning left, and west when turning right.

use super::ExperimentError;
use crate::model::{
    IntersectionConfig, NetworkTopology, Phase, PhaseModel, Road, RoadId, TurnMovement,
    TurnProbability,
};
use crate::sim::DemandProfile;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Names accepted by [`build_scenario`].
pub const SCENARIO_NAMES: [&str; 3] = ["isolated", "arterial_1x5", "grid_5x5"];

/// Entry generation window shared by all built-in scenarios, seconds. The
/// episode itself runs until the network drains.
const GENERATION_SECONDS: f64 = 900.0;

/// Timing and planning parameters shared by every intersection of a
/// scenario unless a scenario file overrides them.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct ScenarioDefaults {
    /// Shortest admissible green, seconds.
    pub g_min: i64,
    /// Longest admissible green, seconds.
    pub g_max: i64,
    /// All-red clearance between greens, seconds.
    pub intergreen: i64,
    /// Planning horizon, in full phase rotations.
    pub horizon_cycles: usize,
    /// How far beyond a neighbor's committed plan its outflow projection
    /// reaches, seconds.
    pub horizon_extension: f64,
    /// Cluster aggregation threshold for the inflow samplers, seconds.
    pub merge_threshold: f64,
}

impl Default for ScenarioDefaults {
    fn default() -> Self {
        ScenarioDefaults {
            g_min: 5,
            g_max: 55,
            intergreen: 5,
            horizon_cycles: 3,
            horizon_extension: 20.0,
            merge_threshold: 3.0,
        }
    }
}

impl ScenarioDefaults {
    /// All values must be positive for the planner and solver to accept
    /// them; the first offending field is reported.
    pub fn check(&self) -> Result<(), ExperimentError> {
        let positive: [(&str, f64); 6] = [
            ("g_min", self.g_min as f64),
            ("g_max", self.g_max as f64),
            ("intergreen", self.intergreen as f64),
            ("horizon_cycles", self.horizon_cycles as f64),
            ("horizon_extension", self.horizon_extension),
            ("merge_threshold", self.merge_threshold),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(ExperimentError::Schema(format!("{name} must be positive, got {value}")));
            }
        }
        if self.g_max < self.g_min {
            return Err(ExperimentError::Schema(format!(
                "g_max {} below g_min {}",
                self.g_max, self.g_min
            )));
        }
        Ok(())
    }
}

/// One ready-to-run benchmark: a network, a demand template, and the demand
/// levels it is meant to be exercised at.
#[derive(Clone, PartialEq, Debug)]
pub struct Scenario {
    pub name: String,
    pub topology: NetworkTopology,
    /// Demand template; its rate is a placeholder that [`Scenario::demand_at`]
    /// replaces with one of `demand_levels` (or any other rate).
    pub demand: DemandProfile,
    /// Network-total entry rates this scenario is benchmarked at, veh/h.
    pub demand_levels: Vec<f64>,
    pub defaults: ScenarioDefaults,
}

impl Scenario {
    /// The demand template rescaled to a total rate, keeping the generation
    /// window and any share schedule.
    pub fn demand_at(&self, vehicles_per_hour: f64) -> DemandProfile {
        DemandProfile { vehicles_per_hour, ..self.demand.clone() }
    }
}

/// Builds one of [`SCENARIO_NAMES`] with default timing parameters.
pub fn build_scenario(name: &str) -> Result<Scenario, ExperimentError> {
    let defaults = ScenarioDefaults::default();
    let (topology, demand_levels) = match name {
        "isolated" => (isolated(&defaults), vec![900.0, 1350.0, 1800.0]),
        "arterial_1x5" => (arterial(&defaults), vec![900.0, 1200.0, 1500.0]),
        "grid_5x5" => (grid(&defaults), vec![4000.0, 5000.0, 6000.0]),
        other => return Err(ExperimentError::UnknownScenario(other.to_string())),
    };
    Ok(Scenario {
        name: name.to_string(),
        demand: DemandProfile::uniform(demand_levels[0], GENERATION_SECONDS),
        topology,
        demand_levels,
        defaults: ScenarioDefaults::default(),
    })
}

/// Accumulates directed roads named `from>to` and resolves them by endpoint
/// pair when phases are wired up.
struct NetBuilder {
    roads: Vec<Road>,
    ids: BTreeMap<String, RoadId>,
    lanes: u32,
}

impl NetBuilder {
    fn new() -> Self {
        NetBuilder { roads: Vec::new(), ids: BTreeMap::new(), lanes: 1 }
    }

    fn one_way(&mut self, from: &str, to: &str, length: f64) {
        let name = format!("{from}>{to}");
        self.ids.insert(name.clone(), RoadId(self.roads.len() as u32));
        self.roads.push(Road {
            name,
            from: from.into(),
            to: to.into(),
            length,
            lanes: self.lanes,
        });
    }

    fn two_way(&mut self, a: &str, b: &str, length: f64) {
        self.one_way(a, b, length);
        self.one_way(b, a, length);
    }

    fn id(&self, from: &str, to: &str) -> RoadId {
        self.ids[&format!("{from}>{to}")]
    }

    fn turn(&self, node: &str, from: &str, to: &str) -> TurnMovement {
        TurnMovement { entry: self.id(from, node), exit: self.id(node, to) }
    }
}

fn phase(turns: Vec<TurnMovement>, d: &ScenarioDefaults) -> Phase {
    Phase { turns, g_min: d.g_min, g_max: d.g_max, intergreen: d.intergreen }
}

/// Protected-left phasing: opposing through-plus-right movements share a
/// phase and opposing lefts get their own, north-south before east-west.
/// A vehicle's phase therefore depends on the turn it will take, which is
/// exactly where turn uncertainty moves demand between competing phases.
/// `nbrs` in north, east, south, west order.
fn protected_left_node(
    b: &NetBuilder,
    node: &str,
    nbrs: [&str; 4],
    split: (f64, f64, f64),
    d: &ScenarioDefaults,
) -> IntersectionConfig {
    let (p_straight, p_left, p_right) = split;
    let straight = |i: usize| nbrs[(i + 2) % 4];
    let left = |i: usize| nbrs[(i + 1) % 4];
    let right = |i: usize| nbrs[(i + 3) % 4];
    // Approach pairs (north, south) then (east, west).
    let mut phases = Vec::new();
    for pair in [[0usize, 2], [1, 3]] {
        let thru_right = pair
            .iter()
            .flat_map(|&i| {
                [b.turn(node, nbrs[i], straight(i)), b.turn(node, nbrs[i], right(i))]
            })
            .collect();
        phases.push(phase(thru_right, d));
        let lefts = pair.iter().map(|&i| b.turn(node, nbrs[i], left(i))).collect();
        phases.push(phase(lefts, d));
    }
    let mut probs = Vec::new();
    for (i, from) in nbrs.iter().enumerate() {
        let exits =
            [(straight(i), p_straight), (left(i), p_left), (right(i), p_right)];
        probs.extend(exits.iter().map(|&(to, p)| TurnProbability {
            entry: b.id(from, node),
            exit: b.id(node, to),
            p,
        }));
    }
    IntersectionConfig {
        name: node.into(),
        phase_model: PhaseModel::new(phases),
        turn_probabilities: probs,
    }
}

/// Two phases, no turning: the east-west streams, then the north-south.
fn through_node(
    b: &NetBuilder,
    node: &str,
    nbrs: [&str; 4],
    d: &ScenarioDefaults,
) -> IntersectionConfig {
    let [n, e, s, w] = nbrs;
    let streams = [[(w, e), (e, w)], [(n, s), (s, n)]];
    let phases = streams
        .iter()
        .map(|pair| phase(pair.iter().map(|&(from, to)| b.turn(node, from, to)).collect(), d))
        .collect();
    let probs = streams
        .iter()
        .flatten()
        .map(|&(from, to)| TurnProbability { entry: b.id(from, node), exit: b.id(node, to), p: 1.0 })
        .collect();
    IntersectionConfig {
        name: node.into(),
        phase_model: PhaseModel::new(phases),
        turn_probabilities: probs,
    }
}

/// Three phases for the arterial's turning intersection: main street through
/// plus right, main street lefts, then the cross street through plus right.
/// Main approaches split 0.65/0.15/0.20, cross approaches 0.80/0.20.
fn bottleneck_node(
    b: &NetBuilder,
    node: &str,
    nbrs: [&str; 4],
    d: &ScenarioDefaults,
) -> IntersectionConfig {
    let [n, e, s, w] = nbrs;
    let phases = vec![
        phase(
            vec![b.turn(node, w, e), b.turn(node, w, s), b.turn(node, e, w), b.turn(node, e, n)],
            d,
        ),
        phase(vec![b.turn(node, w, n), b.turn(node, e, s)], d),
        phase(
            vec![b.turn(node, s, n), b.turn(node, s, e), b.turn(node, n, s), b.turn(node, n, w)],
            d,
        ),
    ];
    let row = |from: &str, to: &str, p: f64| TurnProbability {
        entry: b.id(from, node),
        exit: b.id(node, to),
        p,
    };
    let probs = vec![
        row(w, e, 0.65),
        row(w, n, 0.15),
        row(w, s, 0.20),
        row(e, w, 0.65),
        row(e, s, 0.15),
        row(e, n, 0.20),
        row(s, n, 0.80),
        row(s, e, 0.20),
        row(n, s, 0.80),
        row(n, w, 0.20),
    ];
    IntersectionConfig {
        name: node.into(),
        phase_model: PhaseModel::new(phases),
        turn_probabilities: probs,
    }
}

/// One four-approach intersection, 300 m two-lane two-way roads,
/// protected-left phasing, and a 0.6/0.2/0.2 straight/left/right split on
/// every approach.
fn isolated(d: &ScenarioDefaults) -> NetworkTopology {
    let mut b = NetBuilder::new();
    b.lanes = 2;
    for nbr in ["n", "e", "s", "w"] {
        b.two_way(nbr, "x", 300.0);
    }
    let node = protected_left_node(&b, "x", ["n", "e", "s", "w"], (0.6, 0.2, 0.2), d);
    NetworkTopology::new(b.roads, vec![node])
}

/// Five intersections x0..x4 along an east-west main street with a crossing
/// street at each; 250 m two-way roads everywhere. Only the middle node
/// allows turns; every other node runs two through-only phases.
fn arterial(d: &ScenarioDefaults) -> NetworkTopology {
    let mut b = NetBuilder::new();
    let node = |i: usize| format!("x{i}");
    let mut spine = vec!["w".to_string()];
    spine.extend((0..5).map(node));
    spine.push("e".to_string());
    for pair in spine.windows(2) {
        b.two_way(&pair[0], &pair[1], 250.0);
    }
    for i in 0..5 {
        b.two_way(&format!("n{i}"), &node(i), 250.0);
        b.two_way(&node(i), &format!("s{i}"), 250.0);
    }
    let mut nodes = Vec::new();
    for i in 0..5 {
        let x = node(i);
        let nb = [format!("n{i}"), spine[i + 2].clone(), format!("s{i}"), spine[i].clone()];
        let nbrs = [nb[0].as_str(), nb[1].as_str(), nb[2].as_str(), nb[3].as_str()];
        nodes.push(if i == 2 {
            bottleneck_node(&b, &x, nbrs, d)
        } else {
            through_node(&b, &x, nbrs, d)
        });
    }
    NetworkTopology::new(b.roads, nodes)
}

/// Grid nodes that allow turning (protected lefts, 0.65/0.15/0.20); the
/// rest run two through-only phases.
const GRID_TURNING: [(usize, usize); 5] = [(1, 1), (1, 3), (3, 1), (3, 3), (2, 2)];

/// 25 intersections g00..g44 (row then column, row 0 north) on 75 m two-way
/// roads, except the column 2-3 links (25 m) and the north boundary stubs
/// (150 m). Twenty boundary stubs feed and drain the grid.
fn grid(d: &ScenarioDefaults) -> NetworkTopology {
    let mut b = NetBuilder::new();
    let g = |r: usize, c: usize| format!("g{r}{c}");
    for c in 0..5 {
        b.two_way(&format!("n{c}"), &g(0, c), 150.0);
        b.two_way(&g(4, c), &format!("s{c}"), 75.0);
    }
    for r in 0..5 {
        b.two_way(&format!("w{r}"), &g(r, 0), 75.0);
        b.two_way(&g(r, 4), &format!("e{r}"), 75.0);
    }
    for r in 0..5 {
        for c in 0..4 {
            let length = if c == 2 { 25.0 } else { 75.0 };
            b.two_way(&g(r, c), &g(r, c + 1), length);
        }
    }
    for r in 0..4 {
        for c in 0..5 {
            b.two_way(&g(r, c), &g(r + 1, c), 75.0);
        }
    }
    let mut nodes = Vec::new();
    for r in 0..5 {
        for c in 0..5 {
            let x = g(r, c);
            let nb = [
                if r == 0 { format!("n{c}") } else { g(r - 1, c) },
                if c == 4 { format!("e{r}") } else { g(r, c + 1) },
                if r == 4 { format!("s{c}") } else { g(r + 1, c) },
                if c == 0 { format!("w{r}") } else { g(r, c - 1) },
            ];
            let nbrs = [nb[0].as_str(), nb[1].as_str(), nb[2].as_str(), nb[3].as_str()];
            nodes.push(if GRID_TURNING.contains(&(r, c)) {
                protected_left_node(&b, &x, nbrs, (0.65, 0.15, 0.20), d)
            } else {
                through_node(&b, &x, nbrs, d)
            });
        }
    }
    NetworkTopology::new(b.roads, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_network;

    #[test]
    fn every_built_in_network_validates_cleanly() {
        for name in SCENARIO_NAMES {
            let s = build_scenario(name).unwrap();
            let v = validate_network(&s.topology);
            assert!(v.is_empty(), "{name}: {v:?}");
            assert!(!s.demand_levels.is_empty());
            s.defaults.check().unwrap();
            assert_eq!(s.demand.duration, 900.0);
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(build_scenario("bogus"), Err(ExperimentError::UnknownScenario(_))));
    }

    #[test]
    fn isolated_is_one_four_phase_intersection() {
        let s = build_scenario("isolated").unwrap();
        let t = &s.topology;
        assert_eq!(t.intersections.len(), 1);
        assert_eq!(t.intersection(crate::model::IntersectionId(0)).phase_model.len(), 4);
        assert_eq!(t.roads.len(), 8);
        assert_eq!(t.source_roads().len(), 4);
        assert!(t.roads.iter().all(|r| r.length == 300.0));
        assert_eq!(s.demand_levels, vec![900.0, 1350.0, 1800.0]);
    }

    #[test]
    fn isolated_turns_follow_the_compass() {
        let s = build_scenario("isolated").unwrap();
        let t = &s.topology;
        let id = |name: &str| t.road_by_name(name).unwrap();
        let x = &t.intersections[0];
        // Entering from the north: straight south, left east, right west.
        for (exit, p) in [("x>s", 0.6), ("x>e", 0.2), ("x>w", 0.2)] {
            assert!(x
                .turn_probabilities
                .iter()
                .any(|tp| tp.entry == id("n>x") && tp.exit == id(exit) && tp.p == p));
        }
        // Phase 0: north-south through and right; phase 1: their lefts.
        let pairs = |k: usize| {
            let mut v: Vec<(RoadId, RoadId)> =
                x.phase_model.phase(k).turns.iter().map(|t| (t.entry, t.exit)).collect();
            v.sort();
            v
        };
        let want = |rows: &[(&str, &str)]| {
            let mut v: Vec<(RoadId, RoadId)> =
                rows.iter().map(|&(a, b)| (id(a), id(b))).collect();
            v.sort();
            v
        };
        assert_eq!(
            pairs(0),
            want(&[("n>x", "x>s"), ("n>x", "x>w"), ("s>x", "x>n"), ("s>x", "x>e")])
        );
        assert_eq!(pairs(1), want(&[("n>x", "x>e"), ("s>x", "x>w")]));
        assert_eq!(
            pairs(2),
            want(&[("e>x", "x>w"), ("e>x", "x>n"), ("w>x", "x>e"), ("w>x", "x>s")])
        );
        assert_eq!(pairs(3), want(&[("e>x", "x>s"), ("w>x", "x>n")]));
    }

    #[test]
    fn arterial_turns_only_at_the_middle_intersection() {
        let s = build_scenario("arterial_1x5").unwrap();
        let t = &s.topology;
        assert_eq!(t.intersections.len(), 5);
        assert_eq!(t.roads.len(), 32);
        assert_eq!(t.source_roads().len(), 12);
        assert!(t.roads.iter().all(|r| r.length == 250.0));
        for ic in &t.intersections {
            if ic.name == "x2" {
                assert_eq!(ic.phase_model.len(), 3);
            } else {
                assert_eq!(ic.phase_model.len(), 2);
                assert!(ic.turn_probabilities.iter().all(|tp| tp.p == 1.0));
            }
        }
        let id = |name: &str| t.road_by_name(name).unwrap();
        let x2 = t.intersections.iter().find(|ic| ic.name == "x2").unwrap();
        // Eastbound main approach: straight on, left to the north stub,
        // right to the south stub.
        for (exit, p) in [("x2>x3", 0.65), ("x2>n2", 0.15), ("x2>s2", 0.20)] {
            assert!(x2
                .turn_probabilities
                .iter()
                .any(|tp| tp.entry == id("x1>x2") && tp.exit == id(exit) && tp.p == p));
        }
        // Northbound cross approach: no left onto the main street.
        let from_south: Vec<_> =
            x2.turn_probabilities.iter().filter(|tp| tp.entry == id("s2>x2")).collect();
        assert_eq!(from_south.len(), 2);
        assert!(from_south.iter().any(|tp| tp.exit == id("x2>n2") && tp.p == 0.80));
        assert!(from_south.iter().any(|tp| tp.exit == id("x2>x3") && tp.p == 0.20));
    }

    #[test]
    fn grid_mixes_road_lengths_and_phasings() {
        let s = build_scenario("grid_5x5").unwrap();
        let t = &s.topology;
        assert_eq!(t.intersections.len(), 25);
        assert_eq!(t.roads.len(), 120);
        assert_eq!(t.source_roads().len(), 20);
        let count = |len: f64| t.roads.iter().filter(|r| r.length == len).count();
        assert_eq!(count(25.0), 10, "column 2-3 links in both directions");
        assert_eq!(count(150.0), 10, "north boundary stubs in both directions");
        assert_eq!(count(75.0), 100);
        let four_phase: Vec<_> = t
            .intersections
            .iter()
            .filter(|ic| ic.phase_model.len() == 4)
            .map(|ic| ic.name.clone())
            .collect();
        assert_eq!(four_phase, ["g11", "g13", "g22", "g31", "g33"]);
        assert!(t.intersections.iter().all(|ic| matches!(ic.phase_model.len(), 2 | 4)));
    }
}
