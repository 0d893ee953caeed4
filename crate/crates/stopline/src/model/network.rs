use super::ids::{IntersectionId, RoadId};
use super::phase::PhaseModel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A directed road segment between two named nodes. A node is either an
/// intersection (its name appears in `NetworkTopology::intersections`) or a
/// boundary point where vehicles enter or leave the network.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Road {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Meters, strictly positive.
    pub length: f64,
    /// Lane count, at least 1.
    pub lanes: u32,
}

/// Static turning proportion for one movement at one intersection. The
/// proportions for a given entry road sum to one.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct TurnProbability {
    pub entry: RoadId,
    pub exit: RoadId,
    pub p: f64,
}

/// One intersection: its phase plan plus the turning proportions that govern
/// (and bound the controller's knowledge of) where entering vehicles go.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct IntersectionConfig {
    /// Also the node name the intersection occupies.
    pub name: String,
    pub phase_model: PhaseModel,
    pub turn_probabilities: Vec<TurnProbability>,
}

/// The road network. Construction derives the entry/exit road lists of each
/// intersection and the node index used to resolve neighbors.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub roads: Vec<Road>,
    pub intersections: Vec<IntersectionConfig>,
    #[serde(skip)]
    entries: Vec<Vec<RoadId>>,
    #[serde(skip)]
    exits: Vec<Vec<RoadId>>,
    #[serde(skip)]
    node_index: BTreeMap<String, IntersectionId>,
}

impl NetworkTopology {
    pub fn new(roads: Vec<Road>, intersections: Vec<IntersectionConfig>) -> Self {
        let mut t = Self {
            roads,
            intersections,
            entries: Vec::new(),
            exits: Vec::new(),
            node_index: BTreeMap::new(),
        };
        t.rebuild_index();
        t
    }

    /// Recomputes the derived lookup tables; needed after deserialization.
    pub fn rebuild_index(&mut self) {
        self.node_index = self
            .intersections
            .iter()
            .enumerate()
            .map(|(i, ic)| (ic.name.clone(), IntersectionId(i as u32)))
            .collect();
        self.entries = vec![Vec::new(); self.intersections.len()];
        self.exits = vec![Vec::new(); self.intersections.len()];
        for (r, road) in self.roads.iter().enumerate() {
            if let Some(&i) = self.node_index.get(&road.to) {
                self.entries[i.0 as usize].push(RoadId(r as u32));
            }
            if let Some(&i) = self.node_index.get(&road.from) {
                self.exits[i.0 as usize].push(RoadId(r as u32));
            }
        }
    }

    pub fn road(&self, id: RoadId) -> &Road {
        &self.roads[id.0 as usize]
    }

    pub fn intersection(&self, id: IntersectionId) -> &IntersectionConfig {
        &self.intersections[id.0 as usize]
    }

    pub fn intersection_ids(&self) -> impl Iterator<Item = IntersectionId> {
        (0..self.intersections.len() as u32).map(IntersectionId)
    }

    pub fn road_ids(&self) -> impl Iterator<Item = RoadId> {
        (0..self.roads.len() as u32).map(RoadId)
    }

    /// Roads whose head is this intersection, in id order.
    pub fn entry_roads(&self, i: IntersectionId) -> &[RoadId] {
        &self.entries[i.0 as usize]
    }

    /// Roads whose tail is this intersection, in id order.
    pub fn exit_roads(&self, i: IntersectionId) -> &[RoadId] {
        &self.exits[i.0 as usize]
    }

    pub fn road_by_name(&self, name: &str) -> Option<RoadId> {
        self.roads
            .iter()
            .position(|r| r.name == name)
            .map(|i| RoadId(i as u32))
    }

    pub fn intersection_by_name(&self, name: &str) -> Option<IntersectionId> {
        self.node_index.get(name).copied()
    }

    /// The intersection a road feeds into, unless the road leaves the network.
    pub fn downstream(&self, r: RoadId) -> Option<IntersectionId> {
        self.node_index.get(&self.road(r).to).copied()
    }

    /// The intersection a road comes from, unless it enters from the boundary.
    pub fn upstream(&self, r: RoadId) -> Option<IntersectionId> {
        self.node_index.get(&self.road(r).from).copied()
    }

    /// A road is a sink when it leaves the network at its head.
    pub fn is_sink(&self, r: RoadId) -> bool {
        self.downstream(r).is_none()
    }

    /// A road is a source when vehicles can only appear on it from outside.
    pub fn is_source(&self, r: RoadId) -> bool {
        self.upstream(r).is_none()
    }

    /// Boundary roads on which demand enters, in id order.
    pub fn source_roads(&self) -> Vec<RoadId> {
        self.road_ids()
            .filter(|&r| self.is_source(r) && !self.is_sink(r))
            .collect()
    }
}
