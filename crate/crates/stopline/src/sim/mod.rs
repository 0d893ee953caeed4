//! Deterministic mesoscopic traffic simulation.
//!
//! Vehicles move at free-flow speed, stack into per-phase stop-line bays at
//! jam spacing, and discharge at the saturation headway after a startup
//! loss. Every intersection runs the scheduling controller once per second
//! on its own observations; vehicle turns are drawn from ground-truth
//! routes the controllers never see.
//!
//! One tick covers `[t, t + tick)`: signal transitions and decisions fire
//! at integer seconds first, then standing bays discharge, the moving
//! section advances (crossing or joining a bay at exact event times), and
//! finally new demand enters. Crossings that happen mid-tick re-enter the
//! downstream road with the remainder of the tick already travelled.

pub mod controller;
pub mod metrics;
pub mod road;
pub mod routegen;
pub mod signal;

pub use controller::{decide, Decision, DecisionInput, PlannerConfig, TrafficModel};
pub use metrics::{summarize, write_vehicle_csv, DelaySummary, FinishedVehicle};
pub use road::{MovingVehicle, QueuedVehicle, RoadState};
pub use routegen::{generate_traffic, DemandProfile, ShareBand, SpawnedVehicle};
pub use signal::{check_trace, SignalEvent, SignalEventKind, SignalState};

use crate::coordination::{CoordinationError, OutflowMessage};
use crate::model::{
    validate_network, DecisionAction, IntersectionId, ModelError, NetworkTopology, RoadId,
    SignalTimingPlan, VehicleId, Violation,
};
use crate::rng;
use crate::sampler::{DetectedVehicle, TurnTable};
use crate::scheduler::{SolveError, SolveStatus};
use std::collections::{BTreeMap, VecDeque};

/// Substream tag for per-decision turn sampling.
const TAG_CTRL: u64 = 0x6374_726c;

#[derive(thiserror::Error, Debug)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Coordination(#[from] CoordinationError),
    #[error("network failed validation: {0}")]
    InvalidNetwork(String),
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("{intersection} at t={t}: solver output rejected: {detail}")]
    InvalidSolution { intersection: IntersectionId, t: i64, detail: String },
    #[error("route from {entry} exceeded the leg limit")]
    RouteTooLong { entry: RoadId },
    #[error("simulation passed its time cap at t={t} with {vehicles_left} vehicles unfinished")]
    Stalled { t: f64, vehicles_left: usize },
}

/// Physical constants of the simulation.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SimConfig {
    /// Engine step, seconds. Must divide one second.
    pub tick: f64,
    /// Free-flow speed, m/s.
    pub speed: f64,
    /// Jam spacing per queued vehicle, meters.
    pub spacing: f64,
    /// Green time lost before a standing bay starts discharging, seconds.
    pub startup_lost: f64,
    /// Stop-line headway at saturation for a single lane, seconds.
    pub saturation_headway: f64,
    /// Hard cap on simulated time; exceeding it means gridlock.
    pub max_time: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tick: 0.5,
            speed: 10.0,
            spacing: 7.0,
            startup_lost: 3.5,
            saturation_headway: 2.5,
            max_time: 14_400.0,
        }
    }
}

/// Aggregate solver effort over an episode.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct DecisionTotals {
    pub decisions: u64,
    pub solver_nodes: u64,
    pub dispatches: u64,
    /// Solves that returned a feasible-but-unproven plan.
    pub budget_exhausted: u64,
    /// Solves seeded with a shifted previous plan.
    pub warm_accepted: u64,
}

/// Everything an episode produces.
#[derive(Clone, Debug)]
pub struct EpisodeResult {
    /// Every vehicle that completed its route, in id order.
    pub finished: Vec<FinishedVehicle>,
    pub generated: usize,
    pub trace: Vec<SignalEvent>,
    pub totals: DecisionTotals,
    pub end_time: f64,
}

struct LiveVehicle {
    route: Vec<RoadId>,
    /// Index into `route` of the road currently travelled.
    leg: usize,
    spawn: f64,
    /// Unimpeded travel time over every road of the route except the final
    /// sink, which the vehicle leaves the network entering.
    free_time: f64,
}

struct IntersectionRuntime {
    table: TurnTable,
    signal: SignalState,
    prev_plan: Option<SignalTimingPlan>,
    travel_in: BTreeMap<RoadId, f64>,
    travel_out: BTreeMap<RoadId, f64>,
    /// Engine-wide policy with the sampler headway rescaled to this
    /// intersection's approach width (slowest entry road governs).
    planner: PlannerConfig,
}

struct PendingInsert {
    dest: RoadId,
    /// Crossing instant; the vehicle's head start into the tick.
    at: f64,
    vehicle: MovingVehicle,
}

/// The simulation engine. Construct with prepared traffic (tests) or via
/// [`run_episode`] (generated demand), then call [`Engine::run`] or step
/// tick by tick.
pub struct Engine<'a> {
    topo: &'a NetworkTopology,
    cfg: SimConfig,
    planner: PlannerConfig,
    seed: u64,
    roads: Vec<RoadState>,
    nodes: Vec<IntersectionRuntime>,
    vehicles: Vec<LiveVehicle>,
    pending: VecDeque<SpawnedVehicle>,
    /// Spawned vehicles waiting for space on their full entry road.
    buffers: BTreeMap<RoadId, VecDeque<VehicleId>>,
    /// Messages published last round, keyed by link.
    mailbox: BTreeMap<RoadId, OutflowMessage>,
    next_mailbox: BTreeMap<RoadId, OutflowMessage>,
    inserts: Vec<PendingInsert>,
    finished: Vec<FinishedVehicle>,
    trace: Vec<SignalEvent>,
    totals: DecisionTotals,
    tick_index: u64,
    /// Inspection hook run on every decision before it is acted on.
    audit: Option<DecisionAudit<'a>>,
}

/// Observer over every decision an engine makes: the deciding intersection,
/// the decision instant, and the full decision including the scenarios it
/// was priced on.
pub type DecisionAudit<'a> = Box<dyn FnMut(IntersectionId, i64, &Decision) + 'a>;

impl<'a> Engine<'a> {
    pub fn new(
        topo: &'a NetworkTopology,
        cfg: SimConfig,
        planner: PlannerConfig,
        traffic: Vec<SpawnedVehicle>,
        seed: u64,
    ) -> Result<Self, SimError> {
        if let Some(v) = validate_network(topo).first() {
            return Err(SimError::InvalidNetwork(v.to_string()));
        }
        let tps = (1.0 / cfg.tick).round();
        if !(cfg.tick > 0.0) || (tps * cfg.tick - 1.0).abs() > 1e-9 {
            return Err(SimError::BadConfig(format!("tick {} must divide one second", cfg.tick)));
        }
        let roads = topo
            .road_ids()
            .map(|r| {
                let bays = topo.downstream(r).map_or(0, |x| topo.intersection(x).phase_model.len());
                RoadState::new(r, topo.road(r), bays, cfg.spacing)
            })
            .collect();
        let mut trace = Vec::new();
        let nodes = topo
            .intersection_ids()
            .map(|x| -> Result<IntersectionRuntime, SimError> {
                trace.push(SignalEvent {
                    t: 0,
                    intersection: x,
                    kind: SignalEventKind::GreenStart(0),
                });
                let mut travel_in = BTreeMap::new();
                for &r in topo.entry_roads(x) {
                    if topo.upstream(r).is_some() {
                        travel_in.insert(r, topo.road(r).length / cfg.speed);
                    }
                }
                let mut travel_out = BTreeMap::new();
                for &r in topo.exit_roads(x) {
                    if topo.downstream(r).is_some() {
                        travel_out.insert(r, topo.road(r).length / cfg.speed);
                    }
                }
                let lanes = topo
                    .entry_roads(x)
                    .iter()
                    .map(|&r| topo.road(r).lanes)
                    .min()
                    .unwrap_or(1)
                    .max(1);
                let mut node_planner = planner;
                node_planner.sampler.discharge_headway /= lanes as f64;
                Ok(IntersectionRuntime {
                    table: TurnTable::build(topo, x)?,
                    signal: SignalState::Green { phase: 0, since: 0 },
                    prev_plan: None,
                    travel_in,
                    travel_out,
                    planner: node_planner,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let vehicles = traffic
            .iter()
            .enumerate()
            .map(|(i, sv)| {
                debug_assert_eq!(sv.id, VehicleId(i as u64), "traffic ids must be dense");
                let on_route: f64 =
                    sv.route[..sv.route.len() - 1].iter().map(|&r| topo.road(r).length).sum();
                LiveVehicle {
                    route: sv.route.clone(),
                    leg: 0,
                    spawn: sv.spawn,
                    free_time: on_route / cfg.speed,
                }
            })
            .collect();
        let buffers = topo.source_roads().into_iter().map(|r| (r, VecDeque::new())).collect();
        Ok(Engine {
            topo,
            cfg,
            planner,
            seed,
            roads,
            nodes,
            vehicles,
            pending: traffic.into(),
            buffers,
            mailbox: BTreeMap::new(),
            next_mailbox: BTreeMap::new(),
            inserts: Vec::new(),
            finished: Vec::new(),
            trace,
            totals: DecisionTotals::default(),
            tick_index: 0,
            audit: None,
        })
    }

    /// Installs an observer that sees every decision as it is made.
    pub fn set_audit(&mut self, audit: DecisionAudit<'a>) {
        self.audit = Some(audit);
    }

    pub fn time(&self) -> f64 {
        self.tick_index as f64 * self.cfg.tick
    }

    pub fn road(&self, r: RoadId) -> &RoadState {
        &self.roads[r.0 as usize]
    }

    pub fn signal(&self, x: IntersectionId) -> SignalState {
        self.nodes[x.0 as usize].signal
    }

    fn all_clear(&self) -> bool {
        self.pending.is_empty()
            && self.buffers.values().all(VecDeque::is_empty)
            && self.roads.iter().all(RoadState::is_empty)
    }

    /// Advances one tick. Returns true once every vehicle has left, after
    /// which the engine does nothing further.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.all_clear() {
            return Ok(true);
        }
        let t = self.time();
        if t > self.cfg.max_time {
            return Err(SimError::Stalled {
                t,
                vehicles_left: self.vehicles.len() - self.finished.len(),
            });
        }
        let tps = (1.0 / self.cfg.tick).round() as u64;
        if self.tick_index % tps == 0 {
            self.decision_round(t.round() as i64)?;
        }
        let t_end = (self.tick_index + 1) as f64 * self.cfg.tick;
        self.discharge(t, t_end)?;
        self.motion(t, t_end)?;
        self.apply_inserts(t_end);
        self.spawn_step(t, t_end)?;
        self.tick_index += 1;
        Ok(false)
    }

    pub fn run(mut self) -> Result<EpisodeResult, SimError> {
        while !self.step()? {}
        let end_time = self.time();
        let mut finished = self.finished;
        finished.sort_by_key(|v| v.id);
        Ok(EpisodeResult {
            finished,
            generated: self.vehicles.len(),
            trace: self.trace,
            totals: self.totals,
            end_time,
        })
    }

    /// Vehicles on the entry roads of `x`, as the controller sees them: an
    /// id, an arrival estimate, and nothing about where they will turn.
    fn detect(&self, x: IntersectionId, now: i64) -> Vec<DetectedVehicle> {
        let mut out = Vec::new();
        for &r in self.topo.entry_roads(x) {
            let road = &self.roads[r.0 as usize];
            for mv in &road.moving {
                out.push(DetectedVehicle {
                    id: mv.id,
                    entry: r,
                    eta: now as f64 + (road.length - mv.pos) / self.cfg.speed,
                    weight: 1.0,
                });
            }
            for bay in &road.bays {
                for q in bay {
                    out.push(DetectedVehicle { id: q.id, entry: r, eta: now as f64, weight: 1.0 });
                }
            }
        }
        out
    }

    fn decision_round(&mut self, now: i64) -> Result<(), SimError> {
        // Scheduled green onsets fire before anyone observes or decides.
        for xi in 0..self.nodes.len() {
            if let SignalState::AllRed { next, green_start } = self.nodes[xi].signal {
                if green_start == now {
                    self.nodes[xi].signal = SignalState::Green { phase: next, since: now };
                    self.trace.push(SignalEvent {
                        t: now,
                        intersection: IntersectionId(xi as u32),
                        kind: SignalEventKind::GreenStart(next),
                    });
                }
            }
        }
        for xi in 0..self.nodes.len() {
            let x = IntersectionId(xi as u32);
            let local = self.detect(x, now);
            let incoming: Vec<OutflowMessage> = if self.planner.coordinated {
                self.topo
                    .entry_roads(x)
                    .iter()
                    .filter_map(|r| self.mailbox.get(r).cloned())
                    .collect()
            } else {
                Vec::new()
            };
            let pm = &self.topo.intersection(x).phase_model;
            let (current_phase, green_start) = self.nodes[xi].signal.planning_phase();
            let decision = {
                let node = &self.nodes[xi];
                let input = DecisionInput {
                    intersection: x,
                    phase_model: pm,
                    table: &node.table,
                    current_phase,
                    green_start,
                    now,
                    local: &local,
                    incoming: &incoming,
                    travel_in: &node.travel_in,
                    travel_out: &node.travel_out,
                    prev_plan: node.prev_plan.as_ref(),
                    seed: rng::mix(self.seed, &[TAG_CTRL, xi as u64, now as u64]),
                };
                decide(&node.planner, &input)?
            };
            if let Some(audit) = self.audit.as_mut() {
                audit(x, now, &decision);
            }
            self.totals.decisions += 1;
            self.totals.solver_nodes += decision.solution.stats.nodes;
            self.totals.dispatches += decision.solution.stats.dispatches;
            if decision.solution.status == SolveStatus::Feasible {
                self.totals.budget_exhausted += 1;
            }
            if decision.warm_used {
                self.totals.warm_accepted += 1;
            }
            for msg in decision.messages {
                self.next_mailbox.insert(msg.link, msg);
            }
            if let SignalState::Green { phase, .. } = self.nodes[xi].signal {
                if decision.action == DecisionAction::Terminate {
                    self.trace.push(SignalEvent {
                        t: now,
                        intersection: x,
                        kind: SignalEventKind::GreenEnd(phase),
                    });
                    let next = pm.next_phase(phase);
                    let y = pm.phase(phase).intergreen;
                    if y == 0 {
                        self.nodes[xi].signal = SignalState::Green { phase: next, since: now };
                        self.trace.push(SignalEvent {
                            t: now,
                            intersection: x,
                            kind: SignalEventKind::GreenStart(next),
                        });
                    } else {
                        self.nodes[xi].signal =
                            SignalState::AllRed { next, green_start: now + y };
                    }
                }
            }
            self.nodes[xi].prev_plan = Some(decision.solution.plan);
        }
        // This round's messages become visible next round, everywhere at
        // once; decision order inside a round cannot leak information.
        self.mailbox = std::mem::take(&mut self.next_mailbox);
        Ok(())
    }

    /// Moves one vehicle across its stop line at instant `c`: either it
    /// leaves the network (next leg is a sink) or it reserves space on and
    /// enters the next road.
    fn cross(&mut self, id: VehicleId, c: f64) -> Result<(), SimError> {
        let vi = id.0 as usize;
        self.vehicles[vi].leg += 1;
        let leg = self.vehicles[vi].leg;
        let dest = self.vehicles[vi].route[leg];
        if self.topo.is_sink(dest) {
            let v = &self.vehicles[vi];
            self.finished.push(FinishedVehicle {
                id,
                spawn: v.spawn,
                exit: c,
                delay: c - v.spawn - v.free_time,
            });
        } else {
            let exit = self.vehicles[vi].route[leg + 1];
            let x = self.topo.downstream(dest).expect("non-sink road feeds an intersection");
            let phase = self.topo.intersection(x).phase_model.phase_for_turn(dest, exit)?;
            self.roads[dest.0 as usize].occupancy += 1;
            self.inserts.push(PendingInsert {
                dest,
                at: c,
                vehicle: MovingVehicle { id, pos: 0.0, exit, phase },
            });
        }
        Ok(())
    }

    /// Releases standing bays through green stop lines for `[t, t_end)`.
    /// Crossings happen at exact instants chained by the saturation
    /// headway, no earlier than the startup loss after the green onset.
    fn discharge(&mut self, t: f64, t_end: f64) -> Result<(), SimError> {
        for xi in 0..self.nodes.len() {
            let Some((phase, since)) = self.nodes[xi].signal.green() else { continue };
            let floor = since as f64 + self.cfg.startup_lost;
            for &r in self.topo.entry_roads(IntersectionId(xi as u32)) {
                let ri = r.0 as usize;
                loop {
                    let Some(&head) = self.roads[ri].bays[phase].front() else { break };
                    let c = self.roads[ri].free_ready_at.max(floor).max(t);
                    if c >= t_end {
                        break;
                    }
                    if !self.roads[head.exit.0 as usize].has_space() {
                        break;
                    }
                    self.roads[ri].bays[phase].pop_front();
                    self.roads[ri].occupancy -= 1;
                    let h = self.roads[ri].discharge_headway(self.cfg.saturation_headway);
                    self.roads[ri].free_ready_at = c + h;
                    self.cross(head.id, c)?;
                }
            }
        }
        Ok(())
    }

    /// Advances the moving sections by one tick. A vehicle reaching its
    /// bay's stop position either joins the bay or, if the bay is empty and
    /// its phase is green, crosses on the fly at its exact arrival instant
    /// (no startup loss: it never stopped).
    fn motion(&mut self, t: f64, t_end: f64) -> Result<(), SimError> {
        let dt = t_end - t;
        let speed = self.cfg.speed;
        for ri in 0..self.roads.len() {
            let green = self
                .topo
                .downstream(RoadId(ri as u32))
                .and_then(|x| self.nodes[x.0 as usize].signal.green());
            let mut i = 0;
            while i < self.roads[ri].moving.len() {
                let mv = self.roads[ri].moving[i];
                let pos_new = mv.pos + dt * speed;
                if pos_new < self.roads[ri].stop_pos(mv.phase) {
                    self.roads[ri].moving[i].pos = pos_new;
                    i += 1;
                    continue;
                }
                let at_line = pos_new >= self.roads[ri].length
                    && self.roads[ri].bays[mv.phase].is_empty();
                let mut crossed = false;
                if at_line {
                    if let Some((phase, _)) = green {
                        if phase == mv.phase {
                            let c = (t + (self.roads[ri].length - mv.pos) / speed)
                                .max(self.roads[ri].free_ready_at);
                            if c < t_end && self.roads[mv.exit.0 as usize].has_space() {
                                self.roads[ri].moving.remove(i);
                                self.roads[ri].occupancy -= 1;
                                let h =
                                    self.roads[ri].discharge_headway(self.cfg.saturation_headway);
                                self.roads[ri].free_ready_at = c + h;
                                self.cross(mv.id, c)?;
                                crossed = true;
                            }
                        }
                    }
                }
                if !crossed {
                    self.roads[ri].moving.remove(i);
                    self.roads[ri].bays[mv.phase]
                        .push_back(QueuedVehicle { id: mv.id, exit: mv.exit });
                }
            }
        }
        Ok(())
    }

    /// Places mid-tick crossings onto their new roads, each advanced by the
    /// remainder of the tick. Applying these after all motion keeps the
    /// outcome independent of road processing order.
    fn apply_inserts(&mut self, t_end: f64) {
        self.inserts.sort_by(|a, b| a.dest.cmp(&b.dest).then(a.at.total_cmp(&b.at)));
        for ins in std::mem::take(&mut self.inserts) {
            let mut mv = ins.vehicle;
            mv.pos = (t_end - ins.at) * self.cfg.speed;
            self.roads[ins.dest.0 as usize].moving.push_back(mv);
        }
    }

    /// Admits waiting and newly spawned vehicles onto their entry roads.
    /// A full road holds arrivals in a boundary buffer; buffered vehicles
    /// keep their original spawn time, so entry queueing counts as delay.
    fn spawn_step(&mut self, t: f64, t_end: f64) -> Result<(), SimError> {
        let mut placed: Vec<(VehicleId, f64)> = Vec::new();
        for (&r, buf) in self.buffers.iter_mut() {
            while let Some(&id) = buf.front() {
                let road = &mut self.roads[r.0 as usize];
                if !road.has_space() {
                    break;
                }
                road.occupancy += 1;
                buf.pop_front();
                placed.push((id, t));
            }
        }
        while let Some(front) = self.pending.front() {
            if front.spawn >= t_end {
                break;
            }
            let sv = self.pending.pop_front().expect("checked front");
            let r = sv.route[0];
            let buf = self.buffers.get_mut(&r).expect("source road has a buffer");
            if buf.is_empty() && self.roads[r.0 as usize].has_space() {
                self.roads[r.0 as usize].occupancy += 1;
                placed.push((sv.id, sv.spawn.max(t)));
            } else {
                buf.push_back(sv.id);
            }
        }
        for (id, c) in placed {
            let mv = self.entry_mover(id)?;
            let r = self.vehicles[id.0 as usize].route[0];
            self.roads[r.0 as usize]
                .moving
                .push_back(MovingVehicle { pos: (t_end - c) * self.cfg.speed, ..mv });
        }
        Ok(())
    }

    fn entry_mover(&self, id: VehicleId) -> Result<MovingVehicle, SimError> {
        let v = &self.vehicles[id.0 as usize];
        let entry = v.route[0];
        let exit = v.route[1];
        let x = self.topo.downstream(entry).expect("source road feeds an intersection");
        let phase = self.topo.intersection(x).phase_model.phase_for_turn(entry, exit)?;
        Ok(MovingVehicle { id, pos: 0.0, exit, phase })
    }
}

/// Audits every intersection's recorded transitions.
pub fn check_all_traces(topo: &NetworkTopology, trace: &[SignalEvent]) -> Vec<Violation> {
    topo.intersection_ids()
        .flat_map(|x| check_trace(x, &topo.intersection(x).phase_model, trace))
        .collect()
}

/// Generates demand and runs one full episode to drain.
pub fn run_episode(
    topo: &NetworkTopology,
    planner: &PlannerConfig,
    demand: &DemandProfile,
    cfg: &SimConfig,
    seed: u64,
) -> Result<EpisodeResult, SimError> {
    let traffic = generate_traffic(topo, demand, seed)?;
    Engine::new(topo, *cfg, *planner, traffic, seed)?.run()
}
