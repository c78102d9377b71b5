//! The synchronized step engine.
//!
//! One call to [`step`] runs these phases in order:
//!
//! 1. submitted actions are validated and stored as pending orders;
//! 2. airplanes whose flight leg has completed land and start waiting;
//! 3. waiting airplanes holding an order are admitted to processing in
//!    queue order while the airport has free working capacity;
//! 4. processing counts down; on completion unloads run, then loads, and
//!    the airplane becomes ready for takeoff;
//! 5. ready airplanes with a valid destination take off;
//! 6. every flight leg advances by one step;
//! 7. undelivered cargo past its hard deadline is marked missed;
//! 8. time advances, termination is evaluated, and the scheduled events of
//!    the new time (malfunctions, repairs, cargo spawns) are applied.
//!
//! Events for time `t` are therefore visible in the observation handed to
//! the policy before the step at `t` runs.

mod episode;
mod queue;
mod reward;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use episode::{run_episode, EpisodeConfig};
pub use queue::{enqueue_priority, ProcessingQueue};
pub use reward::{reward, RewardWeights};
pub use validate::{validate_action, CommandVerdict, RejectReason};

use crate::error::ScenarioError;
use crate::events::{apply_events, CargoSpawnEvent, MalfunctionEvent};
use crate::log::{Command, EventLog, Ledger, LedgerEntry, LogEvent, MissReason};
use crate::model::{
    cargo_status_at, Action, AirNetwork, Airplane, AirplaneType, AirportId, Cargo, CargoId, CargoLocation, CargoStatus,
    FlightLeg, PlaneId, PlaneLocation, PlaneState, PlaneTypeId, RouteKey, Time,
};
use crate::scenario::ScenarioSpec;

pub const DEFAULT_MAX_STEPS: Time = 5000;

/// Complete world state at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub time: Time,
    pub max_steps: Time,
    pub network: AirNetwork,
    pub plane_types: BTreeMap<PlaneTypeId, AirplaneType>,
    pub airplanes: BTreeMap<PlaneId, Airplane>,
    /// Every cargo that has spawned so far, resolved or not.
    pub cargo: BTreeMap<CargoId, Cargo>,
    /// Cargo lying on the ground, per airport.
    pub ground: BTreeMap<AirportId, BTreeSet<CargoId>>,
    pub ledger: Ledger,
    pub malfunctions: BTreeMap<RouteKey, Vec<MalfunctionEvent>>,
    pub spawns: Vec<CargoSpawnEvent>,
    pub next_spawn: usize,
    pub total_flight_cost: f64,
    pub last_verdicts: BTreeMap<PlaneId, Vec<CommandVerdict>>,
    pub rewards: RewardWeights,
    pub done: bool,
    pub aborted: Option<String>,
    pub log: EventLog,
}

/// Full-observability snapshot handed to policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: Time,
    pub max_steps: Time,
    pub network: AirNetwork,
    pub plane_types: Vec<AirplaneType>,
    pub airplanes: BTreeMap<PlaneId, Airplane>,
    /// Spawned, unresolved cargo.
    pub cargo: BTreeMap<CargoId, Cargo>,
    /// Verdicts on each agent's most recent action.
    pub last_verdicts: BTreeMap<PlaneId, Vec<CommandVerdict>>,
}

impl Observation {
    pub fn plane_type(&self, id: PlaneTypeId) -> Option<&AirplaneType> {
        self.plane_types.iter().find(|t| t.id == id)
    }

    /// Cargo on the ground at `airport`.
    pub fn cargo_at(&self, airport: AirportId) -> impl Iterator<Item = &Cargo> + '_ {
        self.cargo.values().filter(move |c| c.location == CargoLocation::Airport(airport))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub rewards: BTreeMap<PlaneId, f64>,
    pub done: bool,
    /// Per-agent diagnostics: rejected or blocked commands, unknown ids.
    pub info: BTreeMap<PlaneId, Vec<String>>,
}

impl EpisodeState {
    /// Builds the initial state and applies the events scheduled at time 0.
    pub fn new(scenario: &ScenarioSpec, max_steps: Time) -> Result<Self, ScenarioError> {
        let problems = scenario.check();
        if !problems.is_empty() {
            return Err(ScenarioError::Invalid(problems.join("; ")));
        }
        let plane_types = scenario.plane_types.iter().map(|t| (t.id, t.clone())).collect();
        let airplanes =
            scenario.roster.iter().map(|p| (p.id, Airplane::landed(p.id, p.plane_type, p.start, p.priority))).collect();
        let mut cargo = BTreeMap::new();
        let mut ground: BTreeMap<AirportId, BTreeSet<CargoId>> = BTreeMap::new();
        for c in &scenario.initial_cargo {
            let mut c = c.clone();
            c.status = CargoStatus::Waiting;
            c.location = CargoLocation::Airport(c.source);
            ground.entry(c.source).or_default().insert(c.id);
            cargo.insert(c.id, c);
        }
        let mut network = scenario.network.clone();
        for route in network.routes.values_mut() {
            route.available = true;
        }
        let mut spawns = scenario.events.spawns.clone();
        spawns.sort_by_key(|s| (s.time, s.cargo.id));
        let mut state = EpisodeState {
            time: 0,
            max_steps,
            network,
            plane_types,
            airplanes,
            cargo,
            ground,
            ledger: Ledger::new(),
            malfunctions: scenario.events.by_route(),
            spawns,
            next_spawn: 0,
            total_flight_cost: 0.0,
            last_verdicts: BTreeMap::new(),
            rewards: RewardWeights::default(),
            done: false,
            aborted: None,
            log: EventLog::new(true),
        };
        if max_steps == 0 {
            state.finish_truncated();
        } else {
            apply_events(&mut state, 0);
            state.done = state.all_resolved();
        }
        Ok(state)
    }

    pub fn without_log(mut self) -> Self {
        self.log = EventLog::new(false);
        self
    }

    pub fn plane_type_of(&self, plane: &Airplane) -> &AirplaneType {
        &self.plane_types[&plane.plane_type]
    }

    pub fn manifest_weight(&self, plane: &Airplane) -> f64 {
        plane.manifest.iter().map(|c| self.cargo[c].weight).sum()
    }

    /// No spawns pending and every spawned cargo resolved.
    pub fn all_resolved(&self) -> bool {
        self.next_spawn >= self.spawns.len() && self.cargo.values().all(|c| c.status.is_resolved())
    }

    pub fn observe(&self) -> Observation {
        Observation {
            time: self.time,
            max_steps: self.max_steps,
            network: self.network.clone(),
            plane_types: self.plane_types.values().cloned().collect(),
            airplanes: self.airplanes.clone(),
            cargo: self.cargo.iter().filter(|(_, c)| !c.status.is_resolved()).map(|(id, c)| (*id, c.clone())).collect(),
            last_verdicts: self.last_verdicts.clone(),
        }
    }

    fn set_state(&mut self, plane: PlaneId, to: PlaneState) {
        let p = self.airplanes.get_mut(&plane).expect("plane exists");
        let from = p.state;
        debug_assert!(from.can_transition_to(to), "{from:?} -> {to:?}");
        p.state = to;
        self.log.push(self.time, LogEvent::Transition { plane, from, to });
    }

    fn resolve_missed(&mut self, id: CargoId, reason: MissReason) {
        let time = self.time;
        let c = self.cargo.get_mut(&id).expect("cargo exists");
        let mut holder = None;
        match c.location {
            CargoLocation::Airport(a) => {
                if let Some(set) = self.ground.get_mut(&a) {
                    set.remove(&id);
                }
            }
            CargoLocation::Airplane(p) => {
                holder = Some(p);
                if let Some(plane) = self.airplanes.get_mut(&p) {
                    plane.manifest.remove(&id);
                }
            }
            CargoLocation::Ledger => return,
        }
        c.status = CargoStatus::Missed;
        c.location = CargoLocation::Ledger;
        if holder.is_none() {
            holder = self.airplanes.values().find(|p| p.pending_load.contains(&id)).map(|p| p.id);
        }
        self.ledger.insert(id, LedgerEntry { status: CargoStatus::Missed, time, plane: holder });
        self.log.push(time, LogEvent::Missed { cargo: id, reason });
    }

    /// Marks every unresolved spawned cargo missed and ends the episode.
    fn finish_truncated(&mut self) {
        let open: Vec<CargoId> = self.cargo.values().filter(|c| !c.status.is_resolved()).map(|c| c.id).collect();
        for id in open {
            self.resolve_missed(id, MissReason::EpisodeEnd);
        }
        self.done = true;
    }

    /// Ends the episode after a policy failure; unresolved cargo is missed.
    pub fn abort(&mut self, reason: impl Into<String>) {
        let reason = reason.into();
        self.log.push(self.time, LogEvent::Aborted { reason: reason.clone() });
        let open: Vec<CargoId> = self.cargo.values().filter(|c| !c.status.is_resolved()).map(|c| c.id).collect();
        for id in open {
            self.resolve_missed(id, MissReason::Aborted);
        }
        self.aborted = Some(reason);
        self.done = true;
    }

    fn apply_actions(&mut self, actions: &BTreeMap<PlaneId, Action>, info: &mut BTreeMap<PlaneId, Vec<String>>) {
        self.last_verdicts.clear();
        for (&plane_id, action) in actions {
            if !self.airplanes.contains_key(&plane_id) {
                self.log.push(self.time, LogEvent::UnknownPlane { plane: plane_id });
                info.entry(plane_id).or_default().push(format!("unknown airplane {plane_id}"));
                continue;
            }
            self.log.push(self.time, LogEvent::Action { plane: plane_id, action: action.clone() });
            let verdicts = validate_action(self, plane_id, action);
            let plane = self.airplanes.get_mut(&plane_id).expect("checked above");
            if let Some(p) = action.priority {
                plane.priority = p;
            }
            plane.pending_load.clear();
            plane.pending_unload.clear();
            plane.destination = None;
            for v in &verdicts {
                match (v.command, &v.rejected) {
                    (Command::Load(c), None) => {
                        plane.pending_load.insert(c);
                    }
                    (Command::Unload(c), None) => {
                        plane.pending_unload.insert(c);
                    }
                    (Command::Destination(d), None) => plane.destination = Some(d),
                    (command, Some(reason)) => {
                        info.entry(plane_id).or_default().push(format!("rejected {command:?}: {reason}"));
                        self.log.push(
                            self.time,
                            LogEvent::Rejected { plane: plane_id, command, reason: reason.to_string() },
                        );
                    }
                }
            }
            if plane.state != PlaneState::ReadyForTakeoff {
                plane.process_requested = true;
            }
            self.last_verdicts.insert(plane_id, verdicts);
        }
    }

    fn land_arrivals(&mut self) {
        let arriving: Vec<(PlaneId, AirportId)> = self
            .airplanes
            .values()
            .filter_map(|p| p.leg().filter(|l| l.arrived()).map(|l| (p.id, l.route.to)))
            .collect();
        for (id, airport) in arriving {
            let time = self.time;
            let p = self.airplanes.get_mut(&id).expect("plane exists");
            p.location = PlaneLocation::Landed(airport);
            p.arrival_time = time;
            self.set_state(id, PlaneState::Waiting);
            self.log.push(time, LogEvent::Landed { plane: id, airport });
        }
    }

    /// Processing queue of `airport`: waiting airplanes that hold an order.
    pub fn queue_at(&self, airport: AirportId) -> ProcessingQueue {
        let mut queue = ProcessingQueue::new();
        for p in self.airplanes.values() {
            if p.state == PlaneState::Waiting && p.process_requested && p.airport() == Some(airport) {
                queue.enqueue(p.id, p.priority, p.arrival_time);
            }
        }
        queue
    }

    pub fn processing_count(&self, airport: AirportId) -> u32 {
        self.airplanes.values().filter(|p| p.state == PlaneState::Processing && p.airport() == Some(airport)).count()
            as u32
    }

    fn admit(&mut self) {
        let airports: BTreeSet<AirportId> =
            self.airplanes.values().filter(|p| p.state == PlaneState::Waiting).filter_map(|p| p.airport()).collect();
        for airport in airports {
            let capacity = self.network.airports[&airport].working_capacity;
            let free = capacity.saturating_sub(self.processing_count(airport)) as usize;
            let queue = self.queue_at(airport);
            for id in queue.order().take(free) {
                let processing_time = {
                    let p = &self.airplanes[&id];
                    self.plane_type_of(p).processing_time
                };
                self.airplanes.get_mut(&id).expect("queued").processing_remaining = processing_time;
                self.set_state(id, PlaneState::Processing);
            }
        }
    }

    fn block(&mut self, plane: PlaneId, command: Command, reason: &str, info: &mut BTreeMap<PlaneId, Vec<String>>) {
        info.entry(plane).or_default().push(format!("blocked {command:?}: {reason}"));
        self.log.push(self.time, LogEvent::Blocked { plane, command, reason: reason.to_string() });
    }

    fn process(&mut self, info: &mut BTreeMap<PlaneId, Vec<String>>) {
        let processing: Vec<PlaneId> =
            self.airplanes.values().filter(|p| p.state == PlaneState::Processing).map(|p| p.id).collect();
        for id in processing {
            let p = self.airplanes.get_mut(&id).expect("plane exists");
            p.processing_remaining = p.processing_remaining.saturating_sub(1);
            if p.processing_remaining > 0 {
                continue;
            }
            let airport = p.airport().expect("processing planes are landed");
            let unloads = std::mem::take(&mut p.pending_unload);
            let loads = std::mem::take(&mut p.pending_load);
            for c in unloads {
                self.unload(id, c, airport, info);
            }
            for c in loads {
                self.load(id, c, airport, info);
            }
            self.set_state(id, PlaneState::ReadyForTakeoff);
        }
    }

    fn unload(&mut self, plane: PlaneId, c: CargoId, airport: AirportId, info: &mut BTreeMap<PlaneId, Vec<String>>) {
        let time = self.time;
        if !self.airplanes[&plane].manifest.contains(&c) {
            self.block(plane, Command::Unload(c), "cargo not on board", info);
            return;
        }
        self.airplanes.get_mut(&plane).expect("plane exists").manifest.remove(&c);
        self.log.push(time, LogEvent::Unloaded { plane, cargo: c, airport });
        let cargo = self.cargo.get_mut(&c).expect("manifest cargo exists");
        if cargo.destination == airport {
            let status = cargo_status_at(cargo, Some(time), time);
            cargo.status = status;
            cargo.location = CargoLocation::Ledger;
            self.ledger.insert(c, LedgerEntry { status, time, plane: Some(plane) });
            self.log.push(time, LogEvent::Delivered { cargo: c, plane, airport, status });
        } else {
            cargo.status = CargoStatus::Waiting;
            cargo.location = CargoLocation::Airport(airport);
            self.ground.entry(airport).or_default().insert(c);
        }
    }

    fn load(&mut self, plane: PlaneId, c: CargoId, airport: AirportId, info: &mut BTreeMap<PlaneId, Vec<String>>) {
        let on_ground = self.ground.get(&airport).is_some_and(|g| g.contains(&c));
        if !on_ground {
            self.block(plane, Command::Load(c), "cargo not at airport", info);
            return;
        }
        let p = &self.airplanes[&plane];
        let capacity = self.plane_type_of(p).max_capacity;
        let weight = self.cargo[&c].weight;
        if self.manifest_weight(p) + weight > capacity {
            self.block(plane, Command::Load(c), "capacity exceeded", info);
            return;
        }
        self.ground.get_mut(&airport).expect("checked").remove(&c);
        self.airplanes.get_mut(&plane).expect("plane exists").manifest.insert(c);
        let cargo = self.cargo.get_mut(&c).expect("ground cargo exists");
        cargo.status = CargoStatus::Onboard;
        cargo.location = CargoLocation::Airplane(plane);
        self.log.push(self.time, LogEvent::Loaded { plane, cargo: c, airport });
    }

    fn takeoffs(&mut self, info: &mut BTreeMap<PlaneId, Vec<String>>) {
        let ready: Vec<(PlaneId, AirportId, AirportId, PlaneTypeId)> = self
            .airplanes
            .values()
            .filter(|p| p.state == PlaneState::ReadyForTakeoff)
            .filter_map(|p| Some((p.id, p.airport()?, p.destination?, p.plane_type)))
            .collect();
        for (id, from, to, plane_type) in ready {
            let key = RouteKey { from, to, plane_type };
            let route = match self.network.route(&key) {
                Some(r) if r.available => r.clone(),
                Some(_) => {
                    self.airplanes.get_mut(&id).expect("plane exists").destination = None;
                    self.block(id, Command::Destination(to), "route unavailable", info);
                    continue;
                }
                None => {
                    self.airplanes.get_mut(&id).expect("plane exists").destination = None;
                    self.block(id, Command::Destination(to), "no route", info);
                    continue;
                }
            };
            let p = self.airplanes.get_mut(&id).expect("plane exists");
            p.location = PlaneLocation::InFlight(FlightLeg { route: key, elapsed: 0, total: route.flight_time });
            p.destination = None;
            p.process_requested = false;
            self.total_flight_cost += route.flight_cost;
            self.set_state(id, PlaneState::Moving);
            self.log.push(
                self.time,
                LogEvent::Takeoff { plane: id, route: key, flight_time: route.flight_time, cost: route.flight_cost },
            );
        }
    }

    fn advance_legs(&mut self) {
        for p in self.airplanes.values_mut() {
            if let PlaneLocation::InFlight(leg) = &mut p.location {
                leg.elapsed += 1;
            }
        }
    }

    fn sweep_deadlines(&mut self) {
        let now = self.time;
        let late: Vec<CargoId> =
            self.cargo.values().filter(|c| !c.status.is_resolved() && now > c.hard_deadline).map(|c| c.id).collect();
        for id in late {
            self.resolve_missed(id, MissReason::Deadline);
        }
    }

    /// Checks cargo conservation, weight feasibility, working capacity and
    /// state/location consistency. Returns one message per violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen: BTreeMap<CargoId, usize> = BTreeMap::new();
        for (airport, set) in &self.ground {
            for c in set {
                *seen.entry(*c).or_default() += 1;
                if self.cargo.get(c).map(|x| x.location) != Some(CargoLocation::Airport(*airport)) {
                    out.push(format!("cargo {c} on ground at {airport} but location disagrees"));
                }
            }
        }
        for p in self.airplanes.values() {
            for c in &p.manifest {
                *seen.entry(*c).or_default() += 1;
                if self.cargo.get(c).map(|x| x.location) != Some(CargoLocation::Airplane(p.id)) {
                    out.push(format!("cargo {c} on {} but location disagrees", p.id));
                }
            }
            let ty = self.plane_type_of(p);
            let weight = self.manifest_weight(p);
            if weight > ty.max_capacity {
                out.push(format!("{} carries {weight} > capacity {}", p.id, ty.max_capacity));
            }
            let moving = matches!(p.location, PlaneLocation::InFlight(_));
            if moving != (p.state == PlaneState::Moving) {
                out.push(format!("{} state {:?} inconsistent with location", p.id, p.state));
            }
            if let Some(leg) = p.leg() {
                if leg.elapsed > leg.total {
                    out.push(format!("{} leg elapsed {} > total {}", p.id, leg.elapsed, leg.total));
                }
            }
        }
        for c in self.ledger.keys() {
            *seen.entry(*c).or_default() += 1;
        }
        for c in self.cargo.keys() {
            match seen.get(c) {
                Some(1) => {}
                Some(n) => out.push(format!("cargo {c} appears in {n} containers")),
                None => out.push(format!("cargo {c} is in no container")),
            }
        }
        for c in seen.keys() {
            if !self.cargo.contains_key(c) {
                out.push(format!("unknown cargo {c} in a container"));
            }
        }
        for airport in self.network.airports.values() {
            let busy = self.processing_count(airport.id);
            if busy > airport.working_capacity {
                out.push(format!("{} processing {busy} > capacity {}", airport.id, airport.working_capacity));
            }
        }
        out
    }
}

/// Advances the episode by one synchronized step.
pub fn step(state: &mut EpisodeState, actions: &BTreeMap<PlaneId, Action>) -> StepResult {
    let mut info: BTreeMap<PlaneId, Vec<String>> = BTreeMap::new();
    if state.done {
        return StepResult { observation: state.observe(), rewards: BTreeMap::new(), done: true, info };
    }
    let before = reward::Snapshot::of(state);

    state.apply_actions(actions, &mut info);
    state.land_arrivals();
    state.admit();
    state.process(&mut info);
    state.takeoffs(&mut info);
    state.advance_legs();
    state.sweep_deadlines();

    state.time += 1;
    if state.time >= state.max_steps {
        state.finish_truncated();
    } else {
        apply_events(state, state.time);
        state.done = state.all_resolved();
    }

    let rewards = state.airplanes.keys().map(|&id| (id, reward::reward_since(&before, state, id))).collect();
    StepResult { observation: state.observe(), rewards, done: state.done, info }
}
