//! Exhaustive optimal planner for desk-scale static instances.
//!
//! Breadth-first search over engine states, one layer per step. At every
//! step each plane awaiting an order may receive any valid order (every
//! unload subset, every load subset that fits, every available destination)
//! or none. A state equal, up to a shift in time, to one already reached
//! at an earlier or the same step is dropped: the earlier copy can replay
//! any continuation sooner, and sooner never scores worse on a static
//! instance. A state is also pruned once a lower bound on its score (cargo
//! that can no longer arrive in time, flight cost so far plus the cheapest
//! remaining delivery) cannot beat the best episode found. The shortest-path
//! policy's episode seeds that incumbent.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::paths::{min_delivery_cost, shortest_path_by};
use super::{decision_point, DecisionPoint, Policy, ShortestPathPolicy};
use crate::engine::{run_episode, step, validate_action, EpisodeConfig, EpisodeState, Observation, DEFAULT_MAX_STEPS};
use crate::error::{OracleError, PolicyError};
use crate::log::LogEvent;
use crate::model::{Action, Airplane, AirportId, CargoId, CargoLocation, CargoStatus, PlaneId, Time};
use crate::scenario::ScenarioSpec;
use crate::scoring::{cost_bound, normalized_score, score_outcome, EpisodeScore, ScoreWeights};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Steps explored exhaustively; afterwards planes are left idle.
    pub horizon: Time,
    pub max_planes: usize,
    pub max_cargo: usize,
    /// Expansion budget; once spent, the best episode found so far is
    /// returned marked exhausted.
    pub max_expanded: usize,
    pub weights: ScoreWeights,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            horizon: 60,
            max_planes: 2,
            max_cargo: 3,
            max_expanded: 500_000,
            weights: ScoreWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub airport: AirportId,
    pub load: BTreeSet<CargoId>,
    pub unload: BTreeSet<CargoId>,
}

/// Per plane, the airports it processes at in order, starting from its
/// initial airport.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub routes: BTreeMap<PlaneId, Vec<Waypoint>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub plan: Plan,
    /// The orders issued, by step.
    pub schedule: BTreeMap<Time, BTreeMap<PlaneId, Action>>,
    pub score: EpisodeScore,
    /// The horizon cut the search short; the result is best-found, not
    /// necessarily optimal.
    pub exhausted: bool,
    /// Some cargo is missed in the best plan found.
    pub incomplete: bool,
    pub states_expanded: usize,
}

#[derive(PartialEq, Eq, Hash)]
struct Key {
    planes: Vec<Airplane>,
    cargo: Vec<(CargoId, CargoStatus, CargoLocation)>,
    cost: u64,
}

/// The state with queue arrival times made relative to the current step.
fn key(state: &EpisodeState) -> Key {
    Key {
        planes: state
            .airplanes
            .values()
            .map(|p| Airplane { arrival_time: state.time.saturating_sub(p.arrival_time), ..p.clone() })
            .collect(),
        cargo: state.cargo.values().map(|c| (c.id, c.status, c.location)).collect(),
        cost: state.total_flight_cost.to_bits(),
    }
}

struct Node {
    state: EpisodeState,
    schedule: Vec<(Time, BTreeMap<PlaneId, Action>)>,
}

fn subsets(items: &[CargoId]) -> Vec<BTreeSet<CargoId>> {
    (0u32..1 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| *c).collect())
        .collect()
}

/// Every valid order for `plane`, with `None` standing for "no order".
fn options(state: &EpisodeState, plane: &Airplane) -> Vec<Option<Action>> {
    let mut out = vec![None];
    let Some(point) = decision_point(plane) else { return out };
    match point {
        DecisionPoint::Grounded(at) => {
            for n in state.network.available_neighbors(at, plane.plane_type) {
                out.push(Some(Action::fly_to(n)));
            }
        }
        DecisionPoint::Unprocessed(at) => {
            let manifest: Vec<CargoId> = plane.manifest.iter().copied().collect();
            let ground: Vec<CargoId> = state.ground.get(&at).map(|g| g.iter().copied().collect()).unwrap_or_default();
            let mut destinations: Vec<Option<AirportId>> = vec![None];
            destinations.extend(state.network.available_neighbors(at, plane.plane_type).into_iter().map(Some));
            for unload in subsets(&manifest) {
                for load in subsets(&ground) {
                    for &destination in &destinations {
                        if unload.is_empty() && load.is_empty() && destination.is_none() {
                            continue;
                        }
                        let a = Action { priority: None, load: load.clone(), unload: unload.clone(), destination };
                        if validate_action(state, plane.id, &a).iter().all(|v| v.accepted()) {
                            out.push(Some(a));
                        }
                    }
                }
            }
        }
    }
    out
}

fn joint(per_plane: &[(PlaneId, Vec<Option<Action>>)]) -> Vec<BTreeMap<PlaneId, Action>> {
    let mut acc = vec![BTreeMap::new()];
    for (id, opts) in per_plane {
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for partial in &acc {
            for o in opts {
                let mut m: BTreeMap<PlaneId, Action> = partial.clone();
                if let Some(a) = o {
                    m.insert(*id, a.clone());
                }
                next.push(m);
            }
        }
        acc = next;
    }
    acc
}

fn build_plan(scenario: &ScenarioSpec, schedule: &BTreeMap<Time, BTreeMap<PlaneId, Action>>) -> Plan {
    let mut plan = Plan::default();
    for p in &scenario.roster {
        plan.routes.insert(p.id, vec![Waypoint { airport: p.start, load: BTreeSet::new(), unload: BTreeSet::new() }]);
    }
    let Ok(state) = EpisodeState::new(scenario, DEFAULT_MAX_STEPS) else { return plan };
    let mut state = state.without_log();
    let mut moved: BTreeSet<PlaneId> = BTreeSet::new();
    let empty = BTreeMap::new();
    while !state.done {
        let actions = schedule.get(&state.time).unwrap_or(&empty);
        for (id, a) in actions {
            let at = state.airplanes[id].next_airport();
            let route = plan.routes.get_mut(id).expect("roster plane");
            let last = route.last_mut().expect("start waypoint");
            if last.airport == at && !moved.contains(id) {
                last.load.extend(a.load.iter().copied());
                last.unload.extend(a.unload.iter().copied());
            } else {
                route.push(Waypoint { airport: at, load: a.load.clone(), unload: a.unload.clone() });
                moved.remove(id);
            }
        }
        let before: BTreeMap<PlaneId, bool> = state.airplanes.iter().map(|(id, p)| (*id, p.leg().is_some())).collect();
        step(&mut state, actions);
        for (id, p) in &state.airplanes {
            if p.leg().is_some() && !before[id] {
                moved.insert(*id);
            }
        }
    }
    for (id, p) in &state.airplanes {
        let route = plan.routes.get_mut(id).expect("roster plane");
        let at = p.next_airport();
        if route.last().map(|w| w.airport) != Some(at) {
            route.push(Waypoint { airport: at, load: BTreeSet::new(), unload: BTreeSet::new() });
        }
    }
    plan
}

/// Minimum-score plan for a small static scenario.
pub fn oracle_plan(scenario: &ScenarioSpec, config: &OracleConfig) -> Result<OracleResult, OracleError> {
    let planes = scenario.roster.len();
    let cargo = scenario.initial_cargo.len();
    if planes > config.max_planes || cargo > config.max_cargo {
        return Err(OracleError::TooLarge {
            planes,
            cargo,
            max_planes: config.max_planes,
            max_cargo: config.max_cargo,
        });
    }
    if !scenario.events.is_empty() {
        return Err(OracleError::Dynamic);
    }
    let w = &config.weights;
    let initial = EpisodeState::new(scenario, DEFAULT_MAX_STEPS)?.without_log();
    let all: crate::log::Ledger = initial
        .cargo
        .keys()
        .map(|c| (*c, crate::log::LedgerEntry { status: CargoStatus::Missed, time: 0, plane: None }))
        .collect();
    let bound = cost_bound(scenario, &all);
    let n = cargo.max(1) as f64;

    // Per (airport, destination): least flight time and least flight cost.
    let airports: Vec<AirportId> = scenario.network.airports.keys().copied().collect();
    let mut reach: HashMap<(AirportId, AirportId), (Time, f64)> = HashMap::new();
    for c in initial.cargo.values() {
        for &a in &airports {
            let time = scenario
                .plane_types
                .iter()
                .filter_map(|t| {
                    shortest_path_by(&scenario.network, t.id, a, c.destination, &|r| Some(f64::from(r.flight_time)))
                })
                .map(|p| p.total as Time)
                .min();
            let cost = min_delivery_cost(&scenario.network, &scenario.plane_types, a, c.destination);
            if let (Some(time), Some(cost)) = (time, cost) {
                reach.insert((a, c.destination), (time, cost));
            }
        }
    }
    let lower_bound = |s: &EpisodeState| {
        let count = |st: CargoStatus| s.ledger.values().filter(|e| e.status == st).count();
        let (mut missed, mut late, mut extra_cost) =
            (count(CargoStatus::Missed), count(CargoStatus::DeliveredLate), 0.0f64);
        for c in s.cargo.values().filter(|c| !c.status.is_resolved()) {
            let (from, delay) = match c.location {
                CargoLocation::Airport(a) => (a, 0),
                CargoLocation::Airplane(p) => {
                    let plane = &s.airplanes[&p];
                    (plane.next_airport(), plane.leg().map_or(0, |l| l.total.saturating_sub(l.elapsed)))
                }
                CargoLocation::Ledger => continue,
            };
            let Some(&(time, cost)) = reach.get(&(from, c.destination)) else {
                missed += 1;
                continue;
            };
            let earliest = s.time + delay + time;
            if earliest > c.hard_deadline {
                missed += 1;
            } else {
                if earliest > c.soft_deadline {
                    late += 1;
                }
                extra_cost = extra_cost.max(cost);
            }
        }
        normalized_score(w, missed as f64 / n, late as f64 / n, s.total_flight_cost + extra_cost, bound)
    };

    type Best = Option<(f64, EpisodeState, Vec<(Time, BTreeMap<PlaneId, Action>)>)>;
    let mut best: Best = None;
    let consider = |best: &mut Best, state: EpisodeState, schedule: Vec<(Time, BTreeMap<PlaneId, Action>)>| {
        let s = score_outcome(scenario, &state.ledger, state.total_flight_cost, w).normalized;
        if best.as_ref().is_none_or(|(b, _, _)| s < *b) {
            *best = Some((s, state, schedule));
        }
    };

    let incumbent = incumbent_schedule(scenario)?;
    let mut s = initial.clone();
    let empty = BTreeMap::new();
    while !s.done {
        let now = s.time;
        step(&mut s, incumbent.get(&now).unwrap_or(&empty));
    }
    consider(&mut best, s, incumbent.into_iter().collect());

    let mut exhausted = false;
    let mut expanded = 0usize;
    // Fingerprints rather than full keys keep memory flat on large searches.
    let fingerprint = |s: &EpisodeState| {
        let mut h = DefaultHasher::new();
        key(s).hash(&mut h);
        h.finish()
    };
    let mut seen: HashSet<u64> = HashSet::new();
    seen.insert(fingerprint(&initial));
    let mut frontier = vec![Node { state: initial, schedule: Vec::new() }];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for node in frontier {
            if node.state.done {
                consider(&mut best, node.state, node.schedule);
                continue;
            }
            let best_now = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            if lower_bound(&node.state) >= best_now {
                continue;
            }
            if node.state.time >= config.horizon || expanded >= config.max_expanded {
                exhausted = true;
                let mut s = node.state;
                while !s.done {
                    step(&mut s, &BTreeMap::new());
                }
                consider(&mut best, s, node.schedule);
                continue;
            }
            expanded += 1;
            let per_plane: Vec<(PlaneId, Vec<Option<Action>>)> =
                node.state.airplanes.values().map(|p| (p.id, options(&node.state, p))).collect();
            for actions in joint(&per_plane) {
                let mut s = node.state.clone();
                step(&mut s, &actions);
                if !seen.insert(fingerprint(&s)) {
                    continue;
                }
                let mut schedule = node.schedule.clone();
                if !actions.is_empty() {
                    schedule.push((node.state.time, actions));
                }
                next.push(Node { state: s, schedule });
            }
        }
        frontier = next;
    }

    let (_, state, schedule) = best.expect("search reaches at least one terminal state");
    let schedule: BTreeMap<Time, BTreeMap<PlaneId, Action>> = schedule.into_iter().collect();
    let score = score_outcome(scenario, &state.ledger, state.total_flight_cost, w);
    Ok(OracleResult {
        plan: build_plan(scenario, &schedule),
        incomplete: state.ledger.values().any(|e| e.status == CargoStatus::Missed),
        schedule,
        score,
        exhausted,
        states_expanded: expanded,
    })
}

/// The orders the shortest-path policy issues on `scenario`.
fn incumbent_schedule(scenario: &ScenarioSpec) -> Result<BTreeMap<Time, BTreeMap<PlaneId, Action>>, OracleError> {
    let log = run_episode(scenario, &mut ShortestPathPolicy::default(), &EpisodeConfig::default())?;
    let mut out: BTreeMap<Time, BTreeMap<PlaneId, Action>> = BTreeMap::new();
    for r in &log.records {
        if let LogEvent::Action { plane, action } = &r.event {
            out.entry(r.time).or_default().insert(*plane, action.clone());
        }
    }
    Ok(out)
}

/// Replays a fixed schedule of orders.
#[derive(Debug, Clone, Default)]
pub struct OraclePolicy {
    pub schedule: BTreeMap<Time, BTreeMap<PlaneId, Action>>,
}

impl OraclePolicy {
    pub fn new(result: &OracleResult) -> Self {
        OraclePolicy { schedule: result.schedule.clone() }
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> &str {
        "oracle"
    }

    fn act(&mut self, obs: &Observation) -> Result<BTreeMap<PlaneId, Action>, PolicyError> {
        Ok(self.schedule.get(&obs.time).cloned().unwrap_or_default())
    }
}
