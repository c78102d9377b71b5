use std::collections::BTreeMap;

use super::paths::{shortest_path_lex, Metric, Path};
use super::{Policy, ScenarioMeta};
use crate::engine::Observation;
use crate::error::PolicyError;
use crate::model::{Action, Airplane, AirportId, Cargo, CargoId, CargoLocation, PlaneId, PlaneState, RouteKey, Time};

/// Greedy single-cargo dispatcher.
///
/// Each unassigned cargo (in id order) goes to the idle compatible plane
/// that can reach it soonest, provided the plane can still deliver it by
/// the hard deadline. The plane follows the shortest path to the cargo,
/// loads it, follows the shortest path to its destination and unloads.
/// Paths are recomputed from the plane's current airport at every
/// decision, so an unavailable route on the committed path causes a
/// detour. Cargo that no plane can reach is retried every step.
///
/// With [`Metric::Time`] a hop weighs its flight time plus the processing
/// time spent at the landing airport, ties broken by flight cost.
#[derive(Debug, Clone, Default)]
pub struct ShortestPathPolicy {
    pub metric: Metric,
    assignment: BTreeMap<PlaneId, CargoId>,
}

enum Order {
    Act(Action),
    Wait,
    Drop,
}

impl ShortestPathPolicy {
    pub fn new(metric: Metric) -> Self {
        ShortestPathPolicy { metric, assignment: BTreeMap::new() }
    }

    pub fn assignment(&self) -> &BTreeMap<PlaneId, CargoId> {
        &self.assignment
    }

    fn path(&self, obs: &Observation, plane: &Airplane, from: AirportId, to: AirportId) -> Option<Path> {
        let p = obs.plane_type(plane.plane_type).map_or(1, |t| t.processing_time);
        let dwell = f64::from(p.saturating_sub(1));
        let metric = self.metric;
        shortest_path_lex(&obs.network, plane.plane_type, from, to, &|r| {
            if !r.available {
                return None;
            }
            let time = f64::from(r.flight_time) + dwell;
            Some(match metric {
                Metric::Time => (time, r.flight_cost),
                Metric::Cost => (r.flight_cost, time),
            })
        })
    }

    fn next_hop(&self, obs: &Observation, plane: &Airplane, from: AirportId, to: AirportId) -> Option<AirportId> {
        self.path(obs, plane, from, to)?.hops.first().copied()
    }

    /// Steps from takeoff at `from` to the end of processing at `to`.
    fn travel_time(&self, obs: &Observation, plane: &Airplane, from: AirportId, to: AirportId) -> Option<Time> {
        let p = obs.plane_type(plane.plane_type)?.processing_time;
        let path = self.path(obs, plane, from, to)?;
        let mut at = from;
        let mut t = 0;
        for &hop in &path.hops {
            let route = obs.network.route(&RouteKey { from: at, to: hop, plane_type: plane.plane_type })?;
            t += route.flight_time + p.saturating_sub(1);
            at = hop;
        }
        Some(t)
    }

    /// Leave `at` for a neighbor and come back, by the cheapest such loop.
    fn round_trip(&self, obs: &Observation, plane: &Airplane, at: AirportId) -> Option<(AirportId, Time)> {
        obs.network
            .available_neighbors(at, plane.plane_type)
            .into_iter()
            .filter_map(|n| {
                let out = self.travel_time(obs, plane, at, n)?;
                let back = self.travel_time(obs, plane, n, at)?;
                Some((out + back, n))
            })
            .min()
            .map(|(t, n)| (n, t))
    }

    /// Earliest (pickup, delivery) completion times of `cargo` by `plane`.
    fn estimate(&self, obs: &Observation, plane: &Airplane, cargo: &Cargo) -> Option<(Time, Time)> {
        let p = obs.plane_type(plane.plane_type)?.processing_time;
        let CargoLocation::Airport(source) = cargo.location else { return None };
        let now = obs.time;
        let at = plane.next_airport();
        let (ready, can_load) = match plane.state {
            PlaneState::Moving => {
                let leg = plane.leg()?;
                (now + (leg.total - leg.elapsed) + p - 1, true)
            }
            PlaneState::Waiting => (now + p - 1, true),
            PlaneState::Processing => (now + plane.processing_remaining.max(1) - 1, true),
            PlaneState::ReadyForTakeoff => (now, false),
        };
        let pickup = if at == source {
            if can_load {
                ready
            } else {
                ready + self.round_trip(obs, plane, at)?.1
            }
        } else {
            ready + self.travel_time(obs, plane, at, source)?
        };
        let delivery = pickup + self.travel_time(obs, plane, source, cargo.destination)?;
        Some((pickup, delivery))
    }

    fn order(&self, obs: &Observation, plane: &Airplane, cargo: &Cargo, at: AirportId, can_load: bool) -> Order {
        let fly = |hop: Option<AirportId>| hop.map_or(Order::Wait, |h| Order::Act(Action::fly_to(h)));
        let round_trip = || fly(self.round_trip(obs, plane, at).map(|(n, _)| n));
        if plane.manifest.contains(&cargo.id) {
            if at != cargo.destination {
                return fly(self.next_hop(obs, plane, at, cargo.destination));
            }
            if !can_load {
                return round_trip();
            }
            let mut a = Action::default();
            a.unload.insert(cargo.id);
            return Order::Act(a);
        }
        let CargoLocation::Airport(source) = cargo.location else { return Order::Drop };
        if at != source {
            return match self.next_hop(obs, plane, at, source) {
                Some(h) => Order::Act(Action::fly_to(h)),
                None => Order::Drop,
            };
        }
        if !can_load {
            return round_trip();
        }
        let mut a = Action::default();
        a.load.insert(cargo.id);
        a.destination = self.next_hop(obs, plane, at, cargo.destination);
        Order::Act(a)
    }

    fn assign(&mut self, obs: &Observation) {
        self.assignment.retain(|_, c| obs.cargo.contains_key(c));
        // Cargo found on board an unassigned plane stays with it.
        for plane in obs.airplanes.values() {
            if let std::collections::btree_map::Entry::Vacant(slot) = self.assignment.entry(plane.id) {
                if let Some(c) = plane.manifest.iter().find(|c| obs.cargo.contains_key(c)) {
                    slot.insert(*c);
                }
            }
        }
        let taken: Vec<CargoId> = self.assignment.values().copied().collect();
        for cargo in obs.cargo.values() {
            if taken.contains(&cargo.id) || !matches!(cargo.location, CargoLocation::Airport(_)) {
                continue;
            }
            let best = obs
                .airplanes
                .values()
                .filter(|p| !self.assignment.contains_key(&p.id))
                .filter(|p| obs.plane_type(p.plane_type).is_some_and(|t| t.max_capacity >= cargo.weight))
                .filter_map(|p| {
                    let (pickup, delivery) = self.estimate(obs, p, cargo)?;
                    (delivery <= cargo.hard_deadline).then_some((pickup, p.id))
                })
                .min();
            if let Some((_, plane)) = best {
                self.assignment.insert(plane, cargo.id);
            }
        }
    }
}

fn same_order(plane: &Airplane, a: &Action) -> bool {
    plane.pending_load == a.load && plane.pending_unload == a.unload && plane.destination == a.destination
}

impl Policy for ShortestPathPolicy {
    fn name(&self) -> &str {
        match self.metric {
            Metric::Time => "shortest-path",
            Metric::Cost => "shortest-path-cost",
        }
    }

    fn reset(&mut self, _meta: &ScenarioMeta) -> Result<(), PolicyError> {
        self.assignment.clear();
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<BTreeMap<PlaneId, Action>, PolicyError> {
        self.assign(obs);
        let mut out = BTreeMap::new();
        let mut dropped = Vec::new();
        for (&id, &cargo_id) in &self.assignment {
            let plane = &obs.airplanes[&id];
            let cargo = &obs.cargo[&cargo_id];
            let at = plane.next_airport();
            let landing = plane.leg().is_some_and(|l| l.arrived());
            let (can_load, fresh) = match plane.state {
                PlaneState::Moving if !landing => continue,
                PlaneState::Moving | PlaneState::Waiting => (true, !plane.process_requested),
                PlaneState::Processing => (true, false),
                PlaneState::ReadyForTakeoff => (false, false),
            };
            match self.order(obs, plane, cargo, at, can_load) {
                Order::Drop => dropped.push(id),
                Order::Wait => {}
                Order::Act(a) => {
                    let changed = if can_load { !same_order(plane, &a) } else { plane.destination != a.destination };
                    if fresh || changed {
                        out.insert(id, a);
                    }
                }
            }
        }
        for id in dropped {
            self.assignment.remove(&id);
        }
        Ok(out)
    }
}
