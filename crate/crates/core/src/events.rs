//! Stochastic disruptions: route malfunctions and dynamic cargo arrivals.
//!
//! Both streams are sampled up front into an [`EventSchedule`] stored in the
//! scenario, so the engine never draws randomness while stepping.
//!
//! The malfunction rate is global: `malfunction_rate` is the mean number of
//! onsets per step across the whole network, each assigned to a uniformly
//! chosen directed route.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::engine::EpisodeState;
use crate::error::GenError;
use crate::log::LogEvent;
use crate::model::{AirNetwork, AirplaneType, Cargo, CargoId, CargoLocation, RouteKey, Time};
use crate::rng::StreamRng;
use crate::scenario::{sample_cargo, GenParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalfunctionEvent {
    pub route: RouteKey,
    pub start: Time,
    /// Steps of unavailability; the route is down on `[start, start + duration)`.
    pub duration: Time,
}

impl MalfunctionEvent {
    pub fn end(&self) -> Time {
        self.start.saturating_add(self.duration)
    }

    pub fn covers(&self, t: Time) -> bool {
        self.start <= t && t < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CargoSpawnEvent {
    pub time: Time,
    pub cargo: Cargo,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSchedule {
    /// Sorted by (route, start); intervals on one route never overlap.
    pub malfunctions: Vec<MalfunctionEvent>,
    /// Sorted by time, then cargo id.
    pub spawns: Vec<CargoSpawnEvent>,
}

impl EventSchedule {
    pub fn is_empty(&self) -> bool {
        self.malfunctions.is_empty() && self.spawns.is_empty()
    }

    /// Malfunction intervals grouped by route.
    pub fn by_route(&self) -> BTreeMap<RouteKey, Vec<MalfunctionEvent>> {
        let mut out: BTreeMap<RouteKey, Vec<MalfunctionEvent>> = BTreeMap::new();
        for ev in &self.malfunctions {
            out.entry(ev.route).or_default().push(*ev);
        }
        out
    }
}

fn poisson_count(rate: f64, rng: &mut StreamRng) -> u32 {
    if rate <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(rate).expect("rate is positive and finite");
    dist.sample(rng) as u32
}

/// Raw malfunction onsets: per step a Poisson(`rate`) count, each on a
/// uniformly chosen route with a uniform-integer duration. Not merged.
pub fn sample_malfunction_onsets(
    rate: f64,
    horizon: Time,
    routes: &[RouteKey],
    duration_range: (Time, Time),
    rng: &mut StreamRng,
) -> Vec<MalfunctionEvent> {
    let mut out = Vec::new();
    if routes.is_empty() || rate <= 0.0 {
        return out;
    }
    let (lo, hi) = (duration_range.0.max(1), duration_range.1.max(duration_range.0).max(1));
    for t in 0..horizon {
        for _ in 0..poisson_count(rate, rng) {
            let route = routes[rng.random_range(0..routes.len())];
            let duration = rng.random_range(lo..=hi);
            out.push(MalfunctionEvent { route, start: t, duration });
        }
    }
    out
}

/// Merges overlapping or touching intervals per route and sorts by (route, start).
pub fn merge_malfunctions(mut events: Vec<MalfunctionEvent>) -> Vec<MalfunctionEvent> {
    events.sort_by_key(|e| (e.route, e.start, e.duration));
    let mut out: Vec<MalfunctionEvent> = Vec::with_capacity(events.len());
    for ev in events {
        match out.last_mut() {
            Some(last) if last.route == ev.route && ev.start <= last.end() => {
                let end = last.end().max(ev.end());
                last.duration = end - last.start;
            }
            _ => out.push(ev),
        }
    }
    out
}

pub fn sample_malfunctions(
    rate: f64,
    horizon: Time,
    routes: &[RouteKey],
    duration_range: (Time, Time),
    rng: &mut StreamRng,
) -> Vec<MalfunctionEvent> {
    merge_malfunctions(sample_malfunction_onsets(rate, horizon, routes, duration_range, rng))
}

/// Dynamic cargo: Poisson(`rate`) arrivals per step over `[1, horizon)`,
/// ids assigned consecutively from `first_id`.
#[allow(clippy::too_many_arguments)]
pub fn sample_cargo_spawns(
    rate: f64,
    horizon: Time,
    params: &GenParams,
    network: &AirNetwork,
    types: &[AirplaneType],
    first_id: u32,
    rng: &mut StreamRng,
) -> Result<Vec<CargoSpawnEvent>, GenError> {
    let mut out = Vec::new();
    let mut next_id = first_id;
    for t in 1..horizon {
        for _ in 0..poisson_count(rate, rng) {
            let cargo = sample_cargo(params, network, types, CargoId(next_id), t, rng)?;
            next_id += 1;
            out.push(CargoSpawnEvent { time: t, cargo });
        }
    }
    Ok(out)
}

/// Applies the schedule at `time`: route availability becomes a function of
/// the malfunction intervals covering `time`, and cargo spawning at `time`
/// is placed on the ground at its source.
pub fn apply_events(state: &mut EpisodeState, time: Time) {
    for (key, intervals) in &state.malfunctions {
        let down = intervals.iter().any(|e| e.covers(time));
        if let Some(route) = state.network.routes.get_mut(key) {
            if route.available == down {
                route.available = !down;
                let event = if down { LogEvent::RouteDown { route: *key } } else { LogEvent::RouteUp { route: *key } };
                state.log.push(time, event);
            }
        }
    }
    while let Some(ev) = state.spawns.get(state.next_spawn) {
        if ev.time > time {
            break;
        }
        let mut cargo = ev.cargo.clone();
        state.next_spawn += 1;
        cargo.location = CargoLocation::Airport(cargo.source);
        state.ground.entry(cargo.source).or_default().insert(cargo.id);
        state.log.push(time, LogEvent::Spawned { cargo: cargo.id, airport: cargo.source });
        state.cargo.insert(cargo.id, cargo);
    }
}
