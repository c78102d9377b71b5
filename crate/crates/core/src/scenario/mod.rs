//! Procedural scenario generation: terrain, airports and zones, per-type
//! routes, the airplane roster, initial cargo and the event schedule.

mod builder;
mod ladder;
mod terrain;

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use builder::ScenarioBuilder;
pub use ladder::{difficulty_level, LadderRow, LADDER};
pub use terrain::{generate_terrain, Terrain, TerrainParams};

use crate::error::GenError;
use crate::events::{sample_cargo_spawns, sample_malfunctions, EventSchedule};
use crate::model::{
    validate_network, AirNetwork, AirplaneType, Airport, AirportId, Cargo, CargoId, PlaneId, PlaneTypeId, Point, Route,
    RouteKey, Time, Zone,
};
use crate::policies::paths::fastest_delivery_time;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetEntry {
    pub plane_type: PlaneTypeId,
    pub count: u32,
}

/// Where airplanes start an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneStart {
    /// Uniform over airports with at least one route for the plane's type.
    #[default]
    AnyReachable,
    /// Uniform over pickup-zone airports served by the plane's type.
    PickupZone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub terrain: TerrainParams,
    pub airports: u32,
    pub min_separation: f64,
    pub pickup_airports: u32,
    pub dropoff_airports: u32,
    /// Inclusive range for each airport's working capacity.
    pub working_capacity: (u32, u32),
    pub plane_types: Vec<AirplaneType>,
    pub fleet: Vec<FleetEntry>,
    #[serde(default)]
    pub plane_start: PlaneStart,
    pub initial_cargo: u32,
    /// Mean dynamic cargo arrivals per step.
    pub cargo_rate: f64,
    /// Mean malfunction onsets per step over the whole network.
    pub malfunction_rate: f64,
    /// Inclusive range of malfunction durations, in steps.
    pub malfunction_duration: (Time, Time),
    /// Soft deadline slack, as a multiple of the fastest delivery time.
    pub soft_slack: f64,
    /// Hard deadline slack; must exceed `soft_slack`.
    pub hard_slack: f64,
    pub weight_range: (f64, f64),
    /// Steps over which dynamic events are sampled.
    pub horizon: Time,
    pub placement_retries: u32,
    pub cargo_retries: u32,
    /// Full re-placements tried until every pickup airport can reach a
    /// dropoff airport.
    #[serde(default = "default_network_retries")]
    pub network_retries: u32,
}

fn default_network_retries() -> u32 {
    20
}

pub fn default_plane_types() -> Vec<AirplaneType> {
    vec![
        AirplaneType {
            id: PlaneTypeId(0),
            name: "large".into(),
            speed: 10.0,
            max_range: 45.0,
            max_capacity: 100.0,
            processing_time: 3,
            cost_per_distance: 1.0,
        },
        AirplaneType {
            id: PlaneTypeId(1),
            name: "small".into(),
            speed: 12.0,
            max_range: 30.0,
            max_capacity: 40.0,
            processing_time: 2,
            cost_per_distance: 1.0,
        },
    ]
}

impl Default for GenParams {
    fn default() -> Self {
        difficulty_level(3, 0)
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidParams(m));
        if self.width == 0 || self.height == 0 {
            return bad("map dimensions must be positive".into());
        }
        let th = self.terrain.land_threshold;
        if !(0.0..=1.0).contains(&th) {
            return bad(format!("land_threshold {th} outside [0, 1]"));
        }
        if self.pickup_airports + self.dropoff_airports > self.airports {
            return bad("pickup + dropoff airports exceed airport count".into());
        }
        if !(self.min_separation >= 0.0) {
            return bad("min_separation must be >= 0".into());
        }
        if self.working_capacity.0 < 1 || self.working_capacity.0 > self.working_capacity.1 {
            return bad("working_capacity range must satisfy 1 <= lo <= hi".into());
        }
        if !(self.soft_slack >= 1.0) {
            return bad("soft_slack must be >= 1".into());
        }
        if !(self.hard_slack > self.soft_slack) {
            return bad("hard_slack must exceed soft_slack".into());
        }
        for (name, rate) in [("cargo_rate", self.cargo_rate), ("malfunction_rate", self.malfunction_rate)] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        let (dlo, dhi) = self.malfunction_duration;
        if dlo < 1 || dlo > dhi {
            return bad("malfunction_duration must satisfy 1 <= lo <= hi".into());
        }
        let (wlo, whi) = self.weight_range;
        if !(wlo > 0.0 && wlo <= whi) {
            return bad("weight_range must satisfy 0 < lo <= hi".into());
        }
        let mut ids = BTreeSet::new();
        for t in &self.plane_types {
            if let Some(m) = t.check() {
                return bad(m);
            }
            if !ids.insert(t.id) {
                return bad(format!("duplicate plane type {}", t.id));
            }
        }
        if !self.plane_types.iter().any(|t| t.max_capacity >= whi) {
            return bad("no airplane type can lift the heaviest cargo".into());
        }
        for f in &self.fleet {
            if !ids.contains(&f.plane_type) {
                return bad(format!("fleet references unknown type {}", f.plane_type));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub id: PlaneId,
    pub plane_type: PlaneTypeId,
    pub start: AirportId,
    /// Static default priority; policies may override it at run time.
    #[serde(default)]
    pub priority: i64,
}

/// Complete, replayable description of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// Generator parameters, absent for hand-built scenarios.
    pub params: Option<GenParams>,
    pub plane_types: Vec<AirplaneType>,
    pub network: AirNetwork,
    pub roster: Vec<PlaneSpec>,
    pub initial_cargo: Vec<Cargo>,
    pub events: EventSchedule,
}

impl ScenarioSpec {
    /// All cargo the scenario can ever present: initial plus scheduled.
    pub fn all_cargo(&self) -> impl Iterator<Item = &Cargo> + '_ {
        self.initial_cargo.iter().chain(self.events.spawns.iter().map(|s| &s.cargo))
    }

    /// Lists every violated scenario invariant.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut type_ids = BTreeSet::new();
        for t in &self.plane_types {
            if let Some(m) = t.check() {
                out.push(m);
            }
            if !type_ids.insert(t.id) {
                out.push(format!("duplicate plane type {}", t.id));
            }
        }
        out.extend(validate_network(&self.network, &self.plane_types).iter().map(|v| v.to_string()));
        let mut plane_ids = BTreeSet::new();
        for p in &self.roster {
            if !plane_ids.insert(p.id) {
                out.push(format!("duplicate airplane {}", p.id));
            }
            if !type_ids.contains(&p.plane_type) {
                out.push(format!("airplane {} has unknown type {}", p.id, p.plane_type));
            }
            if !self.network.airports.contains_key(&p.start) {
                out.push(format!("airplane {} starts at unknown airport {}", p.id, p.start));
            }
        }
        let mut cargo_ids = BTreeSet::new();
        for c in self.all_cargo() {
            if !cargo_ids.insert(c.id) {
                out.push(format!("duplicate cargo {}", c.id));
            }
            if let Some(m) = c.check() {
                out.push(m);
            }
            match self.network.airports.get(&c.source) {
                Some(a) if a.zone == Zone::Pickup => {}
                Some(_) => out.push(format!("cargo {} source {} not in pickup zone", c.id, c.source)),
                None => out.push(format!("cargo {} has unknown source {}", c.id, c.source)),
            }
            match self.network.airports.get(&c.destination) {
                Some(a) if a.zone == Zone::Dropoff => {}
                Some(_) => out.push(format!("cargo {} destination {} not in dropoff zone", c.id, c.destination)),
                None => out.push(format!("cargo {} has unknown destination {}", c.id, c.destination)),
            }
        }
        for c in &self.initial_cargo {
            if c.spawn_time != 0 {
                out.push(format!("initial cargo {} must spawn at 0", c.id));
            }
        }
        for s in &self.events.spawns {
            if s.cargo.spawn_time != s.time {
                out.push(format!(
                    "spawn event at {} carries cargo {} with spawn_time {}",
                    s.time, s.cargo.id, s.cargo.spawn_time
                ));
            }
        }
        for m in &self.events.malfunctions {
            if !self.network.routes.contains_key(&m.route) {
                out.push(format!("malfunction on unknown route {}", m.route));
            }
            if m.duration < 1 {
                out.push(format!("malfunction on {} has zero duration", m.route));
            }
        }
        out
    }
}

fn pick_cell(cells: &[(u32, u32)], rng: &mut StreamRng) -> Point {
    let (x, y) = cells[rng.random_range(0..cells.len())];
    Point::new(f64::from(x) + rng.random::<f64>(), f64::from(y) + rng.random::<f64>())
}

/// Places airports uniformly at random on land by rejection sampling.
///
/// Pickup airports come from the left third of the map, dropoff airports
/// from the right third, and the remaining (neutral) airports from anywhere.
/// Ids follow placement order: pickup, dropoff, neutral.
pub fn place_airports(terrain: &Terrain, params: &GenParams, rng: &mut StreamRng) -> Result<Vec<Airport>, GenError> {
    if terrain.land_count() == 0 {
        return Err(GenError::NoLand);
    }
    let w = terrain.width;
    let third = w / 3;
    let neutral = params.airports - params.pickup_airports - params.dropoff_airports;
    let plan = [
        (Zone::Pickup, params.pickup_airports, 0, third.max(1)),
        (Zone::Dropoff, params.dropoff_airports, w - third.max(1), w),
        (Zone::Neutral, neutral, 0, w),
    ];
    let mut placed: Vec<Airport> = Vec::new();
    for (zone, count, lo, hi) in plan {
        if count == 0 {
            continue;
        }
        let zone_name = format!("{zone:?}").to_lowercase();
        let cells = terrain.land_cells_in(lo, hi);
        if cells.is_empty() {
            return Err(GenError::EmptyZoneBand { zone: zone_name });
        }
        for k in 0..count {
            let mut ok = None;
            for _ in 0..params.placement_retries.max(1) {
                let pos = pick_cell(&cells, rng);
                if placed.iter().all(|a| a.position.distance(&pos) >= params.min_separation) {
                    ok = Some(pos);
                    break;
                }
            }
            let Some(position) = ok else {
                return Err(GenError::PlacementInfeasible {
                    zone: zone_name,
                    placed: k,
                    requested: count,
                    separation: params.min_separation,
                    retries: params.placement_retries,
                });
            };
            let (clo, chi) = params.working_capacity;
            placed.push(Airport {
                id: AirportId(placed.len() as u32),
                position,
                working_capacity: rng.random_range(clo..=chi),
                zone,
            });
        }
    }
    Ok(placed)
}

/// Connects, for every airplane type, each ordered airport pair within the
/// type's range.
pub fn build_routes(airports: &[Airport], types: &[AirplaneType]) -> Result<AirNetwork, GenError> {
    if airports.len() < 2 {
        return Err(GenError::TooFewAirports(airports.len()));
    }
    let mut net = AirNetwork::default();
    for a in airports {
        net.airports.insert(a.id, a.clone());
    }
    for t in types {
        for a in airports {
            for b in airports {
                if a.id == b.id {
                    continue;
                }
                let d = a.position.distance(&b.position);
                if d <= t.max_range {
                    let r = Route::derive(a.id, b.id, t, d);
                    net.routes.insert(r.key(), r);
                }
            }
        }
    }
    Ok(net)
}

/// Draws one cargo item spawning at `spawn_time`.
///
/// Deadlines are `spawn + ceil(slack * T)` where `T` is the fastest
/// single-airplane delivery time (flights plus one processing period at
/// pickup and one per landing). A hard deadline that rounds onto the soft
/// deadline is pushed one step later.
pub fn sample_cargo(
    params: &GenParams,
    network: &AirNetwork,
    types: &[AirplaneType],
    id: CargoId,
    spawn_time: Time,
    rng: &mut StreamRng,
) -> Result<Cargo, GenError> {
    let pickups = network.airports_in(Zone::Pickup);
    let dropoffs = network.airports_in(Zone::Dropoff);
    if pickups.is_empty() || dropoffs.is_empty() {
        return Err(GenError::EmptyZone);
    }
    let (wlo, whi) = params.weight_range;
    for _ in 0..params.cargo_retries.max(1) {
        let source = *pickups.choose(rng).expect("nonempty");
        let destination = *dropoffs.choose(rng).expect("nonempty");
        let weight = if wlo < whi { rng.random_range(wlo..whi) } else { wlo };
        let Some(fastest) = fastest_delivery_time(network, types, source, destination, weight) else {
            continue;
        };
        let fastest = f64::from(fastest);
        let soft = spawn_time + (params.soft_slack * fastest).ceil() as Time;
        let hard = (spawn_time + (params.hard_slack * fastest).ceil() as Time).max(soft + 1);
        return Ok(Cargo::new(id, weight, source, destination, spawn_time, soft, hard));
    }
    Err(GenError::NoReachablePair(params.cargo_retries))
}

fn place_roster(params: &GenParams, network: &AirNetwork, rng: &mut StreamRng) -> Vec<PlaneSpec> {
    let mut roster = Vec::new();
    for entry in &params.fleet {
        let served: Vec<AirportId> = network
            .airports
            .values()
            .filter(|a| network.routes_from(a.id, entry.plane_type).next().is_some())
            .filter(|a| params.plane_start == PlaneStart::AnyReachable || a.zone == Zone::Pickup)
            .map(|a| a.id)
            .collect();
        let candidates: Vec<AirportId> =
            if served.is_empty() { network.airports.keys().copied().collect() } else { served };
        for _ in 0..entry.count {
            let start = *candidates.choose(rng).expect("network has airports");
            roster.push(PlaneSpec {
                id: PlaneId(roster.len() as u32),
                plane_type: entry.plane_type,
                start,
                priority: 0,
            });
        }
    }
    roster
}

/// True when every pickup airport reaches some dropoff airport with one of
/// the airplane types able to lift the heaviest cargo.
pub fn zones_connected(network: &AirNetwork, types: &[AirplaneType], max_weight: f64) -> bool {
    let dropoffs = network.airports_in(Zone::Dropoff);
    network
        .airports_in(Zone::Pickup)
        .into_iter()
        .all(|p| dropoffs.iter().any(|d| fastest_delivery_time(network, types, p, *d, max_weight).is_some()))
}

/// Generates a complete scenario; deterministic in `params.seed`.
pub fn generate_scenario(params: &GenParams) -> Result<ScenarioSpec, GenError> {
    params.validate()?;
    let seed = params.seed;
    let types = &params.plane_types;
    let terrain = generate_terrain(params.width, params.height, &params.terrain, &mut rng::stream(seed, rng::TERRAIN));
    let mut placement = rng::stream(seed, rng::PLACEMENT);
    let mut network = build_routes(&place_airports(&terrain, params, &mut placement)?, types)?;
    for _ in 1..params.network_retries.max(1) {
        if zones_connected(&network, types, params.weight_range.1) {
            break;
        }
        network = build_routes(&place_airports(&terrain, params, &mut placement)?, types)?;
    }
    let roster = place_roster(params, &network, &mut rng::stream(seed, rng::ROSTER));

    let mut cargo_rng = rng::stream(seed, rng::CARGO);
    let initial_cargo = (0..params.initial_cargo)
        .map(|i| sample_cargo(params, &network, types, CargoId(i), 0, &mut cargo_rng))
        .collect::<Result<Vec<_>, _>>()?;

    let spawns = sample_cargo_spawns(
        params.cargo_rate,
        params.horizon,
        params,
        &network,
        types,
        params.initial_cargo,
        &mut rng::stream(seed, rng::SPAWNS),
    )?;
    let keys: Vec<RouteKey> = network.routes.keys().copied().collect();
    let malfunctions = sample_malfunctions(
        params.malfunction_rate,
        params.horizon,
        &keys,
        params.malfunction_duration,
        &mut rng::stream(seed, rng::MALFUNCTIONS),
    );

    Ok(ScenarioSpec {
        name: format!("scenario-{seed}"),
        params: Some(params.clone()),
        plane_types: types.clone(),
        network,
        roster,
        initial_cargo,
        events: EventSchedule { malfunctions, spawns },
    })
}
