//! Domain types shared by every other module: airports, routes, the
//! per-type route multigraph, airplanes, cargo and actions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Discrete simulation time, in steps.
pub type Time = u32;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Airport identifier.
    AirportId,
    "a"
);
id_type!(
    /// Airplane (agent) identifier.
    PlaneId,
    "p"
);
id_type!(
    /// Airplane type identifier.
    PlaneTypeId,
    "t"
);
id_type!(
    /// Cargo identifier.
    CargoId,
    "c"
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance in map units.
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn default_cost_per_distance() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirplaneType {
    pub id: PlaneTypeId,
    #[serde(default)]
    pub name: String,
    /// Distance units covered per step.
    pub speed: f64,
    pub max_range: f64,
    /// Maximum total cargo weight on board.
    pub max_capacity: f64,
    /// Steps spent in the processing state after every landing.
    pub processing_time: u32,
    #[serde(default = "default_cost_per_distance")]
    pub cost_per_distance: f64,
}

impl AirplaneType {
    /// Returns a description of the first violated invariant, if any.
    pub fn check(&self) -> Option<String> {
        if !(self.speed > 0.0) {
            return Some(format!("type {}: speed must be > 0", self.id));
        }
        if !(self.max_range > 0.0) {
            return Some(format!("type {}: max_range must be > 0", self.id));
        }
        if !(self.max_capacity > 0.0) {
            return Some(format!("type {}: max_capacity must be > 0", self.id));
        }
        if self.processing_time < 1 {
            return Some(format!("type {}: processing_time must be >= 1", self.id));
        }
        if !(self.cost_per_distance >= 0.0) {
            return Some(format!("type {}: cost_per_distance must be >= 0", self.id));
        }
        None
    }

    /// Steps needed to fly `distance`: ceiling division with a floor of one.
    pub fn flight_time(&self, distance: f64) -> u32 {
        ((distance / self.speed).ceil() as u32).max(1)
    }

    pub fn flight_cost(&self, distance: f64) -> f64 {
        distance * self.cost_per_distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Pickup,
    Dropoff,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airport {
    pub id: AirportId,
    pub position: Point,
    /// Number of airplanes that may be in processing at once.
    pub working_capacity: u32,
    pub zone: Zone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RouteKey {
    pub from: AirportId,
    pub to: AirportId,
    pub plane_type: PlaneTypeId,
}

impl fmt::Display for RouteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}[{}]", self.from, self.to, self.plane_type)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub from: AirportId,
    pub to: AirportId,
    pub plane_type: PlaneTypeId,
    pub distance: f64,
    pub flight_time: u32,
    pub flight_cost: f64,
    pub available: bool,
}

impl Route {
    /// Builds a route whose time and cost are derived from `distance`.
    pub fn derive(from: AirportId, to: AirportId, ty: &AirplaneType, distance: f64) -> Self {
        Route {
            from,
            to,
            plane_type: ty.id,
            distance,
            flight_time: ty.flight_time(distance),
            flight_cost: ty.flight_cost(distance),
            available: true,
        }
    }

    pub fn key(&self) -> RouteKey {
        RouteKey { from: self.from, to: self.to, plane_type: self.plane_type }
    }
}

/// Multigraph of airports with one directed edge per (from, to, plane type).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr", into = "NetworkRepr")]
pub struct AirNetwork {
    pub airports: BTreeMap<AirportId, Airport>,
    pub routes: BTreeMap<RouteKey, Route>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    airports: Vec<Airport>,
    routes: Vec<Route>,
}

impl TryFrom<NetworkRepr> for AirNetwork {
    type Error = String;

    fn try_from(repr: NetworkRepr) -> Result<Self, Self::Error> {
        let mut net = AirNetwork::default();
        for airport in repr.airports {
            if net.airports.insert(airport.id, airport.clone()).is_some() {
                return Err(format!("duplicate airport {}", airport.id));
            }
        }
        for route in repr.routes {
            let key = route.key();
            if net.routes.insert(key, route).is_some() {
                return Err(format!("duplicate route {key}"));
            }
        }
        Ok(net)
    }
}

impl From<AirNetwork> for NetworkRepr {
    fn from(net: AirNetwork) -> Self {
        NetworkRepr { airports: net.airports.into_values().collect(), routes: net.routes.into_values().collect() }
    }
}

impl AirNetwork {
    pub fn route(&self, key: &RouteKey) -> Option<&Route> {
        self.routes.get(key)
    }

    /// Outgoing routes of `plane_type` from `from`, in ascending destination order.
    pub fn routes_from(&self, from: AirportId, plane_type: PlaneTypeId) -> impl Iterator<Item = &Route> + '_ {
        let lo = RouteKey { from, to: AirportId(0), plane_type: PlaneTypeId(0) };
        let hi = RouteKey { from, to: AirportId(u32::MAX), plane_type: PlaneTypeId(u32::MAX) };
        self.routes.range(lo..=hi).map(|(_, r)| r).filter(move |r| r.plane_type == plane_type)
    }

    /// Neighbors reachable in one hop over currently available routes.
    pub fn available_neighbors(&self, from: AirportId, plane_type: PlaneTypeId) -> Vec<AirportId> {
        self.routes_from(from, plane_type).filter(|r| r.available).map(|r| r.to).collect()
    }

    pub fn airports_in(&self, zone: Zone) -> Vec<AirportId> {
        self.airports.values().filter(|a| a.zone == zone).map(|a| a.id).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkRule {
    UnknownAirport,
    UnknownPlaneType,
    SelfLoop,
    RangeExceeded,
    FlightTimeBelowOne,
    FlightTimeMismatch,
    FlightCostMismatch,
    BadWorkingCapacity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkViolation {
    /// Offending route, or `None` for airport-level problems.
    pub route: Option<RouteKey>,
    pub airport: Option<AirportId>,
    pub rule: NetworkRule,
    pub detail: String,
}

impl fmt::Display for NetworkViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.route, &self.airport) {
            (Some(r), _) => write!(f, "route {r}: {:?}: {}", self.rule, self.detail),
            (None, Some(a)) => write!(f, "airport {a}: {:?}: {}", self.rule, self.detail),
            (None, None) => write!(f, "{:?}: {}", self.rule, self.detail),
        }
    }
}

/// Checks every route and network invariant. An empty result means the
/// network is well formed for the given type table.
pub fn validate_network(net: &AirNetwork, types: &[AirplaneType]) -> Vec<NetworkViolation> {
    let mut out = Vec::new();
    for airport in net.airports.values() {
        if airport.working_capacity < 1 {
            out.push(NetworkViolation {
                route: None,
                airport: Some(airport.id),
                rule: NetworkRule::BadWorkingCapacity,
                detail: "working_capacity must be >= 1".into(),
            });
        }
    }
    for route in net.routes.values() {
        let key = route.key();
        let mut violation =
            |rule, detail: String| out.push(NetworkViolation { route: Some(key), airport: None, rule, detail });
        if !net.airports.contains_key(&route.from) || !net.airports.contains_key(&route.to) {
            violation(NetworkRule::UnknownAirport, "endpoint not in airport set".into());
        }
        if route.from == route.to {
            violation(NetworkRule::SelfLoop, "from equals to".into());
        }
        if route.flight_time < 1 {
            violation(NetworkRule::FlightTimeBelowOne, "flight_time is 0".into());
        }
        let Some(ty) = types.iter().find(|t| t.id == route.plane_type) else {
            violation(NetworkRule::UnknownPlaneType, format!("no type {}", route.plane_type));
            continue;
        };
        if route.distance > ty.max_range {
            violation(NetworkRule::RangeExceeded, format!("distance {} > max_range {}", route.distance, ty.max_range));
        }
        let expected_time = ty.flight_time(route.distance);
        if route.flight_time >= 1 && route.flight_time != expected_time {
            violation(
                NetworkRule::FlightTimeMismatch,
                format!("flight_time {} != {}", route.flight_time, expected_time),
            );
        }
        let expected_cost = ty.flight_cost(route.distance);
        if route.flight_cost != expected_cost {
            violation(
                NetworkRule::FlightCostMismatch,
                format!("flight_cost {} != {}", route.flight_cost, expected_cost),
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CargoStatus {
    Waiting,
    Onboard,
    DeliveredOntime,
    DeliveredLate,
    Missed,
}

impl CargoStatus {
    pub fn is_resolved(self) -> bool {
        matches!(self, CargoStatus::DeliveredOntime | CargoStatus::DeliveredLate | CargoStatus::Missed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CargoLocation {
    Airport(AirportId),
    Airplane(PlaneId),
    /// Delivered or missed; the cargo sits in the episode ledger.
    Ledger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cargo {
    pub id: CargoId,
    pub weight: f64,
    pub source: AirportId,
    pub destination: AirportId,
    pub spawn_time: Time,
    pub soft_deadline: Time,
    pub hard_deadline: Time,
    pub status: CargoStatus,
    pub location: CargoLocation,
}

impl Cargo {
    /// Cargo waiting at its source, as placed by a generator.
    pub fn new(
        id: CargoId,
        weight: f64,
        source: AirportId,
        destination: AirportId,
        spawn_time: Time,
        soft_deadline: Time,
        hard_deadline: Time,
    ) -> Self {
        Cargo {
            id,
            weight,
            source,
            destination,
            spawn_time,
            soft_deadline,
            hard_deadline,
            status: CargoStatus::Waiting,
            location: CargoLocation::Airport(source),
        }
    }

    pub fn check(&self) -> Option<String> {
        if !(self.weight > 0.0) {
            return Some(format!("cargo {}: weight must be > 0", self.id));
        }
        if self.source == self.destination {
            return Some(format!("cargo {}: source equals destination", self.id));
        }
        if !(self.spawn_time <= self.soft_deadline && self.soft_deadline < self.hard_deadline) {
            return Some(format!(
                "cargo {}: need spawn {} <= soft {} < hard {}",
                self.id, self.spawn_time, self.soft_deadline, self.hard_deadline
            ));
        }
        None
    }
}

/// Classifies a cargo given its delivery time (if delivered) and the current time.
pub fn cargo_status_at(c: &Cargo, delivery_time: Option<Time>, now: Time) -> CargoStatus {
    match delivery_time {
        Some(t) if t <= c.soft_deadline => CargoStatus::DeliveredOntime,
        Some(t) if t <= c.hard_deadline => CargoStatus::DeliveredLate,
        Some(_) => CargoStatus::Missed,
        None if now > c.hard_deadline => CargoStatus::Missed,
        None if c.status == CargoStatus::Onboard => CargoStatus::Onboard,
        None => CargoStatus::Waiting,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneState {
    Waiting,
    Processing,
    ReadyForTakeoff,
    Moving,
}

impl PlaneState {
    /// The four legal edges of the airplane state machine.
    pub fn can_transition_to(self, next: PlaneState) -> bool {
        use PlaneState::*;
        matches!(
            (self, next),
            (Waiting, Processing) | (Processing, ReadyForTakeoff) | (ReadyForTakeoff, Moving) | (Moving, Waiting)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlightLeg {
    pub route: RouteKey,
    pub elapsed: u32,
    pub total: u32,
}

impl FlightLeg {
    /// True once the leg has covered its full flight time; the plane lands
    /// at the start of the following step.
    pub fn arrived(&self) -> bool {
        self.elapsed >= self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneLocation {
    Landed(AirportId),
    InFlight(FlightLeg),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Airplane {
    pub id: PlaneId,
    pub plane_type: PlaneTypeId,
    pub state: PlaneState,
    pub location: PlaneLocation,
    pub manifest: BTreeSet<CargoId>,
    /// Lower values are admitted to processing first.
    pub priority: i64,
    pub processing_remaining: u32,
    /// Time the plane joined its current airport queue.
    pub arrival_time: Time,
    /// Pending order, applied at the next processing completion / takeoff.
    pub pending_load: BTreeSet<CargoId>,
    pub pending_unload: BTreeSet<CargoId>,
    pub destination: Option<AirportId>,
    /// Set when an order has been received since the last takeoff; a
    /// waiting plane is only admitted to processing once ordered.
    pub process_requested: bool,
}

impl Airplane {
    pub fn landed(id: PlaneId, plane_type: PlaneTypeId, at: AirportId, priority: i64) -> Self {
        Airplane {
            id,
            plane_type,
            state: PlaneState::Waiting,
            location: PlaneLocation::Landed(at),
            manifest: BTreeSet::new(),
            priority,
            processing_remaining: 0,
            arrival_time: 0,
            pending_load: BTreeSet::new(),
            pending_unload: BTreeSet::new(),
            destination: None,
            process_requested: false,
        }
    }

    pub fn airport(&self) -> Option<AirportId> {
        match self.location {
            PlaneLocation::Landed(a) => Some(a),
            PlaneLocation::InFlight(_) => None,
        }
    }

    pub fn leg(&self) -> Option<&FlightLeg> {
        match &self.location {
            PlaneLocation::InFlight(leg) => Some(leg),
            PlaneLocation::Landed(_) => None,
        }
    }

    /// The airport where the plane's next processing happens: the current
    /// airport when landed, the leg's end when in flight.
    pub fn next_airport(&self) -> AirportId {
        match self.location {
            PlaneLocation::Landed(a) => a,
            PlaneLocation::InFlight(leg) => leg.route.to,
        }
    }
}

/// Consolidated per-agent command. A submitted action replaces the plane's
/// pending load, unload and destination; `priority` only changes when set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Action {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<i64>,
    #[serde(default)]
    pub load: BTreeSet<CargoId>,
    #[serde(default)]
    pub unload: BTreeSet<CargoId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<AirportId>,
}

impl Action {
    pub fn fly_to(destination: AirportId) -> Self {
        Action { destination: Some(destination), ..Action::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(range: f64) -> AirplaneType {
        AirplaneType {
            id: PlaneTypeId(0),
            name: "t".into(),
            speed: 2.0,
            max_range: range,
            max_capacity: 100.0,
            processing_time: 1,
            cost_per_distance: 1.0,
        }
    }

    fn two_airports(distance: f64) -> AirNetwork {
        let mut net = AirNetwork::default();
        for (i, x) in [0.0, distance].into_iter().enumerate() {
            let id = AirportId(i as u32);
            net.airports
                .insert(id, Airport { id, position: Point::new(x, 0.0), working_capacity: 1, zone: Zone::Neutral });
        }
        net
    }

    #[test]
    fn route_within_range_is_valid() {
        let t = ty(10.0);
        let mut net = two_airports(5.0);
        let r = Route::derive(AirportId(0), AirportId(1), &t, 5.0);
        net.routes.insert(r.key(), r);
        assert!(validate_network(&net, &[t]).is_empty());
    }

    #[test]
    fn route_beyond_range_is_flagged() {
        let t = ty(10.0);
        let mut net = two_airports(11.0);
        let r = Route::derive(AirportId(0), AirportId(1), &t, 11.0);
        net.routes.insert(r.key(), r.clone());
        let v = validate_network(&net, &[t]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, NetworkRule::RangeExceeded);
        assert_eq!(v[0].route, Some(r.key()));
    }

    #[test]
    fn zero_flight_time_is_flagged() {
        let t = ty(10.0);
        let mut net = two_airports(5.0);
        let mut r = Route::derive(AirportId(0), AirportId(1), &t, 5.0);
        r.flight_time = 0;
        net.routes.insert(r.key(), r);
        let v = validate_network(&net, &[t]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, NetworkRule::FlightTimeBelowOne);
    }

    #[test]
    fn flight_time_is_ceiling_with_floor_one() {
        let t = ty(100.0);
        assert_eq!(t.flight_time(0.5), 1);
        assert_eq!(t.flight_time(4.0), 2);
        assert_eq!(t.flight_time(4.1), 3);
        assert_eq!(t.flight_cost(4.1), 4.1);
    }

    fn cargo(soft: Time, hard: Time) -> Cargo {
        Cargo::new(CargoId(0), 1.0, AirportId(0), AirportId(1), 0, soft, hard)
    }

    #[test]
    fn delivery_classification_boundaries() {
        let c = cargo(15, 20);
        assert_eq!(cargo_status_at(&c, Some(15), 15), CargoStatus::DeliveredOntime);
        assert_eq!(cargo_status_at(&c, Some(16), 16), CargoStatus::DeliveredLate);
        assert_eq!(cargo_status_at(&c, Some(20), 20), CargoStatus::DeliveredLate);
        assert_eq!(cargo_status_at(&c, None, 21), CargoStatus::Missed);
        assert_eq!(cargo_status_at(&c, None, 20), CargoStatus::Waiting);
    }

    #[test]
    fn only_four_transitions_are_legal() {
        use PlaneState::*;
        let all = [Waiting, Processing, ReadyForTakeoff, Moving];
        let legal: Vec<_> = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_transition_to(*b))
            .collect();
        assert_eq!(
            legal,
            vec![(Waiting, Processing), (Processing, ReadyForTakeoff), (ReadyForTakeoff, Moving), (Moving, Waiting)]
        );
    }

    #[test]
    fn network_serde_rejects_duplicate_routes() {
        let t = ty(10.0);
        let mut net = two_airports(5.0);
        let r = Route::derive(AirportId(0), AirportId(1), &t, 5.0);
        net.routes.insert(r.key(), r.clone());
        let mut v = serde_json::to_value(&net).unwrap();
        v["routes"].as_array_mut().unwrap().push(serde_json::to_value(&r).unwrap());
        let err = serde_json::from_value::<AirNetwork>(v).unwrap_err();
        assert!(err.to_string().contains("duplicate route"));
    }
}
