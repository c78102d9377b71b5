use crate::error::GenError;
use crate::events::{CargoSpawnEvent, EventSchedule, MalfunctionEvent};
use crate::model::{
    AirplaneType, Airport, AirportId, Cargo, CargoId, PlaneId, PlaneTypeId, Point, RouteKey, Time, Zone,
};

use super::{build_routes, PlaneSpec, ScenarioSpec};

/// Hand-assembled scenarios. Airports, planes and cargo get consecutive ids
/// in insertion order; routes join every pair within each type's range.
#[derive(Debug, Clone, Default)]
pub struct ScenarioBuilder {
    name: String,
    types: Vec<AirplaneType>,
    airports: Vec<Airport>,
    roster: Vec<PlaneSpec>,
    cargo: Vec<Cargo>,
    spawns: Vec<CargoSpawnEvent>,
    malfunctions: Vec<MalfunctionEvent>,
}

impl ScenarioBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ScenarioBuilder { name: name.into(), ..Default::default() }
    }

    /// Adds a type with unit cost per distance and returns its id.
    pub fn plane_type(mut self, speed: f64, max_range: f64, max_capacity: f64, processing_time: u32) -> Self {
        let id = PlaneTypeId(self.types.len() as u32);
        self.types.push(AirplaneType {
            id,
            name: format!("type{}", id.0),
            speed,
            max_range,
            max_capacity,
            processing_time,
            cost_per_distance: 1.0,
        });
        self
    }

    pub fn airport(mut self, x: f64, y: f64, zone: Zone, working_capacity: u32) -> Self {
        let id = AirportId(self.airports.len() as u32);
        self.airports.push(Airport { id, position: Point::new(x, y), working_capacity, zone });
        self
    }

    pub fn plane(mut self, plane_type: u32, start: u32) -> Self {
        let id = PlaneId(self.roster.len() as u32);
        self.roster.push(PlaneSpec { id, plane_type: PlaneTypeId(plane_type), start: AirportId(start), priority: 0 });
        self
    }

    fn next_cargo_id(&self) -> CargoId {
        CargoId((self.cargo.len() + self.spawns.len()) as u32)
    }

    /// Initial cargo, present from step 0.
    pub fn cargo(mut self, weight: f64, source: u32, destination: u32, soft: Time, hard: Time) -> Self {
        let id = self.next_cargo_id();
        self.cargo.push(Cargo::new(id, weight, AirportId(source), AirportId(destination), 0, soft, hard));
        self
    }

    pub fn spawn(mut self, time: Time, weight: f64, source: u32, destination: u32, soft: Time, hard: Time) -> Self {
        let id = self.next_cargo_id();
        let cargo = Cargo::new(id, weight, AirportId(source), AirportId(destination), time, soft, hard);
        self.spawns.push(CargoSpawnEvent { time, cargo });
        self
    }

    pub fn malfunction(mut self, from: u32, to: u32, plane_type: u32, start: Time, duration: Time) -> Self {
        let route = RouteKey { from: AirportId(from), to: AirportId(to), plane_type: PlaneTypeId(plane_type) };
        self.malfunctions.push(MalfunctionEvent { route, start, duration });
        self
    }

    pub fn build(self) -> Result<ScenarioSpec, GenError> {
        let network = build_routes(&self.airports, &self.types)?;
        let mut spawns = self.spawns;
        spawns.sort_by_key(|s| (s.time, s.cargo.id));
        let mut malfunctions = self.malfunctions;
        malfunctions.sort_by_key(|m| (m.route, m.start));
        Ok(ScenarioSpec {
            name: self.name,
            params: None,
            plane_types: self.types,
            network,
            roster: self.roster,
            initial_cargo: self.cargo,
            events: EventSchedule { malfunctions, spawns },
        })
    }
}
