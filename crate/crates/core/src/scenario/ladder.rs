use super::{default_plane_types, FleetEntry, GenParams, PlaneStart, TerrainParams};
use crate::model::PlaneTypeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    pub level: u32,
    pub airports: u32,
    pub agents: u32,
    pub initial_cargo: u32,
    pub cargo_rate: f64,
    pub malfunction_rate: f64,
}

/// Default difficulty ladder. Levels 1-4 fly one airplane type, 5-8 mix two.
pub const LADDER: [LadderRow; 8] = [
    LadderRow { level: 1, airports: 6, agents: 2, initial_cargo: 4, cargo_rate: 0.0, malfunction_rate: 0.0 },
    LadderRow { level: 2, airports: 8, agents: 3, initial_cargo: 6, cargo_rate: 0.002, malfunction_rate: 0.0 },
    LadderRow { level: 3, airports: 10, agents: 4, initial_cargo: 8, cargo_rate: 0.004, malfunction_rate: 0.001 },
    LadderRow { level: 4, airports: 12, agents: 5, initial_cargo: 10, cargo_rate: 0.006, malfunction_rate: 0.002 },
    LadderRow { level: 5, airports: 15, agents: 6, initial_cargo: 12, cargo_rate: 0.008, malfunction_rate: 0.004 },
    LadderRow { level: 6, airports: 18, agents: 8, initial_cargo: 15, cargo_rate: 0.010, malfunction_rate: 0.006 },
    LadderRow { level: 7, airports: 22, agents: 10, initial_cargo: 18, cargo_rate: 0.012, malfunction_rate: 0.008 },
    LadderRow { level: 8, airports: 26, agents: 12, initial_cargo: 22, cargo_rate: 0.015, malfunction_rate: 0.010 },
];

/// Generator parameters for `level` (clamped to 1..=8).
pub fn difficulty_level(level: u32, seed: u64) -> GenParams {
    let row = LADDER[(level.clamp(1, 8) - 1) as usize];
    let types = default_plane_types();
    let fleet = if row.level <= 4 {
        vec![FleetEntry { plane_type: PlaneTypeId(0), count: row.agents }]
    } else {
        let large = row.agents.div_ceil(2);
        vec![
            FleetEntry { plane_type: PlaneTypeId(0), count: large },
            FleetEntry { plane_type: PlaneTypeId(1), count: row.agents - large },
        ]
    };
    let zone = (row.airports / 4).max(1);
    GenParams {
        seed,
        width: 120,
        height: 80,
        terrain: TerrainParams { land_threshold: 0.42, ..TerrainParams::default() },
        airports: row.airports,
        min_separation: 8.0,
        pickup_airports: zone,
        dropoff_airports: zone,
        working_capacity: (1, 3),
        plane_types: if row.level <= 4 { types[..1].to_vec() } else { types },
        fleet,
        plane_start: PlaneStart::AnyReachable,
        initial_cargo: row.initial_cargo,
        cargo_rate: row.cargo_rate,
        malfunction_rate: row.malfunction_rate,
        malfunction_duration: (5, 40),
        soft_slack: 2.0,
        hard_slack: 4.0,
        weight_range: (5.0, 40.0),
        horizon: 5000,
        placement_retries: 1000,
        cargo_retries: 100,
        network_retries: 20,
    }
}
