//! Per-agent step reward: negative flight cost, amortized uniformly over the
//! steps of each leg, minus penalties for late deliveries and newly missed
//! cargo the agent held or was about to load.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EpisodeState;
use crate::model::{CargoId, CargoStatus, PlaneId, PlaneLocation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub late: f64,
    pub missed: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { late: 10.0, missed: 100.0 }
    }
}

/// The parts of a pre-step state that the reward depends on.
pub(crate) struct Snapshot {
    held: BTreeMap<PlaneId, BTreeSet<CargoId>>,
    resolved: BTreeSet<CargoId>,
}

impl Snapshot {
    pub(crate) fn of(state: &EpisodeState) -> Self {
        Snapshot {
            held: state
                .airplanes
                .values()
                .map(|p| (p.id, p.manifest.union(&p.pending_load).copied().collect()))
                .collect(),
            resolved: state.ledger.keys().copied().collect(),
        }
    }
}

pub(crate) fn reward_since(before: &Snapshot, after: &EpisodeState, plane: PlaneId) -> f64 {
    let Some(p) = after.airplanes.get(&plane) else {
        return 0.0;
    };
    let mut r = 0.0;
    // Every leg still in flight after a step advanced during that step.
    if let PlaneLocation::InFlight(leg) = &p.location {
        if let Some(route) = after.network.route(&leg.route) {
            r -= route.flight_cost / f64::from(leg.total);
        }
    }
    let empty = BTreeSet::new();
    let held = before.held.get(&plane).unwrap_or(&empty);
    for (id, entry) in after.ledger.range(..) {
        if before.resolved.contains(id) {
            continue;
        }
        match entry.status {
            CargoStatus::DeliveredLate if entry.plane == Some(plane) => r -= after.rewards.late,
            CargoStatus::Missed if held.contains(id) => r -= after.rewards.missed,
            _ => {}
        }
    }
    r
}

/// Reward earned by `plane` on the step that took `before` to `after`.
pub fn reward(before: &EpisodeState, after: &EpisodeState, plane: PlaneId) -> f64 {
    reward_since(&Snapshot::of(before), after, plane)
}
