use std::fmt;

use serde::{Deserialize, Serialize};

use super::EpisodeState;
use crate::log::Command;
use crate::model::{Action, CargoStatus, PlaneId, PlaneState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    UnknownCargo,
    NotSpawned,
    AlreadyResolved,
    AlreadyOnboard,
    NotAtAirport,
    CapacityExceeded,
    NotInManifest,
    LoadUnloadConflict,
    ProcessingComplete,
    NoRoute,
    RouteUnavailable,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::UnknownCargo => "unknown cargo",
            RejectReason::NotSpawned => "cargo not yet spawned",
            RejectReason::AlreadyResolved => "cargo already resolved",
            RejectReason::AlreadyOnboard => "cargo already on board",
            RejectReason::NotAtAirport => "cargo not at the airplane's airport",
            RejectReason::CapacityExceeded => "load would exceed capacity",
            RejectReason::NotInManifest => "cargo not on board",
            RejectReason::LoadUnloadConflict => "cargo in both load and unload",
            RejectReason::ProcessingComplete => "processing already complete",
            RejectReason::NoRoute => "destination is not a neighbor for this airplane type",
            RejectReason::RouteUnavailable => "route currently unavailable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandVerdict {
    pub command: Command,
    /// `None` when the command is accepted.
    pub rejected: Option<RejectReason>,
}

impl CommandVerdict {
    pub fn accepted(&self) -> bool {
        self.rejected.is_none()
    }
}

/// Per-command verdicts for `action` issued to `plane_id` in `state`.
///
/// Loads and unloads are judged against the airport where the plane will
/// next process (its current airport, or the end of its flight leg).
/// Capacity is checked after accepted unloads, adding loads in id order.
pub fn validate_action(state: &EpisodeState, plane_id: PlaneId, action: &Action) -> Vec<CommandVerdict> {
    let plane = &state.airplanes[&plane_id];
    let ty = state.plane_type_of(plane);
    let airport = plane.next_airport();
    let done_processing = plane.state == PlaneState::ReadyForTakeoff;
    let mut out = Vec::new();
    let mut weight = state.manifest_weight(plane);

    for &c in &action.unload {
        let rejected = if done_processing {
            Some(RejectReason::ProcessingComplete)
        } else if action.load.contains(&c) {
            Some(RejectReason::LoadUnloadConflict)
        } else if !plane.manifest.contains(&c) {
            Some(RejectReason::NotInManifest)
        } else {
            None
        };
        if rejected.is_none() {
            weight -= state.cargo[&c].weight;
        }
        out.push(CommandVerdict { command: Command::Unload(c), rejected });
    }

    for &c in &action.load {
        let rejected = if done_processing {
            Some(RejectReason::ProcessingComplete)
        } else if action.unload.contains(&c) {
            Some(RejectReason::LoadUnloadConflict)
        } else {
            match state.cargo.get(&c) {
                None if state.spawns[state.next_spawn..].iter().any(|s| s.cargo.id == c) => {
                    Some(RejectReason::NotSpawned)
                }
                None => Some(RejectReason::UnknownCargo),
                Some(cargo) if cargo.status.is_resolved() => Some(RejectReason::AlreadyResolved),
                Some(_) if plane.manifest.contains(&c) => Some(RejectReason::AlreadyOnboard),
                Some(cargo) if cargo.status == CargoStatus::Onboard => Some(RejectReason::NotAtAirport),
                Some(_) if !state.ground.get(&airport).is_some_and(|g| g.contains(&c)) => {
                    Some(RejectReason::NotAtAirport)
                }
                Some(cargo) if weight + cargo.weight > ty.max_capacity => Some(RejectReason::CapacityExceeded),
                Some(_) => None,
            }
        };
        if rejected.is_none() {
            weight += state.cargo[&c].weight;
        }
        out.push(CommandVerdict { command: Command::Load(c), rejected });
    }

    if let Some(d) = action.destination {
        let key = crate::model::RouteKey { from: airport, to: d, plane_type: plane.plane_type };
        let rejected = match state.network.route(&key) {
            None => Some(RejectReason::NoRoute),
            Some(r) if !r.available && plane.state != PlaneState::Moving => Some(RejectReason::RouteUnavailable),
            Some(_) => None,
        };
        out.push(CommandVerdict { command: Command::Destination(d), rejected });
    }
    out
}
