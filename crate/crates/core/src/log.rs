//! Episode event log: an append-only sequence of `(time, event)` records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Action, AirportId, CargoId, CargoStatus, PlaneId, PlaneState, RouteKey, Time};
use crate::scenario::ScenarioSpec;

pub const LOG_FORMAT: &str = "airlift-episode-log";
pub const LOG_VERSION: &str = "1.0";

/// A single sub-command of an [`Action`], used in verdicts and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Load(CargoId),
    Unload(CargoId),
    Destination(AirportId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissReason {
    /// Hard deadline passed.
    Deadline,
    /// Episode reached its step cap with the cargo undelivered.
    EpisodeEnd,
    /// The policy failed and the episode was aborted.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    Action {
        plane: PlaneId,
        action: Action,
    },
    /// Sub-command refused when the action was submitted.
    Rejected {
        plane: PlaneId,
        command: Command,
        reason: String,
    },
    /// Previously accepted sub-command that could not execute.
    Blocked {
        plane: PlaneId,
        command: Command,
        reason: String,
    },
    UnknownPlane {
        plane: PlaneId,
    },
    RouteDown {
        route: RouteKey,
    },
    RouteUp {
        route: RouteKey,
    },
    Spawned {
        cargo: CargoId,
        airport: AirportId,
    },
    Transition {
        plane: PlaneId,
        from: PlaneState,
        to: PlaneState,
    },
    Landed {
        plane: PlaneId,
        airport: AirportId,
    },
    Takeoff {
        plane: PlaneId,
        route: RouteKey,
        flight_time: u32,
        cost: f64,
    },
    Loaded {
        plane: PlaneId,
        cargo: CargoId,
        airport: AirportId,
    },
    Unloaded {
        plane: PlaneId,
        cargo: CargoId,
        airport: AirportId,
    },
    Delivered {
        cargo: CargoId,
        plane: PlaneId,
        airport: AirportId,
        status: CargoStatus,
    },
    Missed {
        cargo: CargoId,
        reason: MissReason,
    },
    Aborted {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub time: Time,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub enabled: bool,
    pub records: Vec<LogRecord>,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        EventLog { enabled, records: Vec::new() }
    }

    pub fn push(&mut self, time: Time, event: LogEvent) {
        if self.enabled {
            self.records.push(LogRecord { time, event });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub status: CargoStatus,
    pub time: Time,
    /// Delivering plane, or the plane holding (or assigned) the cargo when missed.
    pub plane: Option<PlaneId>,
}

pub type Ledger = BTreeMap<CargoId, LedgerEntry>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: String,
    pub scenario_name: String,
    pub policy: String,
    pub seed: u64,
    pub max_steps: Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub end_time: Time,
    pub aborted: Option<String>,
    pub ledger: Ledger,
    pub total_flight_cost: f64,
}

/// Everything needed to replay and score an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub scenario: ScenarioSpec,
    pub records: Vec<LogRecord>,
    pub outcome: EpisodeOutcome,
}
