//! The policy interface and the baseline policies.

mod oracle;
pub mod paths;
mod random;
mod shortest;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use oracle::{oracle_plan, OracleConfig, OraclePolicy, OracleResult, Plan, Waypoint};
pub use random::RandomPolicy;
pub use shortest::ShortestPathPolicy;

use crate::engine::Observation;
use crate::error::PolicyError;
use crate::model::{Action, Airplane, AirportId, PlaneId, PlaneState, Time};
use crate::scenario::ScenarioSpec;

/// Scenario facts a policy may see before step 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub name: String,
    pub max_steps: Time,
    pub airplanes: Vec<PlaneId>,
    pub airports: usize,
    pub initial_cargo: usize,
}

impl ScenarioMeta {
    pub fn of(scenario: &ScenarioSpec, max_steps: Time) -> Self {
        ScenarioMeta {
            name: scenario.name.clone(),
            max_steps,
            airplanes: scenario.roster.iter().map(|p| p.id).collect(),
            airports: scenario.network.airports.len(),
            initial_cargo: scenario.initial_cargo.len(),
        }
    }
}

/// Decides actions from observations. Planes missing from the returned map
/// receive no new order this step.
pub trait Policy {
    fn name(&self) -> &str;

    fn reset(&mut self, _meta: &ScenarioMeta) -> Result<(), PolicyError> {
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<BTreeMap<PlaneId, Action>, PolicyError>;

    /// Called once after the episode ends.
    fn finish(&mut self) {}
}

/// Never issues an action.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdlePolicy;

impl Policy for IdlePolicy {
    fn name(&self) -> &str {
        "idle"
    }

    fn act(&mut self, _obs: &Observation) -> Result<BTreeMap<PlaneId, Action>, PolicyError> {
        Ok(BTreeMap::new())
    }
}

/// Names accepted by [`builtin_policy`].
pub const BUILTIN_POLICIES: [&str; 3] = ["random", "shortest-path", "idle"];

pub fn builtin_policy(name: &str, seed: u64) -> Option<Box<dyn Policy>> {
    match name {
        "random" => Some(Box::new(RandomPolicy::new(seed))),
        "shortest-path" | "shortest_path" | "sp" => Some(Box::new(ShortestPathPolicy::default())),
        "idle" => Some(Box::new(IdlePolicy)),
        _ => None,
    }
}

/// Where and whether a plane is waiting for an order that would start its
/// next processing period (or, once processed, its next takeoff).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DecisionPoint {
    /// Landed (or landing this step) and not yet ordered to process.
    Unprocessed(AirportId),
    /// Processed with no destination.
    Grounded(AirportId),
}

pub(crate) fn decision_point(plane: &Airplane) -> Option<DecisionPoint> {
    match plane.state {
        PlaneState::Waiting if !plane.process_requested => Some(DecisionPoint::Unprocessed(plane.next_airport())),
        PlaneState::Moving if !plane.process_requested && plane.leg().is_some_and(|l| l.arrived()) => {
            Some(DecisionPoint::Unprocessed(plane.next_airport()))
        }
        PlaneState::ReadyForTakeoff if plane.destination.is_none() => {
            Some(DecisionPoint::Grounded(plane.next_airport()))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests;
