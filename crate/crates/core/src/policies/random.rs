use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{decision_point, DecisionPoint, Policy, ScenarioMeta};
use crate::engine::Observation;
use crate::error::PolicyError;
use crate::model::{Action, Airplane, AirportId, PlaneId};

/// Issues uniformly random valid orders to planes awaiting one.
///
/// Each manifest item is unloaded and each cargo on the ground loaded with
/// probability 1/2 (loads that would exceed capacity are skipped); the
/// destination is uniform over available neighbors.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// A uniformly chosen available neighbor, or `None` when there is none.
    pub fn sample_destination(&mut self, obs: &Observation, plane: &Airplane, at: AirportId) -> Option<AirportId> {
        obs.network.available_neighbors(at, plane.plane_type).choose(&mut self.rng).copied()
    }

    pub fn sample_action(&mut self, obs: &Observation, plane: &Airplane) -> Option<Action> {
        match decision_point(plane)? {
            DecisionPoint::Grounded(at) => self.sample_destination(obs, plane, at).map(Action::fly_to),
            DecisionPoint::Unprocessed(at) => {
                let capacity = obs.plane_type(plane.plane_type)?.max_capacity;
                let mut action = Action::default();
                let mut weight = 0.0;
                for c in &plane.manifest {
                    if self.rng.random_bool(0.5) {
                        action.unload.insert(*c);
                    } else {
                        weight += obs.cargo[c].weight;
                    }
                }
                for c in obs.cargo_at(at) {
                    if self.rng.random_bool(0.5) && weight + c.weight <= capacity {
                        action.load.insert(c.id);
                        weight += c.weight;
                    }
                }
                action.destination = self.sample_destination(obs, plane, at);
                Some(action)
            }
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, _meta: &ScenarioMeta) -> Result<(), PolicyError> {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<BTreeMap<PlaneId, Action>, PolicyError> {
        let mut out = BTreeMap::new();
        for plane in obs.airplanes.values() {
            if let Some(a) = self.sample_action(obs, plane) {
                out.insert(plane.id, a);
            }
        }
        Ok(out)
    }
}
