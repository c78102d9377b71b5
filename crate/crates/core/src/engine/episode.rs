use std::time::{Duration, Instant};

use super::{step, EpisodeState, RewardWeights, DEFAULT_MAX_STEPS};
use crate::error::{PolicyError, ScenarioError};
use crate::log::{EpisodeLog, EpisodeOutcome, LogHeader, LOG_FORMAT, LOG_VERSION};
use crate::model::Time;
use crate::policies::{Policy, ScenarioMeta};
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub max_steps: Time,
    /// Recorded in the log header; policies receive their own seeds.
    pub seed: u64,
    pub rewards: RewardWeights,
    /// Wall-clock limit per policy call; `None` disables the check.
    pub policy_timeout: Option<Duration>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig { max_steps: DEFAULT_MAX_STEPS, seed: 0, rewards: RewardWeights::default(), policy_timeout: None }
    }
}

/// Runs `policy` on `scenario` until termination and returns the full log.
///
/// A policy failure (error, or a call exceeding the configured timeout)
/// aborts the episode; cargo still unresolved at that point is missed.
pub fn run_episode(
    scenario: &ScenarioSpec,
    policy: &mut dyn Policy,
    config: &EpisodeConfig,
) -> Result<EpisodeLog, ScenarioError> {
    let mut state = EpisodeState::new(scenario, config.max_steps)?;
    state.rewards = config.rewards;

    if let Err(e) = policy.reset(&ScenarioMeta::of(scenario, config.max_steps)) {
        state.abort(e.to_string());
    }
    let mut observation = state.observe();
    while !state.done {
        let started = Instant::now();
        let reply = policy.act(&observation);
        let reply = match (reply, config.policy_timeout) {
            (Ok(_), Some(limit)) if started.elapsed() > limit => Err(PolicyError::Timeout(limit)),
            (r, _) => r,
        };
        match reply {
            Ok(actions) => observation = step(&mut state, &actions).observation,
            Err(e) => state.abort(e.to_string()),
        }
    }
    policy.finish();

    Ok(EpisodeLog {
        header: LogHeader {
            format: LOG_FORMAT.to_string(),
            version: LOG_VERSION.to_string(),
            scenario_name: scenario.name.clone(),
            policy: policy.name().to_string(),
            seed: config.seed,
            max_steps: config.max_steps,
        },
        scenario: scenario.clone(),
        records: std::mem::take(&mut state.log.records),
        outcome: EpisodeOutcome {
            end_time: state.time,
            aborted: state.aborted.clone(),
            ledger: state.ledger.clone(),
            total_flight_cost: state.total_flight_cost,
        },
    })
}
