//! Episode scores and suite evaluation with the competition cutoffs.
//!
//! The normalized episode score is a weighted mean of the missed fraction,
//! the late fraction and the flight cost relative to a per-episode bound;
//! it lies in `[0, 1]` and lower is better. A suite's overall score sums
//! the normalized scores of the episodes it ran.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_episode, EpisodeConfig};
use crate::error::ScenarioError;
use crate::log::{EpisodeLog, Ledger};
use crate::model::CargoStatus;
use crate::policies::paths::min_delivery_cost;
use crate::policies::Policy;
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub missed: f64,
    pub late: f64,
    pub cost: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights { missed: 10.0, late: 1.0, cost: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub missed_fraction: f64,
    pub late_fraction: f64,
    pub total_flight_cost: f64,
    pub cost_bound: f64,
    pub normalized: f64,
}

/// The weighted normalized score. A zero bound with nonzero cost counts as
/// the worst cost term.
pub fn normalized_score(weights: &ScoreWeights, missed: f64, late: f64, cost: f64, bound: f64) -> f64 {
    let cost_term = if bound > 0.0 {
        (cost / bound).min(1.0)
    } else if cost > 0.0 {
        1.0
    } else {
        0.0
    };
    let total = weights.missed + weights.late + weights.cost;
    (weights.missed * missed + weights.late * late + weights.cost * cost_term) / total
}

/// Twice the cheapest static flight cost of every cargo in `ledger`.
pub fn cost_bound(scenario: &ScenarioSpec, ledger: &Ledger) -> f64 {
    scenario
        .all_cargo()
        .filter(|c| ledger.contains_key(&c.id))
        .filter_map(|c| min_delivery_cost(&scenario.network, &scenario.plane_types, c.source, c.destination))
        .map(|c| 2.0 * c)
        .sum()
}

/// Scores a finished episode from its ledger: every cargo that spawned
/// during the episode has exactly one entry there.
pub fn score_outcome(
    scenario: &ScenarioSpec,
    ledger: &Ledger,
    total_flight_cost: f64,
    weights: &ScoreWeights,
) -> EpisodeScore {
    let n = ledger.len();
    let count = |s: CargoStatus| ledger.values().filter(|e| e.status == s).count();
    let (missed_fraction, late_fraction) = if n == 0 {
        (0.0, 0.0)
    } else {
        (count(CargoStatus::Missed) as f64 / n as f64, count(CargoStatus::DeliveredLate) as f64 / n as f64)
    };
    let bound = cost_bound(scenario, ledger);
    EpisodeScore {
        missed_fraction,
        late_fraction,
        total_flight_cost,
        cost_bound: bound,
        normalized: normalized_score(weights, missed_fraction, late_fraction, total_flight_cost, bound),
    }
}

pub fn score_episode(log: &EpisodeLog, weights: &ScoreWeights) -> EpisodeScore {
    score_outcome(&log.scenario, &log.outcome.ledger, log.outcome.total_flight_cost, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Completed,
    TimeBudgetExhausted,
    MissedThresholdExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub scenario: String,
    pub score: EpisodeScore,
    pub cargo: usize,
    pub missed: usize,
    pub late: usize,
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub policy: String,
    pub episodes: Vec<EpisodeEntry>,
    /// Sum of normalized episode scores; lower is better.
    pub overall: f64,
    pub status: SuiteStatus,
    pub cumulative_missed: usize,
    pub cumulative_cargo: usize,
    /// Wall-clock seconds; not part of the deterministic result.
    pub elapsed_secs: f64,
}

impl SuiteResult {
    pub fn missed_fraction(&self) -> f64 {
        if self.cumulative_cargo == 0 {
            0.0
        } else {
            self.cumulative_missed as f64 / self.cumulative_cargo as f64
        }
    }

    /// One human-readable leaderboard line.
    pub fn leaderboard_row(&self) -> String {
        format!(
            "{:<20} overall {:>9.4} (lower is better)  episodes {:>3}  missed {:>5.1}%  status {}",
            self.policy,
            self.overall,
            self.episodes.len(),
            100.0 * self.missed_fraction(),
            serde_json::to_value(self.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub episode: EpisodeConfig,
    pub weights: ScoreWeights,
    /// Wall-clock budget for the whole suite; `None` is unlimited.
    pub budget: Option<Duration>,
    /// Halt once cumulative missed / cumulative cargo exceeds this.
    pub missed_threshold: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            episode: EpisodeConfig::default(),
            weights: ScoreWeights::default(),
            budget: Some(Duration::from_secs(4 * 3600)),
            missed_threshold: Some(0.30),
        }
    }
}

fn entry(log: &EpisodeLog, weights: &ScoreWeights) -> EpisodeEntry {
    let ledger = &log.outcome.ledger;
    let count = |s: CargoStatus| ledger.values().filter(|e| e.status == s).count();
    EpisodeEntry {
        scenario: log.header.scenario_name.clone(),
        score: score_episode(log, weights),
        cargo: ledger.len(),
        missed: count(CargoStatus::Missed),
        late: count(CargoStatus::DeliveredLate),
        aborted: log.outcome.aborted.clone(),
    }
}

fn summarize(policy: String, episodes: Vec<EpisodeEntry>, status: SuiteStatus, started: Instant) -> SuiteResult {
    SuiteResult {
        policy,
        overall: episodes.iter().map(|e| e.score.normalized).sum(),
        cumulative_missed: episodes.iter().map(|e| e.missed).sum(),
        cumulative_cargo: episodes.iter().map(|e| e.cargo).sum(),
        episodes,
        status,
        elapsed_secs: started.elapsed().as_secs_f64(),
    }
}

/// Runs `scenarios` in order, halting when the budget runs out or the
/// cumulative missed fraction exceeds the threshold.
pub fn run_suite(
    policy: &mut dyn Policy,
    scenarios: &[ScenarioSpec],
    config: &SuiteConfig,
) -> Result<SuiteResult, ScenarioError> {
    let started = Instant::now();
    let mut episodes = Vec::new();
    let mut status = SuiteStatus::Completed;
    let (mut missed, mut cargo) = (0usize, 0usize);
    for scenario in scenarios {
        if config.budget.is_some_and(|b| started.elapsed() >= b) {
            status = SuiteStatus::TimeBudgetExhausted;
            break;
        }
        let log = run_episode(scenario, policy, &config.episode)?;
        let e = entry(&log, &config.weights);
        missed += e.missed;
        cargo += e.cargo;
        episodes.push(e);
        if config.missed_threshold.is_some_and(|th| cargo > 0 && missed as f64 / cargo as f64 > th) {
            status = SuiteStatus::MissedThresholdExceeded;
            break;
        }
    }
    if status == SuiteStatus::Completed
        && episodes.len() == scenarios.len()
        && config.budget.is_some_and(|b| started.elapsed() > b)
    {
        status = SuiteStatus::TimeBudgetExhausted;
    }
    Ok(summarize(policy.name().to_string(), episodes, status, started))
}

/// Runs every scenario in parallel with no cutoffs; each episode gets a
/// fresh policy from `make`.
pub fn run_suite_parallel<F>(
    make: F,
    scenarios: &[ScenarioSpec],
    config: &SuiteConfig,
) -> Result<SuiteResult, ScenarioError>
where
    F: Fn() -> Box<dyn Policy> + Sync,
{
    let started = Instant::now();
    let name = make().name().to_string();
    let episodes = scenarios
        .par_iter()
        .map(|s| {
            let mut policy = make();
            run_episode(s, policy.as_mut(), &config.episode).map(|log| entry(&log, &config.weights))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(name, episodes, SuiteStatus::Completed, started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_episode_scores_zero() {
        assert_eq!(normalized_score(&ScoreWeights::default(), 0.0, 0.0, 0.0, 10.0), 0.0);
    }

    #[test]
    fn all_missed_is_at_least_ten_twelfths() {
        let w = ScoreWeights::default();
        assert_eq!(normalized_score(&w, 1.0, 0.0, 0.0, 10.0), 10.0 / 12.0);
        assert!(normalized_score(&w, 1.0, 0.0, 7.0, 10.0) >= 10.0 / 12.0);
    }

    #[test]
    fn zero_bound_with_cost_is_worst_cost_term() {
        let w = ScoreWeights::default();
        assert_eq!(normalized_score(&w, 0.0, 0.0, 3.0, 0.0), 1.0 / 12.0);
        assert_eq!(normalized_score(&w, 0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn cost_term_saturates() {
        let w = ScoreWeights::default();
        assert_eq!(normalized_score(&w, 0.0, 0.0, 50.0, 10.0), 1.0 / 12.0);
    }
}
