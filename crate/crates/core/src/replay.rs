//! Log validation: rule checks over the recorded events, then a full
//! re-simulation from the recorded actions that must reproduce the log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{step, EpisodeState};
use crate::log::{EpisodeLog, Ledger, LedgerEntry, LogEvent};
use crate::model::{Action, AirportId, CargoId, CargoStatus, PlaneId, PlaneState, Time};
use crate::scoring::{score_episode, EpisodeScore, ScoreWeights};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    /// Index of the offending record, when there is one.
    pub record: Option<usize>,
    pub time: Option<Time>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.rule)?;
        if let Some(t) = self.time {
            write!(f, " t={t}")?;
        }
        if let Some(i) = self.record {
            write!(f, " record {i}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub violations: Vec<Violation>,
    pub score: EpisodeScore,
}

impl ReplayReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Place {
    Ground(AirportId),
    Plane(PlaneId),
    Resolved,
}

struct Checker<'a> {
    log: &'a EpisodeLog,
    out: Vec<Violation>,
    states: BTreeMap<PlaneId, PlaneState>,
    needs_processing: BTreeSet<PlaneId>,
    cargo: BTreeMap<CargoId, Place>,
    manifest: BTreeMap<PlaneId, BTreeSet<CargoId>>,
    ledger: Ledger,
}

impl Checker<'_> {
    fn flag(&mut self, rule: &str, i: usize, time: Time, detail: String) {
        self.out.push(Violation { rule: rule.into(), record: Some(i), time: Some(time), detail });
    }

    fn weight(&self, c: CargoId) -> f64 {
        self.log.scenario.all_cargo().find(|x| x.id == c).map_or(0.0, |x| x.weight)
    }

    fn record(&mut self, i: usize, time: Time, event: &LogEvent) {
        let sc = &self.log.scenario;
        match event {
            LogEvent::Transition { plane, from, to } => {
                if !from.can_transition_to(*to) {
                    self.flag("illegal-transition", i, time, format!("{plane}: {from:?} -> {to:?}"));
                }
                match self.states.get(plane) {
                    Some(s) if s == from => {}
                    Some(s) => {
                        let s = *s;
                        self.flag("state-continuity", i, time, format!("{plane} is {s:?}, record says {from:?}"));
                    }
                    None => self.flag("unknown-plane", i, time, format!("{plane}")),
                }
                self.states.insert(*plane, *to);
                if *to == PlaneState::Processing {
                    self.needs_processing.remove(plane);
                }
            }
            LogEvent::Landed { plane, .. } => {
                self.needs_processing.insert(*plane);
            }
            LogEvent::Takeoff { plane, route, .. } => {
                if self.needs_processing.contains(plane) {
                    self.flag("process-after-landing", i, time, format!("{plane} took off without processing"));
                }
                if sc.network.route(route).is_none() {
                    self.flag("unknown-route", i, time, format!("{route}"));
                }
            }
            LogEvent::Spawned { cargo, airport } => {
                if self.cargo.insert(*cargo, Place::Ground(*airport)).is_some() {
                    self.flag("conservation", i, time, format!("{cargo} spawned twice"));
                }
            }
            LogEvent::Loaded { plane, cargo, airport } => {
                if self.cargo.get(cargo) != Some(&Place::Ground(*airport)) {
                    self.flag(
                        "conservation",
                        i,
                        time,
                        format!("{plane} loaded {cargo}, which is not on the ground at {airport}"),
                    );
                }
                self.cargo.insert(*cargo, Place::Plane(*plane));
                self.manifest.entry(*plane).or_default().insert(*cargo);
                let cap = sc
                    .roster
                    .iter()
                    .find(|p| p.id == *plane)
                    .and_then(|p| sc.plane_types.iter().find(|t| t.id == p.plane_type))
                    .map_or(f64::INFINITY, |t| t.max_capacity);
                let load: f64 = self.manifest[plane].iter().map(|c| self.weight(*c)).sum();
                if load > cap {
                    self.flag("capacity", i, time, format!("{plane} carries {load} > {cap}"));
                }
            }
            LogEvent::Unloaded { plane, cargo, airport } => {
                if !self.manifest.entry(*plane).or_default().remove(cargo) {
                    self.flag("conservation", i, time, format!("{plane} unloaded {cargo}, which it does not carry"));
                }
                self.cargo.insert(*cargo, Place::Ground(*airport));
            }
            LogEvent::Delivered { cargo, plane, airport, status } => {
                let dest = sc.all_cargo().find(|c| c.id == *cargo).map(|c| c.destination);
                if dest != Some(*airport) {
                    self.flag("conservation", i, time, format!("{cargo} delivered at {airport}, not its destination"));
                }
                self.resolve(i, time, *cargo, LedgerEntry { status: *status, time, plane: Some(*plane) });
            }
            LogEvent::Missed { cargo, .. } => {
                let holder = match self.cargo.get(cargo) {
                    Some(Place::Plane(p)) => Some(*p),
                    _ => None,
                };
                if let Some(p) = holder {
                    self.manifest.entry(p).or_default().remove(cargo);
                }
                self.resolve(i, time, *cargo, LedgerEntry { status: CargoStatus::Missed, time, plane: holder });
            }
            _ => {}
        }
    }

    fn resolve(&mut self, i: usize, time: Time, cargo: CargoId, entry: LedgerEntry) {
        match self.cargo.get(&cargo) {
            Some(Place::Resolved) => self.flag("conservation", i, time, format!("{cargo} resolved twice")),
            None => self.flag("conservation", i, time, format!("{cargo} resolved but never present")),
            _ => {}
        }
        self.cargo.insert(cargo, Place::Resolved);
        self.ledger.insert(cargo, entry);
    }
}

fn rule_checks(log: &EpisodeLog) -> Vec<Violation> {
    let mut ck = Checker {
        log,
        out: Vec::new(),
        states: log.scenario.roster.iter().map(|p| (p.id, PlaneState::Waiting)).collect(),
        needs_processing: BTreeSet::new(),
        cargo: log.scenario.initial_cargo.iter().map(|c| (c.id, Place::Ground(c.source))).collect(),
        manifest: BTreeMap::new(),
        ledger: Ledger::new(),
    };
    let mut last = 0;
    for (i, r) in log.records.iter().enumerate() {
        if r.time < last || r.time > log.outcome.end_time {
            ck.flag(
                "time-order",
                i,
                r.time,
                format!("record time {} after {last} (end {})", r.time, log.outcome.end_time),
            );
        }
        last = last.max(r.time);
        ck.record(i, r.time, &r.event);
    }
    let mine: BTreeMap<CargoId, CargoStatus> = ck.ledger.iter().map(|(k, v)| (*k, v.status)).collect();
    let theirs: BTreeMap<CargoId, CargoStatus> = log.outcome.ledger.iter().map(|(k, v)| (*k, v.status)).collect();
    if mine != theirs {
        ck.out.push(Violation {
            rule: "ledger-mismatch".into(),
            record: None,
            time: None,
            detail: "final ledger differs from the delivered and missed records".into(),
        });
    }
    ck.out
}

/// Re-runs the engine with the recorded actions and compares every record.
fn resimulate(log: &EpisodeLog) -> Vec<Violation> {
    let v = |rule: &str, record: Option<usize>, time: Option<Time>, detail: String| Violation {
        rule: rule.into(),
        record,
        time,
        detail,
    };
    let mut state = match EpisodeState::new(&log.scenario, log.header.max_steps) {
        Ok(s) => s,
        Err(e) => return vec![v("invalid-scenario", None, None, e.to_string())],
    };
    let mut actions: BTreeMap<Time, BTreeMap<PlaneId, Action>> = BTreeMap::new();
    let mut aborts: BTreeMap<Time, String> = BTreeMap::new();
    for r in &log.records {
        match &r.event {
            LogEvent::Action { plane, action } => {
                actions.entry(r.time).or_default().insert(*plane, action.clone());
            }
            LogEvent::UnknownPlane { plane } => {
                actions.entry(r.time).or_default().insert(*plane, Action::default());
            }
            LogEvent::Aborted { reason } => {
                aborts.insert(r.time, reason.clone());
            }
            _ => {}
        }
    }
    let empty = BTreeMap::new();
    while !state.done {
        if let Some(reason) = aborts.get(&state.time) {
            state.abort(reason.clone());
            break;
        }
        let now = state.time;
        step(&mut state, actions.get(&now).unwrap_or(&empty));
    }
    let mut out = Vec::new();
    let ours = &state.log.records;
    if let Some(i) = (0..ours.len().max(log.records.len())).find(|&i| ours.get(i) != log.records.get(i)) {
        let detail = match (log.records.get(i), ours.get(i)) {
            (Some(a), Some(b)) => format!("log has {a:?}, engine produces {b:?}"),
            (Some(a), None) => format!("log has extra record {a:?}"),
            (None, Some(b)) => format!("log is missing {b:?}"),
            (None, None) => unreachable!(),
        };
        out.push(v("replay-mismatch", Some(i), log.records.get(i).or(ours.get(i)).map(|r| r.time), detail));
    }
    let o = &log.outcome;
    if state.time != o.end_time
        || state.ledger != o.ledger
        || state.total_flight_cost != o.total_flight_cost
        || state.aborted != o.aborted
    {
        out.push(v("outcome-mismatch", None, None, "re-simulated outcome differs from the recorded one".into()));
    }
    out
}

/// Validates `log` and scores it.
pub fn replay(log: &EpisodeLog, weights: &ScoreWeights) -> ReplayReport {
    let mut violations = rule_checks(log);
    violations.extend(resimulate(log));
    ReplayReport { violations, score: score_episode(log, weights) }
}
