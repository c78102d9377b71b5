//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness: `cargo test --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use airlift_core::engine::{run_episode, step, EpisodeConfig, EpisodeState, DEFAULT_MAX_STEPS};
use airlift_core::events::{sample_cargo_spawns, sample_malfunction_onsets};
use airlift_core::io::{load_scenario, log_to_string, save_scenario};
use airlift_core::log::{LedgerEntry, LogEvent, LogRecord};
use airlift_core::model::{AirportId, CargoId, CargoStatus, PlaneId, PlaneState, RouteKey, Zone};
use airlift_core::pddl::{
    emit_domain, emit_problem, parse_domain, parse_problem, tokens, DomainVariant, Package, PddlProblem, Vehicle,
};
use airlift_core::policies::{oracle_plan, IdlePolicy, OracleConfig, Policy, RandomPolicy, ShortestPathPolicy};
use airlift_core::rng;
use airlift_core::scenario::{difficulty_level, generate_scenario, ScenarioBuilder, ScenarioSpec};
use airlift_core::scoring::{
    normalized_score, run_suite, score_episode, score_outcome, ScoreWeights, SuiteConfig, SuiteStatus,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- episode cap

fn episode_cap() -> Outcome {
    // Airport 2 is out of range of everything: its cargo can never move.
    let s = ScenarioBuilder::new("stranded")
        .plane_type(1.0, 12.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(10.0, 0.0, Zone::Dropoff, 1)
        .airport(100.0, 0.0, Zone::Pickup, 1)
        .plane(0, 0)
        .cargo(1.0, 2, 1, 9_000, 10_000)
        .build()
        .unwrap();
    let log = run_episode(&s, &mut ShortestPathPolicy::default(), &EpisodeConfig::default()).unwrap();
    let entry = log.outcome.ledger.get(&CargoId(0)).copied();
    let pass = log.outcome.end_time == 5000 && entry.is_some_and(|e| e.status == CargoStatus::Missed);
    ok(pass, format!("end_time {} (want 5000), cargo {:?}", log.outcome.end_time, entry.map(|e| e.status)))
}

// ---------------------------------------------------------------- cutoff rule

fn cutoff_rule() -> Outcome {
    let suite: Vec<ScenarioSpec> =
        (0..10).map(|i| generate_scenario(&difficulty_level(i % 8 + 1, 100 + u64::from(i))).unwrap()).collect();
    let r = run_suite(&mut IdlePolicy, &suite, &SuiteConfig::default()).unwrap();
    // Recompute where the halt must happen from the per-episode counts.
    let (mut missed, mut cargo) = (0usize, 0usize);
    let mut expected_len = suite.len();
    for (i, e) in r.episodes.iter().enumerate() {
        missed += e.missed;
        cargo += e.cargo;
        if cargo > 0 && missed as f64 / cargo as f64 > 0.30 {
            expected_len = i + 1;
            break;
        }
    }
    let pass = r.status == SuiteStatus::MissedThresholdExceeded
        && r.episodes.len() == expected_len
        && r.missed_fraction() > 0.30;
    ok(
        pass,
        format!(
            "status {:?} after {} of 10 episodes, missed fraction {:.3}",
            r.status,
            r.episodes.len(),
            r.missed_fraction()
        ),
    )
}

// ---------------------------------------------------------- state machine

/// Independent reading of an event log: airplane state edges, manifest
/// weight, processing slots, cargo conservation and the landing rule.
fn scan(s: &ScenarioSpec, records: &[LogRecord]) -> Vec<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Where {
        Ground(AirportId),
        Plane(PlaneId),
        Done,
    }
    let legal = |a: PlaneState, b: PlaneState| {
        use PlaneState::*;
        matches!(
            (a, b),
            (Waiting, Processing) | (Processing, ReadyForTakeoff) | (ReadyForTakeoff, Moving) | (Moving, Waiting)
        )
    };
    let weight: BTreeMap<CargoId, f64> = s.all_cargo().map(|c| (c.id, c.weight)).collect();
    let capacity: BTreeMap<PlaneId, f64> = s
        .roster
        .iter()
        .map(|p| (p.id, s.plane_types.iter().find(|t| t.id == p.plane_type).unwrap().max_capacity))
        .collect();
    let mut state: BTreeMap<PlaneId, PlaneState> = s.roster.iter().map(|p| (p.id, PlaneState::Waiting)).collect();
    let mut at: BTreeMap<PlaneId, Option<AirportId>> = s.roster.iter().map(|p| (p.id, Some(p.start))).collect();
    let mut load: BTreeMap<PlaneId, f64> = s.roster.iter().map(|p| (p.id, 0.0)).collect();
    let mut cargo: BTreeMap<CargoId, Where> = s.initial_cargo.iter().map(|c| (c.id, Where::Ground(c.source))).collect();
    let mut owes_processing: BTreeSet<PlaneId> = BTreeSet::new();
    let mut bad = Vec::new();

    let mut i = 0;
    while i < records.len() {
        let t = records[i].time;
        while i < records.len() && records[i].time == t {
            match records[i].event {
                LogEvent::Transition { plane, from, to } => {
                    if state[&plane] != from || !legal(from, to) {
                        bad.push(format!(
                            "t{t}: illegal transition {plane} {:?}->{to:?} from {:?}",
                            from, state[&plane]
                        ));
                    }
                    if to == PlaneState::Processing {
                        owes_processing.remove(&plane);
                    }
                    state.insert(plane, to);
                }
                LogEvent::Landed { plane, airport } => {
                    at.insert(plane, Some(airport));
                    owes_processing.insert(plane);
                }
                LogEvent::Takeoff { plane, route, .. } => {
                    if owes_processing.contains(&plane) {
                        bad.push(format!("t{t}: {plane} took off without processing"));
                    }
                    if at[&plane] != Some(route.from) {
                        bad.push(format!("t{t}: {plane} took off from the wrong airport"));
                    }
                    at.insert(plane, None);
                }
                LogEvent::Spawned { cargo: c, airport } => {
                    if cargo.insert(c, Where::Ground(airport)).is_some() {
                        bad.push(format!("t{t}: {c} spawned twice"));
                    }
                }
                LogEvent::Loaded { plane, cargo: c, airport } => {
                    if cargo.get(&c) != Some(&Where::Ground(airport)) || at[&plane] != Some(airport) {
                        bad.push(format!("t{t}: conservation: {c} loaded from where it was not"));
                    }
                    cargo.insert(c, Where::Plane(plane));
                    *load.get_mut(&plane).unwrap() += weight[&c];
                    if load[&plane] > capacity[&plane] + 1e-9 {
                        bad.push(format!("t{t}: capacity: {plane} carries {}", load[&plane]));
                    }
                }
                LogEvent::Unloaded { plane, cargo: c, airport } => {
                    if cargo.get(&c) != Some(&Where::Plane(plane)) {
                        bad.push(format!("t{t}: conservation: {c} unloaded but not aboard {plane}"));
                    }
                    cargo.insert(c, Where::Ground(airport));
                    *load.get_mut(&plane).unwrap() -= weight[&c];
                }
                LogEvent::Delivered { cargo: c, airport, .. } => {
                    if cargo.get(&c) != Some(&Where::Ground(airport)) {
                        bad.push(format!("t{t}: conservation: {c} delivered from nowhere"));
                    }
                    cargo.insert(c, Where::Done);
                }
                LogEvent::Missed { cargo: c, .. } => {
                    match cargo.get(&c) {
                        Some(Where::Plane(p)) => *load.get_mut(p).unwrap() -= weight[&c],
                        Some(Where::Ground(_)) => {}
                        _ => bad.push(format!("t{t}: conservation: {c} resolved twice or never spawned")),
                    }
                    cargo.insert(c, Where::Done);
                }
                _ => {}
            }
            i += 1;
        }
        // Processing slots at the end of each step.
        let mut busy: BTreeMap<AirportId, u32> = BTreeMap::new();
        for (p, st) in &state {
            if *st == PlaneState::Processing {
                *busy.entry(at[p].expect("processing planes are landed")).or_default() += 1;
            }
        }
        for (a, n) in busy {
            if n > s.network.airports[&a].working_capacity {
                bad.push(format!("t{t}: capacity: {n} planes processing at {a}"));
            }
        }
    }
    for (c, w) in &cargo {
        if *w != Where::Done {
            bad.push(format!("conservation: {c} unresolved at the end"));
        }
    }
    bad
}

fn state_machine() -> Outcome {
    let mut problems = Vec::new();
    let mut landings = 0usize;
    for i in 0..20u32 {
        let s = generate_scenario(&difficulty_level(i % 8 + 1, 500 + u64::from(i))).unwrap();
        let mut st = EpisodeState::new(&s, DEFAULT_MAX_STEPS).unwrap();
        let mut policy = RandomPolicy::new(u64::from(i));
        while !st.done {
            let actions = policy.act(&st.observe()).unwrap();
            step(&mut st, &actions);
            for v in st.check_invariants() {
                problems.push(format!("episode {i} t{}: {v}", st.time));
            }
        }
        landings += st.log.records.iter().filter(|r| matches!(r.event, LogEvent::Landed { .. })).count();
        problems.extend(scan(&s, &st.log.records).into_iter().map(|v| format!("episode {i}: {v}")));
    }
    let pass = problems.is_empty() && landings > 0;
    ok(
        pass,
        format!(
            "20 episodes, {landings} landings, {} violations{}",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

// -------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let params = difficulty_level(6, 77);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    save_scenario(&generate_scenario(&params).unwrap(), &a).unwrap();
    save_scenario(&generate_scenario(&params).unwrap(), &b).unwrap();
    let scenarios_equal = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    let mut logs_equal = true;
    for name in ["random", "shortest-path"] {
        let run = || {
            let s = load_scenario(&a).unwrap();
            let mut policy = airlift_core::policies::builtin_policy(name, 5).unwrap();
            let config = EpisodeConfig { seed: 5, ..EpisodeConfig::default() };
            log_to_string(&run_episode(&s, policy.as_mut(), &config).unwrap())
        };
        logs_equal &= run() == run();
    }
    ok(scenarios_equal && logs_equal, format!("scenario bytes equal: {scenarios_equal}, log bytes equal: {logs_equal}"))
}

// ------------------------------------------------------ oracle equivalence

fn oracle_equivalence() -> Outcome {
    let w = ScoreWeights::default();
    let sp_score = |s: &ScenarioSpec| {
        let log = run_episode(s, &mut ShortestPathPolicy::default(), &EpisodeConfig::default()).unwrap();
        score_episode(&log, &w).normalized
    };
    let mut lines = Vec::new();
    let mut pass = true;
    let mut equal = 0;
    for seed in 0..10 {
        let s = generate_scenario(&common::oracle_sized(seed, 1, 1)).unwrap();
        let r = oracle_plan(&s, &OracleConfig::default()).unwrap();
        let sp = sp_score(&s);
        if sp == r.score.normalized {
            equal += 1;
        } else {
            pass = false;
            lines.push(format!("1 cargo seed {seed}: sp {sp} oracle {}", r.score.normalized));
        }
    }
    let mut dominated = 0;
    let mut exhausted = 0;
    for seed in 0..5 {
        let s = generate_scenario(&common::oracle_sized(seed, 1, 2)).unwrap();
        let r = oracle_plan(&s, &OracleConfig::default()).unwrap();
        exhausted += usize::from(r.exhausted);
        let sp = sp_score(&s);
        if sp >= r.score.normalized {
            dominated += 1;
        } else {
            pass = false;
            lines.push(format!("2 cargo seed {seed}: sp {sp} < oracle {}", r.score.normalized));
        }
    }
    let mut detail =
        format!("1 cargo: {equal}/10 equal; 2 cargo: {dominated}/5 sp >= oracle ({exhausted} searches cut short)");
    for l in lines {
        detail.push_str("; ");
        detail.push_str(&l);
    }
    ok(pass, detail)
}

// ---------------------------------------------------- statistical generators

fn statistics() -> Outcome {
    const HORIZON: u32 = 100_000;
    let params = difficulty_level(8, 2024);
    let s = generate_scenario(&params).unwrap();
    let routes: Vec<RouteKey> = s.network.routes.keys().copied().collect();
    let onsets = sample_malfunction_onsets(
        0.01,
        HORIZON,
        &routes,
        params.malfunction_duration,
        &mut rng::stream(0, rng::MALFUNCTIONS),
    )
    .len();
    let spawns =
        sample_cargo_spawns(0.005, HORIZON, &params, &s.network, &s.plane_types, 0, &mut rng::stream(0, rng::SPAWNS))
            .unwrap()
            .len();
    let within = |n: usize, mean: f64| (n as f64 - mean).abs() <= 0.05 * mean;
    let pass = within(onsets, 1000.0) && within(spawns, 500.0);
    ok(pass, format!("onsets {onsets} (1000 +/- 5%), spawns {spawns} (500 +/- 5%)"))
}

// ------------------------------------------------------------------ scoring

fn scoring() -> Outcome {
    // Four cargo from A to B, ten apart at unit cost: the bound is 4 * 2 * 10.
    let mut b = ScenarioBuilder::new("worked")
        .plane_type(1.0, 20.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(10.0, 0.0, Zone::Dropoff, 1)
        .plane(0, 0);
    for _ in 0..4 {
        b = b.cargo(1.0, 0, 1, 20, 40);
    }
    let s = b.build().unwrap();
    let entry = |status| LedgerEntry { status, time: 10, plane: Some(PlaneId(0)) };
    let ledger = BTreeMap::from([
        (CargoId(0), entry(CargoStatus::Missed)),
        (CargoId(1), entry(CargoStatus::DeliveredLate)),
        (CargoId(2), entry(CargoStatus::DeliveredOntime)),
        (CargoId(3), entry(CargoStatus::DeliveredOntime)),
    ]);
    let w = ScoreWeights::default();
    let got = score_outcome(&s, &ledger, 40.0, &w);
    let worked = got.normalized == 3.25 / 12.0 && got.cost_bound == 80.0;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut violations = 0;
    for _ in 0..1000 {
        let (m, l, c, bound) = (
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..200.0),
            rng.random_range(0.0..100.0),
        );
        let base = normalized_score(&w, m, l, c, bound);
        let bump: f64 = rng.random_range(0.0..1.0);
        let worse = [
            normalized_score(&w, (m + bump).min(1.0), l, c, bound),
            normalized_score(&w, m, (l + bump).min(1.0), c, bound),
            normalized_score(&w, m, l, c + 100.0 * bump, bound),
        ];
        violations += worse.iter().filter(|&&x| x < base).count();
    }
    ok(
        worked && violations == 0,
        format!(
            "worked example {} (want 3.25/12 = {}), {violations} monotonicity violations in 1000 triples",
            got.normalized,
            3.25 / 12.0
        ),
    )
}

// --------------------------------------------------------------------- pddl

fn pddl() -> Outcome {
    let domain = parse_domain(&emit_domain(DomainVariant::Verbatim)).unwrap();
    let durations: BTreeMap<String, i64> =
        domain.actions.iter().map(|a| (a.name.to_ascii_uppercase(), a.duration)).collect();
    let want = BTreeMap::from([("LOAD".to_string(), 1), ("MOVE".to_string(), 2), ("UNLOAD".to_string(), 1)]);
    let domain_ok = durations == want
        && tokens(&emit_domain(DomainVariant::Verbatim)) == tokens(include_str!("data/pdptw_domain.pddl"));

    let loc = |n: u32| format!("loc{n}");
    let pkg = |n: u32, at: u32, open, close, goal: u32| Package {
        name: format!("pkg{n}"),
        at: loc(at),
        open,
        close,
        goal: loc(goal),
    };
    let example = PddlProblem {
        name: "PDPTW-3-3-2".into(),
        vehicles: (1..=2).map(|i| Vehicle { name: format!("veh{i}"), at: loc(1) }).collect(),
        places: (1..=3).map(loc).collect(),
        packages: vec![pkg(1, 1, 10, 15, 2), pkg(2, 2, 1, 10, 3), pkg(3, 3, 2, 7, 1)],
    };
    let problem_ok = tokens(&emit_problem(&example).unwrap()) == tokens(include_str!("data/pdptw_problem.pddl"));

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut round_trips = 0;
    for k in 0..100 {
        let places = rng.random_range(2..8u32);
        let p = PddlProblem {
            name: format!("random-{k}"),
            vehicles: (1..=rng.random_range(1..4))
                .map(|i| Vehicle { name: format!("veh{i}"), at: loc(rng.random_range(1..=places)) })
                .collect(),
            places: (1..=places).map(loc).collect(),
            packages: (1..=rng.random_range(1..6))
                .map(|i| {
                    let at = rng.random_range(1..=places);
                    let goal = (at + rng.random_range(0..places - 1)) % places + 1;
                    let open = rng.random_range(0..100);
                    pkg(i, at, open, open + rng.random_range(1..50), goal)
                })
                .collect(),
        };
        if parse_problem(&emit_problem(&p).unwrap()).ok().as_ref() == Some(&p) {
            round_trips += 1;
        }
    }
    ok(
        domain_ok && problem_ok && round_trips == 100,
        format!(
            "domain durations {durations:?}, example problem tokens equal: {problem_ok}, round trips {round_trips}/100"
        ),
    )
}

type Check = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let checks: [Check; 8] = [
        ("episode cap", Duration::from_secs(10), episode_cap),
        ("cutoff rule", Duration::from_secs(60), cutoff_rule),
        ("state-machine suite", Duration::from_secs(300), state_machine),
        ("determinism", Duration::from_secs(60), determinism),
        ("oracle equivalence", Duration::from_secs(120), oracle_equivalence),
        ("statistical generators", Duration::from_secs(60), statistics),
        ("scoring", Duration::from_secs(10), scoring),
        ("pddl", Duration::from_secs(10), pddl),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let started = Instant::now();
        let outcome = check();
        let took = started.elapsed();
        let pass = outcome.pass && took <= limit;
        failed += usize::from(!pass);
        println!(
            "{} {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
