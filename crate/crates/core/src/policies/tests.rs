use std::collections::BTreeMap;

use super::*;
use crate::engine::{run_episode, step, EpisodeConfig, EpisodeState, DEFAULT_MAX_STEPS};
use crate::error::OracleError;
use crate::log::LogEvent;
use crate::model::{AirNetwork, AirportId, CargoId, CargoStatus, PlaneTypeId, RouteKey, Zone};
use crate::scenario::{ScenarioBuilder, ScenarioSpec};

fn state(s: &ScenarioSpec) -> EpisodeState {
    EpisodeState::new(s, DEFAULT_MAX_STEPS).unwrap()
}

fn delivered_at(log: &crate::log::EpisodeLog, cargo: u32) -> Option<(CargoStatus, Time)> {
    log.outcome.ledger.get(&CargoId(cargo)).map(|e| (e.status, e.time))
}

/// Every simple path over available routes, weighed like the policy does:
/// (flight time + processing - 1, cost) per hop, compared lexicographically.
fn brute_best_path(net: &AirNetwork, t: PlaneTypeId, p: u32, from: AirportId, to: AirportId) -> Option<Vec<AirportId>> {
    fn go(
        net: &AirNetwork,
        t: PlaneTypeId,
        p: u32,
        to: AirportId,
        path: &mut Vec<AirportId>,
        w: (f64, f64),
        best: &mut Option<((f64, f64), Vec<AirportId>)>,
    ) {
        let at = *path.last().unwrap();
        if at == to {
            let better = match best {
                None => true,
                Some((bw, bp)) => w.0 < bw.0 || (w.0 == bw.0 && (w.1 < bw.1 || (w.1 == bw.1 && path < bp))),
            };
            if better {
                *best = Some((w, path.clone()));
            }
            return;
        }
        for r in net.routes.values().filter(|r| r.from == at && r.plane_type == t && r.available) {
            if path.contains(&r.to) {
                continue;
            }
            path.push(r.to);
            go(net, t, p, to, path, (w.0 + f64::from(r.flight_time + p - 1), w.1 + r.flight_cost), best);
            path.pop();
        }
    }
    let mut best = None;
    go(net, t, p, to, &mut vec![from], (0.0, 0.0), &mut best);
    best.map(|(_, path)| path[1..].to_vec())
}

#[test]
fn random_destinations_are_uniform_over_three_neighbors() {
    let s = ScenarioBuilder::new("star")
        .plane_type(1.0, 12.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(10.0, 0.0, Zone::Dropoff, 1)
        .airport(0.0, 10.0, Zone::Neutral, 1)
        .airport(-10.0, 0.0, Zone::Neutral, 1)
        .plane(0, 0)
        .cargo(1.0, 0, 1, 50, 60)
        .build()
        .unwrap();
    let obs = state(&s).observe();
    let plane = &obs.airplanes[&PlaneId(0)];
    let mut policy = RandomPolicy::new(17);
    let mut counts: BTreeMap<AirportId, usize> = BTreeMap::new();
    let n = 10_000;
    for _ in 0..n {
        let d = policy.sample_destination(&obs, plane, AirportId(0)).unwrap();
        *counts.entry(d).or_default() += 1;
    }
    assert_eq!(counts.len(), 3);
    for (a, c) in counts {
        let share = c as f64 / n as f64;
        assert!((share - 1.0 / 3.0).abs() <= 0.02, "{a}: {share}");
    }
}

#[test]
fn random_plane_without_neighbors_gets_no_destination() {
    let s = ScenarioBuilder::new("isolated")
        .plane_type(1.0, 5.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(50.0, 0.0, Zone::Dropoff, 1)
        .plane(0, 0)
        .cargo(1.0, 0, 1, 50, 60)
        .build()
        .unwrap();
    let obs = state(&s).observe();
    let mut policy = RandomPolicy::new(3);
    for _ in 0..20 {
        let a = policy.sample_action(&obs, &obs.airplanes[&PlaneId(0)]).unwrap();
        assert_eq!(a.destination, None);
    }
}

#[test]
fn random_actions_are_never_rejected() {
    for seed in 0..5 {
        let s = crate::scenario::generate_scenario(&crate::scenario::difficulty_level(2, seed)).unwrap();
        let config = EpisodeConfig { max_steps: 800, ..EpisodeConfig::default() };
        let log = run_episode(&s, &mut RandomPolicy::new(seed), &config).unwrap();
        let rejected = log.records.iter().filter(|r| matches!(r.event, LogEvent::Rejected { .. })).count();
        assert_eq!(rejected, 0, "seed {seed}");
    }
}

fn line(processing: u32) -> ScenarioBuilder {
    // P -- M -- D, five units apart, range 6: no direct P-D route.
    ScenarioBuilder::new("line")
        .plane_type(1.0, 6.0, 100.0, processing)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(5.0, 0.0, Zone::Neutral, 1)
        .airport(10.0, 0.0, Zone::Dropoff, 1)
}

#[test]
fn shortest_path_delivery_matches_hand_trace_on_a_line() {
    let (p, ft) = (2, 5);
    let s = line(p).plane(0, 0).cargo(1.0, 0, 2, 100, 200).build().unwrap();
    let log = run_episode(&s, &mut ShortestPathPolicy::default(), &EpisodeConfig::default()).unwrap();
    // Loading ends at p - 1; each hop adds its flight, the landing step and
    // p - 1 more processing steps.
    let expected = (p - 1) + 2 * (ft + p - 1);
    assert_eq!(expected, 13);
    assert_eq!(delivered_at(&log, 0), Some((CargoStatus::DeliveredOntime, expected)));
    assert_eq!(log.outcome.total_flight_cost, 10.0);
}

#[test]
fn shortest_path_detours_around_a_failed_edge() {
    // A-B-D is shortest; A-B fails at t=1 while the plane is still loading.
    let s = ScenarioBuilder::new("detour")
        .plane_type(1.0, 14.0, 100.0, 3)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(10.0, 0.0, Zone::Neutral, 1)
        .airport(8.0, 6.0, Zone::Neutral, 1)
        .airport(20.0, 0.0, Zone::Dropoff, 1)
        .plane(0, 0)
        .cargo(1.0, 0, 3, 100, 200)
        .malfunction(0, 1, 0, 1, 50)
        .build()
        .unwrap();
    let mut st = state(&s);
    let mut policy = ShortestPathPolicy::default();
    let first = policy.act(&st.observe()).unwrap();
    let t = PlaneTypeId(0);
    let before = brute_best_path(&st.network, t, 3, AirportId(0), AirportId(3)).unwrap();
    assert_eq!(first[&PlaneId(0)].destination, Some(before[0]));
    assert_eq!(before[0], AirportId(1));

    step(&mut st, &first);
    assert!(!st.network.route(&RouteKey { from: AirportId(0), to: AirportId(1), plane_type: t }).unwrap().available);
    let second = policy.act(&st.observe()).unwrap();
    let after = brute_best_path(&st.network, t, 3, AirportId(0), AirportId(3)).unwrap();
    assert_ne!(after[0], AirportId(1));
    assert_eq!(second[&PlaneId(0)].destination, Some(after[0]));
}

#[test]
fn shortest_path_with_no_cargo_stays_put() {
    let s = line(1).plane(0, 0).spawn(30, 1.0, 0, 2, 100, 200).build().unwrap();
    let mut st = state(&s);
    let mut policy = ShortestPathPolicy::default();
    for _ in 0..30 {
        assert!(policy.act(&st.observe()).unwrap().is_empty());
        step(&mut st, &BTreeMap::new());
    }
    assert!(!policy.act(&st.observe()).unwrap().is_empty());
}

#[test]
fn oracle_loads_flies_and_unloads_colocated_cargo() {
    let s = ScenarioBuilder::new("adjacent")
        .plane_type(1.0, 10.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(4.0, 0.0, Zone::Dropoff, 1)
        .plane(0, 0)
        .cargo(1.0, 0, 1, 20, 40)
        .build()
        .unwrap();
    let r = oracle_plan(&s, &OracleConfig::default()).unwrap();
    assert_eq!((r.score.missed_fraction, r.score.late_fraction), (0.0, 0.0));
    let route = &r.plan.routes[&PlaneId(0)];
    assert_eq!(route.len(), 2);
    assert_eq!((route[0].airport, route[1].airport), (AirportId(0), AirportId(1)));
    assert!(route[0].load.contains(&CargoId(0)));
    assert!(route[1].unload.contains(&CargoId(0)));
    assert_eq!(r.score.total_flight_cost, 4.0);
}

#[test]
fn oracle_batches_two_cargo_on_one_flight() {
    // By hand: one trip costs 6; carrying the items separately costs 18.
    let s = ScenarioBuilder::new("batch")
        .plane_type(1.0, 10.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(6.0, 0.0, Zone::Dropoff, 1)
        .plane(0, 0)
        .cargo(10.0, 0, 1, 30, 60)
        .cargo(10.0, 0, 1, 30, 60)
        .build()
        .unwrap();
    let r = oracle_plan(&s, &OracleConfig::default()).unwrap();
    assert_eq!(r.score.total_flight_cost, 6.0);
    assert_eq!(r.score.missed_fraction, 0.0);
    let route = &r.plan.routes[&PlaneId(0)];
    assert_eq!(route[0].load.len(), 2);

    let replay = run_episode(&s, &mut OraclePolicy::new(&r), &EpisodeConfig::default()).unwrap();
    assert_eq!(replay.outcome.total_flight_cost, 6.0);
}

#[test]
fn oracle_reports_infeasible_deadline_as_missed() {
    let s = ScenarioBuilder::new("too-late")
        .plane_type(1.0, 20.0, 100.0, 1)
        .airport(0.0, 0.0, Zone::Pickup, 1)
        .airport(15.0, 0.0, Zone::Dropoff, 1)
        .plane(0, 0)
        .cargo(1.0, 0, 1, 3, 5)
        .build()
        .unwrap();
    let r = oracle_plan(&s, &OracleConfig::default()).unwrap();
    assert_eq!(r.score.missed_fraction, 1.0);
    assert!(r.incomplete);
}

#[test]
fn oracle_refuses_large_or_dynamic_instances() {
    let big = line(1).plane(0, 0).plane(0, 0).plane(0, 0).cargo(1.0, 0, 2, 50, 60).build().unwrap();
    assert!(matches!(oracle_plan(&big, &OracleConfig::default()), Err(OracleError::TooLarge { planes: 3, .. })));
    let dynamic = line(1).plane(0, 0).cargo(1.0, 0, 2, 50, 60).malfunction(0, 1, 0, 3, 4).build().unwrap();
    assert!(matches!(oracle_plan(&dynamic, &OracleConfig::default()), Err(OracleError::Dynamic)));
}

#[test]
fn builtin_names_resolve() {
    for name in BUILTIN_POLICIES {
        assert!(builtin_policy(name, 0).is_some(), "{name}");
    }
    assert!(builtin_policy("nope", 0).is_none());
}
