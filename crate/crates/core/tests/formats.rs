mod common;

use airlift_core::engine::{run_episode, EpisodeConfig};
use airlift_core::error::FormatError;
use airlift_core::io::*;
use airlift_core::policies::{RandomPolicy, ShortestPathPolicy};
use airlift_core::scenario::{difficulty_level, generate_scenario};
use airlift_core::scoring::{run_suite, SuiteConfig};

#[test]
fn scenario_round_trips_and_saves_identically() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate_scenario(&difficulty_level(5, 21)).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    save_scenario(&s, &a).unwrap();
    save_scenario(&s, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(load_scenario(&a).unwrap(), s);
}

#[test]
fn truncated_scenario_names_the_failure_point() {
    let text = scenario_to_string(&generate_scenario(&difficulty_level(1, 0)).unwrap());
    let cut = &text[..text.len() / 2];
    match scenario_from_str(cut) {
        Err(FormatError::Syntax { line, .. }) => assert!(line > 1),
        other => panic!("expected a syntax error, got {other:?}"),
    }
}

#[test]
fn schema_errors_carry_the_field_path() {
    let text = scenario_to_string(&generate_scenario(&difficulty_level(1, 0)).unwrap());
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["scenario"]["initial_cargo"][1]["weight"] = serde_json::json!("heavy");
    match scenario_from_str(&doc.to_string()) {
        Err(FormatError::Schema { path, .. }) => assert_eq!(path, "scenario.initial_cargo[1].weight"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn unknown_major_version_is_refused() {
    let text = scenario_to_string(&generate_scenario(&difficulty_level(1, 0)).unwrap());
    let newer = text.replacen("\"version\": \"1.0\"", "\"version\": \"2.0\"", 1);
    assert!(matches!(scenario_from_str(&newer), Err(FormatError::Version { supported: 1, .. })));
    let minor = text.replacen("\"version\": \"1.0\"", "\"version\": \"1.7\"", 1);
    assert!(scenario_from_str(&minor).is_ok());
}

#[test]
fn params_round_trip() {
    let p = difficulty_level(7, 3);
    assert_eq!(params_from_str(&params_to_string(&p)).unwrap(), p);
}

#[test]
fn log_round_trips_and_is_byte_stable() {
    let s = generate_scenario(&difficulty_level(3, 2)).unwrap();
    let config = EpisodeConfig { max_steps: 600, ..EpisodeConfig::default() };
    let a = run_episode(&s, &mut RandomPolicy::new(9), &config).unwrap();
    let b = run_episode(&s, &mut RandomPolicy::new(9), &config).unwrap();
    let text = log_to_string(&a);
    assert_eq!(text, log_to_string(&b));
    assert_eq!(log_from_str(&text).unwrap(), a);
}

#[test]
fn truncated_log_is_reported() {
    let s = generate_scenario(&difficulty_level(1, 2)).unwrap();
    let log = run_episode(&s, &mut ShortestPathPolicy::default(), &EpisodeConfig::default()).unwrap();
    let text = log_to_string(&log);
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..lines.len() - 1].join("\n");
    let err = log_from_str(&cut).unwrap_err();
    assert!(err.to_string().contains("no outcome line"), "{err}");
    let half = &text[..text.len() - 10];
    assert!(matches!(log_from_str(half), Err(FormatError::Syntax { .. })));
}

#[test]
fn results_round_trip() {
    let scenarios: Vec<_> = (0..2).map(|i| generate_scenario(&difficulty_level(1, i)).unwrap()).collect();
    let r = run_suite(&mut ShortestPathPolicy::default(), &scenarios, &SuiteConfig::default()).unwrap();
    let back = results_from_str(&results_to_string(&r)).unwrap();
    assert_eq!(back, r);
}
