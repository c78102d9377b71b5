#![allow(dead_code)]

use std::path::{Path, PathBuf};

use airlift_core::model::PlaneTypeId;
use airlift_core::scenario::{difficulty_level, FleetEntry, GenParams};

/// Desk-sized static instance: four airports on a 40x30 map, one pickup and
/// one dropoff, every pair within range, no dynamic events.
pub fn oracle_sized(seed: u64, planes: u32, cargo: u32) -> GenParams {
    let mut p = difficulty_level(1, seed);
    p.width = 40;
    p.height = 30;
    p.airports = 4;
    p.pickup_airports = 1;
    p.dropoff_airports = 1;
    p.min_separation = 5.0;
    p.plane_types[0].max_range = 60.0;
    p.plane_types[0].speed = 5.0;
    p.fleet = vec![FleetEntry { plane_type: PlaneTypeId(0), count: planes }];
    p.initial_cargo = cargo;
    p.cargo_rate = 0.0;
    p.malfunction_rate = 0.0;
    p.terrain.land_threshold = 0.3;
    p
}

/// Writes an executable shell script and returns its path.
pub fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Replies to the handshake, then answers every observation with no actions.
pub const ECHO_POLICY: &str = r#"read hello
echo '{"protocol":"airlift-policy","version":"1.0"}'
while read line; do
  case "$line" in
    *'"type":"done"'*) exit 0 ;;
    *) echo '{"actions":{}}' ;;
  esac
done
"#;
