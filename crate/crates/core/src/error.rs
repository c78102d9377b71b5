use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("terrain has no land cells")]
    NoLand,
    #[error(
        "could not place {zone} airport {placed}/{requested} with min separation {separation} after {retries} retries"
    )]
    PlacementInfeasible { zone: String, placed: u32, requested: u32, separation: f64, retries: u32 },
    #[error("{zone} zone has no land in its map band")]
    EmptyZoneBand { zone: String },
    #[error("need at least 2 airports to build routes, got {0}")]
    TooFewAirports(usize),
    #[error("no reachable pickup/dropoff pair found after {0} retries")]
    NoReachablePair(u32),
    #[error("pickup or dropoff zone is empty")]
    EmptyZone,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot access {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported {kind} version {found} (supported major version {supported})")]
    Version { kind: &'static str, found: String, supported: u32 },
    #[error("missing or malformed version field for {0}")]
    MissingVersion(&'static str),
}

impl FormatError {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        FormatError::Syntax { line: err.line(), column: err.column(), message: err.to_string() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("policy failed: {0}")]
    Failed(String),
    #[error("policy reply timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("malformed policy reply: {0}")]
    Malformed(String),
    #[error("protocol handshake refused: {0}")]
    Handshake(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("package {package}: open time {open} must be < close time {close}")]
    EmptyWindow { package: String, open: i64, close: i64 },
    #[error("package {0}: goal location equals its initial location")]
    GoalAtOrigin(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("no unresolved cargo at time {0}")]
    NoCargo(u32),
    #[error("no vehicles in scenario")]
    NoVehicles,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(
        "instance too large for exhaustive search: {planes} planes (max {max_planes}), {cargo} cargo (max {max_cargo})"
    )]
    TooLarge { planes: usize, cargo: usize, max_planes: usize, max_cargo: usize },
    #[error("exhaustive search needs a static instance without scheduled events")]
    Dynamic,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
