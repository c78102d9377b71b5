//! On-disk formats and the external policy protocol.
//!
//! Scenario and results files are pretty-printed JSON documents with a
//! `format` and `version` envelope. Episode logs are JSON lines: a header
//! line (which embeds the scenario), one line per record, and a final
//! outcome line. Serialization is deterministic: every map is ordered.
//!
//! External policies are executables speaking line-delimited JSON on
//! stdin/stdout. The harness opens with
//! `{"type":"hello","protocol":"airlift-policy","version":"1.0","scenario":{...}}`
//! and expects a hello line back with a compatible major version. It then
//! sends `{"type":"observation","observation":{...}}` once per step and
//! reads one `{"actions":{"<plane>":{...}}}` line in reply, and finally
//! sends `{"type":"done"}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::Observation;
use crate::error::{FormatError, PolicyError};
use crate::log::{EpisodeLog, EpisodeOutcome, LogHeader, LogRecord, LOG_FORMAT, LOG_VERSION};
use crate::model::{Action, PlaneId};
use crate::policies::{Policy, ScenarioMeta};
use crate::scenario::{GenParams, ScenarioSpec};
use crate::scoring::SuiteResult;

pub const SCENARIO_FORMAT: &str = "airlift-scenario";
pub const SCENARIO_VERSION: &str = "1.0";
pub const PARAMS_FORMAT: &str = "airlift-params";
pub const PARAMS_VERSION: &str = "1.0";
pub const RESULTS_FORMAT: &str = "airlift-results";
pub const RESULTS_VERSION: &str = "1.0";
pub const PROTOCOL: &str = "airlift-policy";
pub const PROTOCOL_VERSION: &str = "1.0";

fn major(version: &str) -> Option<u32> {
    version.split('.').next()?.parse().ok()
}

fn check_version(kind: &'static str, found: &str, supported: &str) -> Result<(), FormatError> {
    let want = major(supported).expect("constant versions are well formed");
    match major(found) {
        Some(m) if m == want => Ok(()),
        _ => Err(FormatError::Version { kind, found: found.to_string(), supported: want }),
    }
}

fn schema_error(err: serde_path_to_error::Error<serde_json::Error>) -> FormatError {
    let path = err.path().to_string();
    FormatError::Schema { path, message: err.into_inner().to_string() }
}

fn from_value<T: DeserializeOwned>(value: Value) -> Result<T, FormatError> {
    serde_path_to_error::deserialize(value).map_err(schema_error)
}

/// Parses an enveloped document: checks `format` and `version`, then
/// decodes `field`.
fn decode<T: DeserializeOwned>(
    text: &str,
    kind: &'static str,
    format: &str,
    version: &str,
    field: &str,
) -> Result<T, FormatError> {
    let mut doc: Value = serde_json::from_str(text).map_err(FormatError::from_json)?;
    let obj =
        doc.as_object_mut().ok_or(FormatError::Schema { path: ".".into(), message: "expected an object".into() })?;
    if obj.get("format").and_then(Value::as_str) != Some(format) {
        return Err(FormatError::Schema { path: "format".into(), message: format!("expected \"{format}\"") });
    }
    let found = obj.get("version").and_then(Value::as_str).ok_or(FormatError::MissingVersion(kind))?;
    check_version(kind, found, version)?;
    let body = obj
        .remove(field)
        .ok_or_else(|| FormatError::Schema { path: field.to_string(), message: "missing field".into() })?;
    serde_path_to_error::deserialize(body).map_err(|e| {
        let path = format!("{field}.{}", e.path());
        FormatError::Schema { path, message: e.into_inner().to_string() }
    })
}

fn encode<T: Serialize>(format: &str, version: &str, field: &str, body: &T) -> String {
    let doc = json!({ "format": format, "version": version, field: body });
    let mut s = serde_json::to_string_pretty(&doc).expect("model types always serialize");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn scenario_to_string(spec: &ScenarioSpec) -> String {
    encode(SCENARIO_FORMAT, SCENARIO_VERSION, "scenario", spec)
}

pub fn scenario_from_str(text: &str) -> Result<ScenarioSpec, FormatError> {
    decode(text, "scenario", SCENARIO_FORMAT, SCENARIO_VERSION, "scenario")
}

pub fn save_scenario(spec: &ScenarioSpec, path: &Path) -> Result<(), FormatError> {
    write(path, &scenario_to_string(spec))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, FormatError> {
    scenario_from_str(&read(path)?)
}

pub fn params_to_string(params: &GenParams) -> String {
    encode(PARAMS_FORMAT, PARAMS_VERSION, "params", params)
}

pub fn params_from_str(text: &str) -> Result<GenParams, FormatError> {
    decode(text, "params", PARAMS_FORMAT, PARAMS_VERSION, "params")
}

pub fn load_params(path: &Path) -> Result<GenParams, FormatError> {
    params_from_str(&read(path)?)
}

pub fn results_to_string(result: &SuiteResult) -> String {
    encode(RESULTS_FORMAT, RESULTS_VERSION, "result", result)
}

pub fn results_from_str(text: &str) -> Result<SuiteResult, FormatError> {
    decode(text, "results", RESULTS_FORMAT, RESULTS_VERSION, "result")
}

pub fn save_results(result: &SuiteResult, path: &Path) -> Result<(), FormatError> {
    write(path, &results_to_string(result))
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: LogHeader,
    scenario: ScenarioSpec,
}

#[derive(Serialize, Deserialize)]
struct OutcomeLine {
    outcome: EpisodeOutcome,
}

fn line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("log types always serialize");
    s.push('\n');
    s
}

pub fn log_to_string(log: &EpisodeLog) -> String {
    let mut s = line(&HeaderLine { header: log.header.clone(), scenario: log.scenario.clone() });
    for r in &log.records {
        s.push_str(&line(r));
    }
    s.push_str(&line(&OutcomeLine { outcome: log.outcome.clone() }));
    s
}

fn line_value(n: usize, text: &str) -> Result<Value, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Syntax { line: n, column: e.column(), message: e.to_string() })
}

fn at_line<T: DeserializeOwned>(n: usize, v: Value) -> Result<T, FormatError> {
    from_value(v).map_err(|e| match e {
        FormatError::Schema { path, message } => FormatError::Schema { path: format!("line {n}: {path}"), message },
        other => other,
    })
}

pub fn log_from_str(text: &str) -> Result<EpisodeLog, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (n, first) = lines.next().ok_or(FormatError::MissingVersion("episode log"))?;
    let head = line_value(n, first)?;
    let found =
        head.pointer("/header/version").and_then(Value::as_str).ok_or(FormatError::MissingVersion("episode log"))?;
    if head.pointer("/header/format").and_then(Value::as_str) != Some(LOG_FORMAT) {
        return Err(FormatError::Schema {
            path: "line 1: header.format".into(),
            message: format!("expected \"{LOG_FORMAT}\""),
        });
    }
    check_version("episode log", found, LOG_VERSION)?;
    let head: HeaderLine = at_line(n, head)?;
    let mut records = Vec::new();
    let mut outcome = None;
    for (n, l) in lines {
        if outcome.is_some() {
            return Err(FormatError::Schema {
                path: format!("line {n}"),
                message: "content after outcome line".into(),
            });
        }
        let v = line_value(n, l)?;
        if v.get("outcome").is_some() {
            outcome = Some(at_line::<OutcomeLine>(n, v)?.outcome);
        } else {
            records.push(at_line::<LogRecord>(n, v)?);
        }
    }
    let outcome = outcome.ok_or_else(|| FormatError::Schema {
        path: "outcome".into(),
        message: "log is truncated: no outcome line".into(),
    })?;
    Ok(EpisodeLog { header: head.header, scenario: head.scenario, records, outcome })
}

pub fn save_log(log: &EpisodeLog, path: &Path) -> Result<(), FormatError> {
    write(path, &log_to_string(log))
}

pub fn load_log(path: &Path) -> Result<EpisodeLog, FormatError> {
    log_from_str(&read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Reply {
    #[serde(default)]
    actions: BTreeMap<PlaneId, Action>,
}

/// A policy running as a child process.
pub struct ExternalPolicy {
    program: PathBuf,
    args: Vec<String>,
    name: String,
    timeout: Option<Duration>,
    child: Option<Child>,
    stdin: Option<ChildStdin>,
    lines: Option<Receiver<String>>,
}

impl ExternalPolicy {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>, timeout: Option<Duration>) -> Self {
        let program = program.into();
        let name = program.file_name().map_or_else(|| "external".to_string(), |n| n.to_string_lossy().into_owned());
        ExternalPolicy { program, args, name, timeout, child: None, stdin: None, lines: None }
    }

    fn send(&mut self, v: &Value) -> Result<(), PolicyError> {
        let stdin = self.stdin.as_mut().ok_or_else(|| PolicyError::Failed("policy process not running".into()))?;
        let mut s = v.to_string();
        s.push('\n');
        stdin
            .write_all(s.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| PolicyError::Failed(format!("writing to policy: {e}")))
    }

    fn receive(&mut self) -> Result<String, PolicyError> {
        let rx = self.lines.as_ref().ok_or_else(|| PolicyError::Failed("policy process not running".into()))?;
        let got = match self.timeout {
            Some(t) => rx.recv_timeout(t).map_err(|e| match e {
                RecvTimeoutError::Timeout => PolicyError::Timeout(t),
                RecvTimeoutError::Disconnected => PolicyError::Failed("policy closed its output".into()),
            }),
            None => rx.recv().map_err(|_| PolicyError::Failed("policy closed its output".into())),
        };
        if got.is_err() {
            self.stop();
        }
        got
    }

    fn stop(&mut self) {
        self.stdin = None;
        self.lines = None;
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        self.stop();
    }
}

impl Policy for ExternalPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, meta: &ScenarioMeta) -> Result<(), PolicyError> {
        self.stop();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PolicyError::Failed(format!("starting {}: {e}", self.program.display())))?;
        let stdout = child.stdout.take().expect("piped");
        self.stdin = child.stdin.take();
        self.child = Some(child);
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.lines = Some(rx);

        self.send(&json!({ "type": "hello", "protocol": PROTOCOL, "version": PROTOCOL_VERSION, "scenario": meta }))?;
        let reply: Value = serde_json::from_str(&self.receive()?)
            .map_err(|e| PolicyError::Handshake(format!("unparseable hello: {e}")))?;
        if reply.get("protocol").and_then(Value::as_str) != Some(PROTOCOL) {
            self.stop();
            return Err(PolicyError::Handshake(format!("expected protocol \"{PROTOCOL}\"")));
        }
        let version = reply.get("version").and_then(Value::as_str).unwrap_or("");
        if major(version) != major(PROTOCOL_VERSION) {
            self.stop();
            return Err(PolicyError::Handshake(format!(
                "policy speaks version \"{version}\", harness {PROTOCOL_VERSION}"
            )));
        }
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<BTreeMap<PlaneId, Action>, PolicyError> {
        self.send(&json!({ "type": "observation", "observation": obs }))?;
        let line = self.receive()?;
        let reply: Reply = serde_json::from_str(&line).map_err(|e| PolicyError::Malformed(e.to_string()))?;
        Ok(reply.actions)
    }

    fn finish(&mut self) {
        let _ = self.send(&json!({ "type": "done" }));
        self.stop();
    }
}
