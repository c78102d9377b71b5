//! Temporal PDDL export of the pickup-and-delivery core.
//!
//! The domain has three durative actions (LOAD and UNLOAD of duration 1,
//! MOVE of duration 2) over a fully connected graph with no capacities and
//! a single vehicle type. Package availability windows are timed initial
//! literals. Problems are written in a fixed layout and parse back to the
//! same [`PddlProblem`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::PddlError;
use crate::model::Time;
use crate::scenario::ScenarioSpec;

/// The MOVE action as published has `(at end (objat ?vehicle ?loc-to))` as
/// a condition, which restates its own effect; `Corrected` drops it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainVariant {
    #[default]
    Verbatim,
    Corrected,
}

const DOMAIN_HEAD: &str = "(define (domain PDPTW)
  (:requirements :strips :typing :durative-actions :timed-initial-literals)
  (:types package
    vehicle - physobj
    place
    physobj - object)
  (:predicates
    (objat ?obj - physobj ?loc - place)
    (in ?pkg - package ?veh - vehicle)
    (available ?pkg - package))

  (:durative-action LOAD
    :parameters (?pkg - package ?vehicle - vehicle ?loc - place)
    :duration (= ?duration 1)
    :condition (and (at start (objat ?pkg ?loc))
      (over all (and (objat ?vehicle ?loc)
        (available ?pkg))))
    :effect (and (at start (not (objat ?pkg ?loc)))
      (at end (in ?pkg ?vehicle))))

  (:durative-action UNLOAD
    :parameters (?pkg - package ?vehicle - vehicle ?loc - place)
    :duration (= ?duration 1)
    :condition (and (at start (in ?pkg ?vehicle))
      (over all (and (objat ?vehicle ?loc)
        (available ?pkg))))
    :effect (and (at start (not (in ?pkg ?vehicle)))
      (at end (objat ?pkg ?loc))))

  (:durative-action MOVE
    :parameters (?vehicle - vehicle ?loc-from - place ?loc-to - place)
    :duration (= ?duration 2)
";

const MOVE_VERBATIM: &str = "    :condition (and (at start (objat ?vehicle ?loc-from))
      (at end (objat ?vehicle ?loc-to)))
";

const MOVE_CORRECTED: &str = "    :condition (at start (objat ?vehicle ?loc-from))
";

const DOMAIN_TAIL: &str = "    :effect (and (at start (not (objat ?vehicle ?loc-from)))
      (at end (objat ?vehicle ?loc-to))))
)
";

pub fn emit_domain(variant: DomainVariant) -> String {
    let cond = match variant {
        DomainVariant::Verbatim => MOVE_VERBATIM,
        DomainVariant::Corrected => MOVE_CORRECTED,
    };
    format!("{DOMAIN_HEAD}{cond}{DOMAIN_TAIL}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vehicle {
    pub name: String,
    pub at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Package {
    pub name: String,
    pub at: String,
    pub open: i64,
    pub close: i64,
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PddlProblem {
    pub name: String,
    pub vehicles: Vec<Vehicle>,
    pub places: Vec<String>,
    pub packages: Vec<Package>,
}

impl PddlProblem {
    pub fn validate(&self) -> Result<(), PddlError> {
        let places: BTreeSet<&str> = self.places.iter().map(String::as_str).collect();
        let known = |name: &str| {
            if places.contains(name) {
                Ok(())
            } else {
                Err(PddlError::UnknownObject(name.to_string()))
            }
        };
        for v in &self.vehicles {
            known(&v.at)?;
        }
        for p in &self.packages {
            known(&p.at)?;
            known(&p.goal)?;
            if p.open >= p.close {
                return Err(PddlError::EmptyWindow { package: p.name.clone(), open: p.open, close: p.close });
            }
            if p.goal == p.at {
                return Err(PddlError::GoalAtOrigin(p.name.clone()));
            }
        }
        Ok(())
    }
}

pub fn emit_problem(p: &PddlProblem) -> Result<String, PddlError> {
    p.validate()?;
    let names = |it: &mut dyn Iterator<Item = &str>| it.collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {})", p.name);
    s.push_str("  (:domain PDPTW)\n  (:objects\n");
    let _ = writeln!(s, "    {} - vehicle", names(&mut p.vehicles.iter().map(|v| v.name.as_str())));
    let _ = writeln!(s, "    {} - place", names(&mut p.places.iter().map(String::as_str)));
    let _ = writeln!(s, "    {} - package)", names(&mut p.packages.iter().map(|k| k.name.as_str())));
    s.push_str("\n  (:init\n    ; Vehicle locations\n");
    for v in &p.vehicles {
        let _ = writeln!(s, "    (objat {} {})", v.name, v.at);
    }
    s.push_str("    ; Package pickup locations\n");
    for k in &p.packages {
        let _ = writeln!(s, "    (objat {} {})", k.name, k.at);
    }
    s.push_str("    ; Package times available for pickup\n");
    for k in &p.packages {
        let _ = writeln!(s, "    (at {} (available {}))", k.open, k.name);
    }
    s.push_str("    ; Package delivery deadlines\n");
    for k in &p.packages {
        let _ = writeln!(s, "    (at {} (not (available {})))", k.close, k.name);
    }
    s.push_str("  )\n\n  ; Package delivery locations\n");
    for (i, k) in p.packages.iter().enumerate() {
        let lead = if i == 0 { "  (:goal (and " } else { "              " };
        let _ = writeln!(s, "{lead}(objat {} {})", k.name, k.goal);
    }
    s.push_str("            )\n  )\n)\n");
    Ok(s)
}

/// Problem for the cargo still open at `at_time`, with vehicles at their
/// starting airports and windows shifted so `at_time` is 0.
///
/// Places are `loc<n>` for airport `n - 1`, vehicles `veh<n>` for plane
/// `n - 1` and packages `pkg<n>` for cargo `n - 1`.
pub fn snapshot_to_problem(scenario: &ScenarioSpec, at_time: Time) -> Result<PddlProblem, PddlError> {
    if scenario.roster.is_empty() {
        return Err(PddlError::NoVehicles);
    }
    let loc = |id: crate::model::AirportId| format!("loc{}", id.0 + 1);
    let mut cargo: Vec<_> = scenario.all_cargo().filter(|c| c.hard_deadline > at_time).collect();
    if cargo.is_empty() {
        return Err(PddlError::NoCargo(at_time));
    }
    cargo.sort_by_key(|c| c.id);
    let now = i64::from(at_time);
    let packages: Vec<Package> = cargo
        .iter()
        .map(|c| Package {
            name: format!("pkg{}", c.id.0 + 1),
            at: loc(c.source),
            open: (i64::from(c.spawn_time) - now).max(0),
            close: i64::from(c.hard_deadline) - now,
            goal: loc(c.destination),
        })
        .collect();
    let problem = PddlProblem {
        name: format!("PDPTW-{}-{}-{}", scenario.network.airports.len(), packages.len(), scenario.roster.len()),
        vehicles: scenario
            .roster
            .iter()
            .map(|p| Vehicle { name: format!("veh{}", p.id.0 + 1), at: loc(p.start) })
            .collect(),
        places: scenario.network.airports.keys().map(|a| loc(*a)).collect(),
        packages,
    };
    problem.validate()?;
    Ok(problem)
}

/// A parsed s-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }

    /// The list's head atom, lowercased.
    fn head(&self) -> Option<String> {
        self.list()?.first()?.atom().map(str::to_ascii_lowercase)
    }
}

/// Whitespace-separated tokens with comments removed; parentheses are
/// tokens of their own.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split(';').next().unwrap_or("");
        let mut cur = String::new();
        for ch in line.chars() {
            if ch == '(' || ch == ')' || ch.is_whitespace() {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                if !ch.is_whitespace() {
                    out.push(ch.to_string());
                }
            } else {
                cur.push(ch);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, PddlError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for tok in tokens(text) {
        match tok.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().expect("stack never empty");
                let parent = stack.last_mut().ok_or_else(|| PddlError::Parse("unbalanced `)`".into()))?;
                parent.push(Sexp::List(done));
            }
            _ => stack.last_mut().expect("stack never empty").push(Sexp::Atom(tok)),
        }
        if stack.is_empty() {
            return Err(PddlError::Parse("unbalanced `)`".into()));
        }
    }
    if stack.len() != 1 {
        return Err(PddlError::Parse(format!("{} unclosed `(`", stack.len() - 1)));
    }
    Ok(stack.pop().expect("one level left"))
}

fn single_define(text: &str) -> Result<Vec<Sexp>, PddlError> {
    let mut top = parse_sexps(text)?;
    if top.len() != 1 || top[0].head().as_deref() != Some("define") {
        return Err(PddlError::Parse("expected a single (define ...) form".into()));
    }
    match top.pop() {
        Some(Sexp::List(items)) => Ok(items),
        _ => unreachable!("head() matched a list"),
    }
}

/// Splits a typed list `a b - t c - u` into (name, type) pairs.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending = Vec::new();
    let mut it = items.iter();
    while let Some(s) = it.next() {
        let a = s.atom().ok_or_else(|| PddlError::Parse("nested list in typed list".into()))?;
        if a == "-" {
            let ty = it.next().and_then(Sexp::atom).ok_or_else(|| PddlError::Parse("missing type after `-`".into()))?;
            out.extend(pending.drain(..).map(|n: String| (n, ty.to_string())));
        } else {
            pending.push(a.to_string());
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

fn atoms(s: &Sexp) -> Option<Vec<&str>> {
    s.list()?.iter().map(Sexp::atom).collect()
}

fn bad(what: &str, s: &Sexp) -> PddlError {
    PddlError::Parse(format!("unexpected {what}: {s:?}"))
}

pub fn parse_problem(text: &str) -> Result<PddlProblem, PddlError> {
    let items = single_define(text)?;
    let name = items
        .get(1)
        .filter(|s| s.head().as_deref() == Some("problem"))
        .and_then(|s| s.list()?.get(1)?.atom())
        .ok_or_else(|| PddlError::Parse("missing (problem <name>)".into()))?
        .to_string();
    let mut problem = PddlProblem { name, vehicles: Vec::new(), places: Vec::new(), packages: Vec::new() };
    let mut at: Vec<(String, String)> = Vec::new();
    let mut open: Vec<(String, i64)> = Vec::new();
    let mut close: Vec<(String, i64)> = Vec::new();
    let mut goals: Vec<(String, String)> = Vec::new();
    let mut package_names = Vec::new();
    for section in &items[2..] {
        let body = section.list().ok_or_else(|| bad("section", section))?;
        match section.head().as_deref() {
            Some(":domain") => {
                if body.get(1).and_then(Sexp::atom).map(str::to_ascii_uppercase).as_deref() != Some("PDPTW") {
                    return Err(bad("domain", section));
                }
            }
            Some(":objects") => {
                for (n, ty) in typed_list(&body[1..])? {
                    match ty.as_str() {
                        "vehicle" => problem.vehicles.push(Vehicle { name: n, at: String::new() }),
                        "place" => problem.places.push(n),
                        "package" => package_names.push(n),
                        _ => return Err(PddlError::Parse(format!("unknown object type `{ty}`"))),
                    }
                }
            }
            Some(":init") => {
                for fact in &body[1..] {
                    match atoms(fact).as_deref() {
                        Some(["objat", obj, place]) => at.push((obj.to_string(), place.to_string())),
                        _ => {
                            let l = fact.list().ok_or_else(|| bad("fact", fact))?;
                            let (Some("at"), Some(t), Some(lit)) =
                                (l.first().and_then(Sexp::atom), l.get(1).and_then(Sexp::atom), l.get(2))
                            else {
                                return Err(bad("fact", fact));
                            };
                            let t: i64 = t.parse().map_err(|_| bad("time", fact))?;
                            match atoms(lit).as_deref() {
                                Some(["available", p]) => open.push((p.to_string(), t)),
                                _ => match lit.list() {
                                    Some([Sexp::Atom(not), inner]) if not == "not" => match atoms(inner).as_deref() {
                                        Some(["available", p]) => close.push((p.to_string(), t)),
                                        _ => return Err(bad("literal", lit)),
                                    },
                                    _ => return Err(bad("literal", lit)),
                                },
                            }
                        }
                    }
                }
            }
            Some(":goal") => {
                let conj = body.get(1).ok_or_else(|| bad("goal", section))?;
                let parts: Vec<&Sexp> = if conj.head().as_deref() == Some("and") {
                    conj.list().expect("has head")[1..].iter().collect()
                } else {
                    vec![conj]
                };
                for g in parts {
                    match atoms(g).as_deref() {
                        Some(["objat", p, place]) => goals.push((p.to_string(), place.to_string())),
                        _ => return Err(bad("goal", g)),
                    }
                }
            }
            _ => return Err(bad("section", section)),
        }
    }
    let lookup = |list: &[(String, String)], n: &str| list.iter().find(|(k, _)| k == n).map(|(_, v)| v.clone());
    let lookup_t = |list: &[(String, i64)], n: &str| list.iter().find(|(k, _)| k == n).map(|(_, v)| *v);
    for v in &mut problem.vehicles {
        v.at = lookup(&at, &v.name).ok_or_else(|| PddlError::Parse(format!("no location for {}", v.name)))?;
    }
    for n in package_names {
        let missing = |what: &str| PddlError::Parse(format!("no {what} for {n}"));
        problem.packages.push(Package {
            at: lookup(&at, &n).ok_or_else(|| missing("location"))?,
            open: lookup_t(&open, &n).ok_or_else(|| missing("open time"))?,
            close: lookup_t(&close, &n).ok_or_else(|| missing("close time"))?,
            goal: lookup(&goals, &n).ok_or_else(|| missing("goal"))?,
            name: n,
        });
    }
    let known: BTreeSet<&str> = problem
        .vehicles
        .iter()
        .map(|v| v.name.as_str())
        .chain(problem.packages.iter().map(|p| p.name.as_str()))
        .collect();
    for (obj, _) in at.iter().chain(goals.iter()) {
        if !known.contains(obj.as_str()) {
            return Err(PddlError::UnknownObject(obj.clone()));
        }
    }
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurativeAction {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub duration: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSummary {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<(String, String)>,
    pub predicates: Vec<String>,
    pub actions: Vec<DurativeAction>,
}

/// Structural parse of a temporal domain: header sections and, for each
/// durative action, its parameters, fixed duration and the presence of
/// condition and effect.
pub fn parse_domain(text: &str) -> Result<DomainSummary, PddlError> {
    let items = single_define(text)?;
    let name = items
        .get(1)
        .filter(|s| s.head().as_deref() == Some("domain"))
        .and_then(|s| s.list()?.get(1)?.atom())
        .ok_or_else(|| PddlError::Parse("missing (domain <name>)".into()))?
        .to_string();
    let mut d = DomainSummary {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for section in &items[2..] {
        let body = section.list().ok_or_else(|| bad("section", section))?;
        match section.head().as_deref() {
            Some(":requirements") => {
                d.requirements = atoms(section).ok_or_else(|| bad("requirements", section))?[1..]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
            }
            Some(":types") => d.types = typed_list(&body[1..])?,
            Some(":predicates") => {
                for p in &body[1..] {
                    let l = p.list().ok_or_else(|| bad("predicate", p))?;
                    d.predicates.push(l.first().and_then(Sexp::atom).ok_or_else(|| bad("predicate", p))?.to_string());
                    typed_list(&l[1..])?;
                }
            }
            Some(":durative-action") => {
                let name = body.get(1).and_then(Sexp::atom).ok_or_else(|| bad("action", section))?.to_string();
                let mut parameters = None;
                let mut duration = None;
                let (mut cond, mut eff) = (false, false);
                let mut it = body[2..].iter();
                while let Some(k) = it.next() {
                    let v = it.next().ok_or_else(|| bad("action body", section))?;
                    match k.atom() {
                        Some(":parameters") => {
                            parameters = Some(typed_list(v.list().ok_or_else(|| bad("parameters", v))?)?)
                        }
                        Some(":duration") => match atoms(v).as_deref() {
                            Some(["=", "?duration", n]) => duration = n.parse().ok(),
                            _ => return Err(bad("duration", v)),
                        },
                        Some(":condition") => cond = v.list().is_some(),
                        Some(":effect") => eff = v.list().is_some(),
                        _ => return Err(bad("action key", k)),
                    }
                }
                match (parameters, duration, cond, eff) {
                    (Some(parameters), Some(duration), true, true) => {
                        d.actions.push(DurativeAction { name, parameters, duration })
                    }
                    _ => return Err(PddlError::Parse(format!("incomplete durative action {name}"))),
                }
            }
            _ => return Err(bad("section", section)),
        }
    }
    Ok(d)
}
