//! Two-counter machines and their compilation into circular proofs whose
//! bouncing threads replay the machine run.

mod build;
mod sim;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use build::{compile, standalone, Gadget, GadgetProof, Side};
pub use sim::{bold_of, simulate_main_thread, stack_action, stack_of, stack_return, ActionResult, ExitTrace, Simulation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Counter {
    One,
    Two,
}

impl Counter {
    fn parse(s: &str) -> Option<Counter> {
        match s {
            "1" => Some(Counter::One),
            "2" => Some(Counter::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Counter::One => "1",
            Counter::Two => "2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Inc(Counter, String),
    Dec(Counter, String),
    /// Zero branch first, positive branch second.
    Test(Counter, String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Machine {
    /// Declaration order, final state last.
    pub states: Vec<String>,
    pub initial: String,
    pub final_state: String,
    pub delta: BTreeMap<String, Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct MachineError {
    pub line: usize,
    pub message: String,
}

fn valid_state(s: &str) -> bool {
    !s.is_empty() && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse the line format
/// `state q: inc 1 -> p`, `state q: dec 2 -> p`, `state q: test 1 ? z : p`
/// and `final f`. The first declared state is initial.
pub fn parse_machine(src: &str) -> Result<Machine, MachineError> {
    let mut states = Vec::new();
    let mut delta = BTreeMap::new();
    let mut final_state: Option<String> = None;
    let mut refs: Vec<(usize, String)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let err = |m: String| MachineError { line, message: m };
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        match toks[0] {
            "final" => {
                if toks.len() != 2 || !valid_state(toks[1]) {
                    return Err(err("expected 'final <state>'".into()));
                }
                if final_state.is_some() {
                    return Err(err("second final state".into()));
                }
                final_state = Some(toks[1].to_string());
            }
            "state" => {
                let name = toks.get(1).and_then(|t| t.strip_suffix(':')).ok_or_else(|| err("expected 'state <name>:'".into()))?;
                if !valid_state(name) {
                    return Err(err(format!("bad state name '{name}'")));
                }
                if delta.contains_key(name) {
                    return Err(err(format!("state '{name}' defined twice")));
                }
                let counter = |t: Option<&&str>| t.and_then(|t| Counter::parse(t)).ok_or_else(|| err("counter must be 1 or 2".into()));
                let target = |t: Option<&&str>| match t {
                    Some(t) if valid_state(t) => Ok(t.to_string()),
                    _ => Err(err("expected a target state".into())),
                };
                let action = match toks.get(2).copied() {
                    Some(op @ ("inc" | "dec")) => {
                        if toks.len() != 6 || toks[4] != "->" {
                            return Err(err(format!("expected '{op} <c> -> <state>'")));
                        }
                        let c = counter(toks.get(3))?;
                        let t = target(toks.get(5))?;
                        refs.push((line, t.clone()));
                        if op == "inc" {
                            Action::Inc(c, t)
                        } else {
                            Action::Dec(c, t)
                        }
                    }
                    Some("test") => {
                        if toks.len() != 8 || toks[4] != "?" || toks[6] != ":" {
                            return Err(err("expected 'test <c> ? <zero> : <positive>'".into()));
                        }
                        let c = counter(toks.get(3))?;
                        let z = target(toks.get(5))?;
                        let p = target(toks.get(7))?;
                        refs.push((line, z.clone()));
                        refs.push((line, p.clone()));
                        Action::Test(c, z, p)
                    }
                    _ => return Err(err("expected inc, dec or test".into())),
                };
                states.push(name.to_string());
                delta.insert(name.to_string(), action);
            }
            other => return Err(err(format!("unexpected '{other}'"))),
        }
    }
    let final_state = final_state.ok_or(MachineError { line: 0, message: "no final state".into() })?;
    if delta.contains_key(&final_state) {
        return Err(MachineError { line: 0, message: format!("final state '{final_state}' has a transition") });
    }
    for (line, t) in refs {
        if t != final_state && !delta.contains_key(&t) {
            return Err(MachineError { line, message: format!("undefined state '{t}'") });
        }
    }
    let initial = states.first().cloned().unwrap_or_else(|| final_state.clone());
    states.push(final_state.clone());
    Ok(Machine { states, initial, final_state, delta })
}

impl fmt::Display for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.states {
            match self.delta.get(q) {
                Some(Action::Inc(c, t)) => writeln!(f, "state {q}: inc {c} -> {t}")?,
                Some(Action::Dec(c, t)) => writeln!(f, "state {q}: dec {c} -> {t}")?,
                Some(Action::Test(c, z, p)) => writeln!(f, "state {q}: test {c} ? {z} : {p}")?,
                None => {}
            }
        }
        writeln!(f, "final {}", self.final_state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub state: String,
    pub c1: u64,
    pub c2: u64,
}

impl Config {
    fn slot(&mut self, k: Counter) -> &mut u64 {
        match k {
            Counter::One => &mut self.c1,
            Counter::Two => &mut self.c2,
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.state, self.c1, self.c2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    /// Reached the final state. `zero` says both counters are 0 there.
    Halts { configs: Vec<Config>, zero: bool },
    /// Decrement of an empty counter.
    Stuck { configs: Vec<Config> },
    OutOfFuel,
}

pub const DEFAULT_FUEL: usize = 100_000;

pub fn run_machine(m: &Machine, fuel: usize) -> RunResult {
    let mut c = Config { state: m.initial.clone(), c1: 0, c2: 0 };
    let mut configs = vec![c.clone()];
    for _ in 0..fuel {
        if c.state == m.final_state {
            let zero = c.c1 == 0 && c.c2 == 0;
            return RunResult::Halts { configs, zero };
        }
        let get = |c: &Config, k: Counter| if k == Counter::One { c.c1 } else { c.c2 };
        let mut next = c.clone();
        match &m.delta[&c.state] {
            Action::Inc(k, t) => {
                *next.slot(*k) += 1;
                next.state = t.clone();
            }
            Action::Dec(k, t) => {
                if get(&c, *k) == 0 {
                    return RunResult::Stuck { configs };
                }
                *next.slot(*k) -= 1;
                next.state = t.clone();
            }
            Action::Test(k, z, p) => {
                next.state = if get(&c, *k) == 0 { z.clone() } else { p.clone() };
            }
        }
        c = next;
        configs.push(c.clone());
    }
    if c.state == m.final_state {
        let zero = c.c1 == 0 && c.c2 == 0;
        return RunResult::Halts { configs, zero };
    }
    RunResult::OutOfFuel
}
