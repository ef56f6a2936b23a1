//! The deterministic pushdown automaton recognising thread weights.

use std::fmt;

use serde::Serialize;

use super::Letter;
use crate::address::Dir;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Motion {
    Up,
    Down,
}

impl fmt::Display for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Motion::Up => "↑",
            Motion::Down => "↓",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub motion: Motion,
    /// Bottom first.
    pub stack: Vec<Dir>,
}

impl Config {
    pub fn start() -> Self {
        Config { motion: Motion::Up, stack: Vec::new() }
    }

    pub fn is_rest(&self) -> bool {
        self.motion == Motion::Up && self.stack.is_empty()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.stack.iter().map(|d| d.as_char()).collect();
        write!(f, "({}, [{}])", self.motion, s)
    }
}

/// How a letter was consumed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Move {
    /// Upward move with empty stack: part of the visible part.
    Visible,
    Pop,
    Push,
    /// W while the stack is non-empty or while going down.
    Skip,
    /// A or C.
    Bounce,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Athread {
    pub config: Config,
    pub max_height: usize,
    pub read: usize,
}

impl Default for Athread {
    fn default() -> Self {
        Athread { config: Config::start(), max_height: 0, read: 0 }
    }
}

impl Athread {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_config(config: Config) -> Self {
        let max_height = config.stack.len();
        Athread { config, max_height, read: 0 }
    }

    /// Consume one letter; on rejection the automaton is left unchanged.
    pub fn feed(&mut self, l: Letter) -> Result<Move, String> {
        let c = &mut self.config;
        let mv = match (c.motion, l) {
            (Motion::Up, Letter::Open(x)) => match c.stack.last() {
                None => Move::Visible,
                Some(t) if *t == x => {
                    c.stack.pop();
                    Move::Pop
                }
                Some(t) => return Err(format!("reading {x:?} with top {t:?}").to_lowercase()),
            },
            (Motion::Up, Letter::W) => {
                if c.stack.is_empty() {
                    Move::Visible
                } else {
                    Move::Skip
                }
            }
            (Motion::Up, Letter::A) => {
                c.motion = Motion::Down;
                Move::Bounce
            }
            (Motion::Down, Letter::Close(x)) => {
                c.stack.push(x);
                Move::Push
            }
            (Motion::Down, Letter::W) => Move::Skip,
            (Motion::Down, Letter::C) => {
                c.motion = Motion::Up;
                Move::Bounce
            }
            (m, l) => return Err(format!("no transition on {l} going {m}")),
        };
        self.max_height = self.max_height.max(self.config.stack.len());
        self.read += 1;
        Ok(mv)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    Accept { trace: Vec<Config>, moves: Vec<Move>, max_height: usize },
    Reject { position: usize, reason: String },
}

impl RunResult {
    pub fn accepted(&self) -> bool {
        matches!(self, RunResult::Accept { .. })
    }
}

/// Run the automaton from `(↑, ε)`. The trace holds the configuration
/// before the first letter and after each letter.
pub fn athread_run(w: &[Letter]) -> RunResult {
    let mut a = Athread::new();
    let mut trace = vec![a.config.clone()];
    let mut moves = Vec::with_capacity(w.len());
    for (position, l) in w.iter().enumerate() {
        match a.feed(*l) {
            Ok(m) => moves.push(m),
            Err(reason) => return RunResult::Reject { position, reason },
        }
        trace.push(a.config.clone());
    }
    RunResult::Accept { trace, moves, max_height: a.max_height }
}
