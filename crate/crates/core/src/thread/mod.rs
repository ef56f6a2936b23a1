//! Pre-threads, weights and the thread automaton.

mod dpda;
mod grammar;
mod prethread;
mod walk;

use std::fmt;

use thiserror::Error;

pub use dpda::{athread_run, Athread, Config, Motion, Move, RunResult};
pub use grammar::{grammar_member, Earley, Nonterminal};
pub use prethread::{
    decompose, height, is_thread, lasso_height, thread_valid, weight, Block, BlockKind, Decomposition, LassoThread, Step,
    ThreadVerdict, WeightError,
};
pub use walk::{drive, Driven, Halt, Walker};

use crate::address::Dir;

/// One letter of a weight word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Open(Dir),
    Close(Dir),
    A,
    C,
    W,
}

impl Letter {
    pub const ALL: [Letter; 9] = [
        Letter::Open(Dir::L),
        Letter::Open(Dir::R),
        Letter::Open(Dir::I),
        Letter::Close(Dir::L),
        Letter::Close(Dir::R),
        Letter::Close(Dir::I),
        Letter::A,
        Letter::C,
        Letter::W,
    ];

    /// ASCII spelling, barred letters upper-cased.
    pub fn ascii(self) -> char {
        match self {
            Letter::Open(d) => d.as_char(),
            Letter::Close(d) => d.as_char().to_ascii_uppercase(),
            Letter::A => 'A',
            Letter::C => 'C',
            Letter::W => 'W',
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Close(d) => write!(f, "{}\u{304}", d.as_char()),
            other => write!(f, "{}", other.ascii()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bad weight letter '{ch}' at position {pos}")]
pub struct LetterError {
    pub pos: usize,
    pub ch: char,
}

/// Parse a weight word. Accepts `l̄` (combining macron) or `L` for barred
/// letters; spaces and `·` are ignored.
pub fn parse_word(s: &str) -> Result<Vec<Letter>, LetterError> {
    let mut out: Vec<Letter> = Vec::new();
    for (pos, ch) in s.chars().enumerate() {
        let l = match ch {
            ' ' | '\t' | '·' | '.' => continue,
            '\u{304}' => match out.last_mut() {
                Some(last @ Letter::Open(_)) => {
                    if let Letter::Open(d) = *last {
                        *last = Letter::Close(d);
                    }
                    continue;
                }
                _ => return Err(LetterError { pos, ch }),
            },
            'A' => Letter::A,
            'C' => Letter::C,
            'W' => Letter::W,
            'l' | 'r' | 'i' => Letter::Open(Dir::from_char(ch).unwrap()),
            'L' | 'R' | 'I' => Letter::Close(Dir::from_char(ch.to_ascii_lowercase()).unwrap()),
            _ => return Err(LetterError { pos, ch }),
        };
        out.push(l);
    }
    Ok(out)
}

pub fn format_word(w: &[Letter]) -> String {
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn format_word_ascii(w: &[Letter]) -> String {
    w.iter().map(|l| l.ascii()).collect()
}
