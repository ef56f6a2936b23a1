//! Addresses, occurrences and sequents.

use std::fmt;

use thiserror::Error;

use crate::formula::{Connective, Formula};

/// One letter of an address path.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, serde::Serialize)]
pub enum Dir {
    L,
    R,
    I,
}

impl Dir {
    pub fn as_char(self) -> char {
        match self {
            Dir::L => 'l',
            Dir::R => 'r',
            Dir::I => 'i',
        }
    }

    pub fn from_char(c: char) -> Option<Dir> {
        match c {
            'l' => Some(Dir::L),
            'r' => Some(Dir::R),
            'i' => Some(Dir::I),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Address {
    pub name: String,
    pub dual: bool,
    pub path: Vec<Dir>,
}

impl Address {
    pub fn atomic(name: &str) -> Self {
        Address { name: name.to_string(), dual: false, path: Vec::new() }
    }

    pub fn is_atomic(&self) -> bool {
        self.path.is_empty()
    }

    pub fn dual(&self) -> Address {
        Address { name: self.name.clone(), dual: !self.dual, path: self.path.clone() }
    }

    pub fn child(&self, d: Dir) -> Address {
        let mut a = self.clone();
        a.path.push(d);
        a
    }

    pub fn extend(&self, more: &[Dir]) -> Address {
        let mut a = self.clone();
        a.path.extend_from_slice(more);
        a
    }

    /// Drop the last path letter, returning it with the parent.
    pub fn parent(&self) -> Option<(Address, Dir)> {
        let mut a = self.clone();
        let d = a.path.pop()?;
        Some((a, d))
    }

    pub fn is_prefix_of(&self, other: &Address) -> bool {
        self.name == other.name
            && self.dual == other.dual
            && other.path.len() >= self.path.len()
            && other.path[..self.path.len()] == self.path[..]
    }

    pub fn disjoint(&self, other: &Address) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }

    /// Letter `x` when `other = self·x`.
    pub fn extension_letter(&self, other: &Address) -> Option<Dir> {
        if other.path.len() == self.path.len() + 1 && self.is_prefix_of(other) {
            other.path.last().copied()
        } else {
            None
        }
    }

    pub fn root_key(&self) -> (String, bool) {
        (self.name.clone(), self.dual)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.dual {
            f.write_str("^")?;
        }
        if !self.path.is_empty() {
            f.write_str(":")?;
            for d in &self.path {
                write!(f, "{}", d.as_char())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("address syntax error at column {column}: {message}")]
pub struct AddressError {
    pub column: usize,
    pub message: String,
}

pub fn parse_address(src: &str) -> Result<Address, AddressError> {
    let s = src.trim();
    let lead = src.len() - src.trim_start().len();
    let (head, path) = match s.find(':') {
        Some(k) => (&s[..k], &s[k + 1..]),
        None => (s, ""),
    };
    let (name, dual) = match head.strip_suffix('^') {
        Some(n) => (n, true),
        None => (head, false),
    };
    let valid_name = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
    if !valid_name {
        return Err(AddressError { column: lead + 1, message: format!("bad address name '{name}'") });
    }
    let mut dirs = Vec::new();
    for (k, c) in path.chars().enumerate() {
        match Dir::from_char(c) {
            Some(d) => dirs.push(d),
            None => {
                return Err(AddressError {
                    column: lead + head.len() + 2 + k,
                    message: format!("bad path letter '{c}'"),
                })
            }
        }
    }
    Ok(Address { name: name.to_string(), dual, path: dirs })
}

impl std::str::FromStr for Address {
    type Err = AddressError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_address(s)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Occurrence {
    pub formula: Formula,
    pub address: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OccurrenceError {
    #[error("not a fixed point: {0}")]
    NotAFixedPoint(String),
    #[error("address mismatch: {0} and {1} are not siblings l/r")]
    AddressMismatch(String, String),
}

impl Occurrence {
    pub fn new(formula: Formula, address: Address) -> Self {
        Occurrence { formula, address }
    }

    /// Structural equivalence: same formula, addresses ignored.
    pub fn equiv(&self, other: &Occurrence) -> bool {
        self.formula == other.formula
    }

    pub fn dual(&self) -> Occurrence {
        Occurrence { formula: self.formula.negate(), address: self.address.dual() }
    }

    pub fn unfold(&self) -> Result<Occurrence, OccurrenceError> {
        match self.formula.unfold() {
            Some(f) => Ok(Occurrence { formula: f, address: self.address.child(Dir::I) }),
            None => Err(OccurrenceError::NotAFixedPoint(self.to_string())),
        }
    }

    /// The two immediate sub-occurrences of a binary formula.
    pub fn split(&self) -> Option<(Occurrence, Occurrence)> {
        let (_, a, b) = self.formula.split_binary()?;
        Some((
            Occurrence::new(a.clone(), self.address.child(Dir::L)),
            Occurrence::new(b.clone(), self.address.child(Dir::R)),
        ))
    }
}

/// Rebuild `(φ⋆ψ)_α` from `φ_{αl}` and `ψ_{αr}`.
pub fn connect(star: Connective, left: &Occurrence, right: &Occurrence) -> Result<Occurrence, OccurrenceError> {
    let mismatch = || OccurrenceError::AddressMismatch(left.address.to_string(), right.address.to_string());
    let (lp, ld) = left.address.parent().ok_or_else(mismatch)?;
    let (rp, rd) = right.address.parent().ok_or_else(mismatch)?;
    if lp != rp || ld != Dir::L || rd != Dir::R {
        return Err(mismatch());
    }
    Ok(Occurrence::new(Formula::binary(star, left.formula.clone(), right.formula.clone()), lp))
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.formula, self.address)
    }
}

/// A sequent: ordered list with set semantics.
pub type Sequent = Vec<Occurrence>;

/// First pair of indices whose addresses overlap.
pub fn overlapping_pair(seq: &[Occurrence]) -> Option<(usize, usize)> {
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if !seq[i].address.disjoint(&seq[j].address) {
                return Some((i, j));
            }
        }
    }
    None
}

pub fn same_set(a: &[Occurrence], b: &[Occurrence]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.contains(x))
}

pub fn format_sequent(seq: &[Occurrence]) -> String {
    seq.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" , ")
}
