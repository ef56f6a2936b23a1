//! Driving a bouncing pre-thread through a proof graph, with the constraint
//! stack deciding every move it can.

use std::fmt;

use super::{Letter, Motion};
use crate::address::Dir;
use crate::proof::{Analysis, Down, Flow, NodeId, PointedSequent, PreProof, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Halt {
    /// Reached an open leaf.
    Leaf,
    /// The followed occurrence is the principal 1 or ⊥.
    Unit,
    /// The stack top does not match the available sub-occurrence.
    Mismatch,
    /// Going down with no recorded way back.
    Bottom,
    /// A ⅋ or ⊗ with empty stack and no choice supplied.
    NoChoice,
}

impl fmt::Display for Halt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Halt::Leaf => "open leaf",
            Halt::Unit => "unit rule",
            Halt::Mismatch => "stack mismatch",
            Halt::Bottom => "below the start",
            Halt::NoChoice => "no choice",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Walker<'a> {
    p: &'a PreProof,
    an: &'a Analysis,
    pub at: PointedSequent,
    pub motion: Motion,
    /// Bottom first.
    pub stack: Vec<Dir>,
    /// One `(node, premise slot)` per upward move not yet undone.
    pub history: Vec<(NodeId, usize)>,
    pub max_height: usize,
}

impl<'a> Walker<'a> {
    pub fn new(p: &'a PreProof, an: &'a Analysis, at: PointedSequent) -> Self {
        Walker { p, an, at, motion: Motion::Up, stack: Vec::new(), history: Vec::new(), max_height: 0 }
    }

    /// Start with the tree path from the root as history, so the walk may
    /// descend below its starting node.
    pub fn with_tree_history(p: &'a PreProof, an: &'a Analysis, at: PointedSequent) -> Self {
        let mut w = Self::new(p, an, at);
        let mut cur = at.node;
        while let Some((parent, slot)) = an.tree_parent[cur] {
            w.history.push((parent, slot));
            cur = parent;
        }
        w.history.reverse();
        w
    }

    fn child(&self, n: NodeId, slot: usize) -> NodeId {
        self.p.nodes[n].premises[slot].target()
    }

    fn go_up(&mut self, slot: usize, index: usize) {
        let n = self.at.node;
        self.history.push((n, slot));
        self.at = PointedSequent { node: self.child(n, slot), index };
    }

    /// Take one step. `choose` is asked for a direction at a ⅋ or ⊗ met
    /// with empty stack.
    pub fn step(&mut self, choose: &mut dyn FnMut(&Walker) -> Option<Dir>) -> Result<Letter, Halt> {
        let an = self.an;
        let shape = &an.shapes[self.at.node];
        match self.motion {
            Motion::Up => match shape.flows[self.at.index] {
                Flow::Leaf => Err(Halt::Leaf),
                Flow::Context { premise, index } => {
                    self.go_up(premise, index);
                    Ok(Letter::W)
                }
                Flow::Axiom { partner } => {
                    self.motion = Motion::Down;
                    self.at.index = partner;
                    Ok(Letter::A)
                }
                Flow::Principal => {
                    let d = match &self.p.nodes[self.at.node].rule {
                        Rule::Mu(_) | Rule::Nu(_) => match self.stack.last() {
                            None | Some(Dir::I) => Dir::I,
                            _ => return Err(Halt::Mismatch),
                        },
                        Rule::Tensor(_) | Rule::Par(_) => match self.stack.last() {
                            Some(Dir::I) => return Err(Halt::Mismatch),
                            Some(d) => *d,
                            None => choose(self).ok_or(Halt::NoChoice)?,
                        },
                        _ => return Err(Halt::Unit),
                    };
                    let (slot, index) = shape.sub(d).ok_or(Halt::Mismatch)?;
                    self.stack.pop();
                    self.go_up(slot, index);
                    Ok(Letter::Open(d))
                }
            },
            Motion::Down => {
                let (q, slot) = self.history.pop().ok_or(Halt::Bottom)?;
                let qs = &an.shapes[q];
                match qs.down[slot][self.at.index] {
                    Down::Context(ci) => {
                        self.at = PointedSequent { node: q, index: ci };
                        Ok(Letter::W)
                    }
                    Down::Sub(d) => {
                        self.at = PointedSequent { node: q, index: qs.principal.expect("principal") };
                        self.stack.push(d);
                        self.max_height = self.max_height.max(self.stack.len());
                        Ok(Letter::Close(d))
                    }
                    Down::Cut => {
                        let other = 1 - slot;
                        let idx = qs.cut.expect("cut node")[other];
                        self.motion = Motion::Up;
                        self.history.push((q, other));
                        self.at = PointedSequent { node: self.child(q, other), index: idx };
                        Ok(Letter::C)
                    }
                }
            }
        }
    }
}

/// A pre-thread driven from a pointed sequent for a bounded number of steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Driven {
    pub steps: Vec<(PointedSequent, Motion)>,
    pub letters: Vec<Letter>,
    pub halt: Option<Halt>,
    pub max_height: usize,
}

/// Drive from `start` going up. Choices at ⅋/⊗ with empty stack are taken
/// from `choices` in order, the last one repeating.
pub fn drive(p: &PreProof, an: &Analysis, start: PointedSequent, steps: usize, choices: &[Dir]) -> Driven {
    let mut w = Walker::with_tree_history(p, an, start);
    let mut out = Driven { steps: vec![(start, Motion::Up)], letters: Vec::new(), halt: None, max_height: 0 };
    let mut used = 0usize;
    let mut choose = |_: &Walker| {
        let d = choices.get(used.min(choices.len().saturating_sub(1))).copied();
        used += 1;
        d
    };
    for _ in 0..steps {
        match w.step(&mut choose) {
            Ok(l) => {
                out.letters.push(l);
                out.steps.push((w.at, w.motion));
            }
            Err(h) => {
                out.halt = Some(h);
                break;
            }
        }
    }
    out.max_height = w.max_height;
    out
}
