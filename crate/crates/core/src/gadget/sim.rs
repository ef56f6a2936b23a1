//! Symbolic runs of single threads through compiled proofs, with the stack
//! shown as bold letters, top first.

use std::fmt;

use super::build::{standalone, Gadget, GadgetProof, Side};
use crate::address::Dir;
use crate::proof::{analyze, Analysis, Flow, PointedSequent, PreProof, Rule};
use crate::thread::{Halt, Walker};
use crate::thread::{Letter, Motion};

/// Bold word, top first, to a stack, bottom first.
pub fn stack_of(word: &str) -> Vec<Dir> {
    let mut out = Vec::new();
    for c in word.chars().rev() {
        out.push(if c == 'l' { Dir::L } else { Dir::R });
        out.push(Dir::I);
    }
    out
}

/// Stack, bottom first, to a bold word, top first. A stack that does not
/// split into bold letters is spelled out letter by letter after a `!`.
pub fn bold_of(stack: &[Dir]) -> String {
    let top: Vec<Dir> = stack.iter().rev().copied().collect();
    let bold = top.len().is_multiple_of(2) && top.chunks(2).all(|c| c[0] == Dir::I && c[1] != Dir::I);
    if bold {
        top.chunks(2).map(|c| c[1].as_char()).collect()
    } else {
        std::iter::once('!').chain(top.iter().map(|d| d.as_char())).collect()
    }
}

/// Pointed sequents from which some upward path reaches an axiom or an
/// open leaf.
fn bounce_table(p: &PreProof, an: &Analysis) -> Vec<Vec<bool>> {
    let mut ok: Vec<Vec<bool>> = p.nodes.iter().map(|n| vec![false; n.conclusion.len()]).collect();
    loop {
        let mut changed = false;
        for (n, node) in p.nodes.iter().enumerate() {
            let sh = &an.shapes[n];
            for i in 0..node.conclusion.len() {
                if ok[n][i] {
                    continue;
                }
                let v = match sh.flows[i] {
                    Flow::Axiom { .. } | Flow::Leaf => true,
                    Flow::Context { premise, index } => ok[node.premises[premise].target()][index],
                    Flow::Principal => sh.subs.iter().any(|&(_, s, j)| ok[node.premises[s].target()][j]),
                };
                if v {
                    ok[n][i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return ok;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionResult {
    /// Reached the named exit leaf going up.
    Reached { exit: String, stack: String },
    /// Came back down out of the gadget on the root occurrence named `on`
    /// (`g`, `f` or `a`).
    Returned { on: String, stack: String },
    Lost(String),
}

impl fmt::Display for ActionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionResult::Reached { exit, stack } => write!(f, "{exit} with {stack:?}"),
            ActionResult::Returned { on, stack } => write!(f, "out on {on} with {stack:?}"),
            ActionResult::Lost(why) => write!(f, "lost: {why}"),
        }
    }
}

const GADGET_STEPS: usize = 100_000;

fn run(p: &PreProof, an: &Analysis, mut w: Walker, exits: &[(String, usize)]) -> ActionResult {
    let bounce = bounce_table(p, an);
    for _ in 0..GADGET_STEPS {
        if w.motion == Motion::Up && !bounce[w.at.node][w.at.index] {
            return ActionResult::Lost("no axiom above".into());
        }
        match w.step(&mut |_| None) {
            Ok(_) => {}
            Err(Halt::Leaf) => {
                let exit = exits.iter().find(|(_, n)| *n == w.at.node).map(|(e, _)| e.clone()).unwrap_or_default();
                return ActionResult::Reached { exit, stack: bold_of(&w.stack) };
            }
            Err(Halt::Bottom) => {
                let on = p.nodes[w.at.node].conclusion[w.at.index].address.name.clone();
                return ActionResult::Returned { on, stack: bold_of(&w.stack) };
            }
            Err(h) => return ActionResult::Lost(h.to_string()),
        }
    }
    ActionResult::Lost("step cap".into())
}

fn index_of(p: &PreProof, node: usize, name: &str) -> usize {
    p.nodes[node].conclusion.iter().position(|o| o.address.name == name).expect("occurrence present")
}

/// The simulating occurrence: F on the main side, G on the dual side.
fn thread_name(side: Side) -> &'static str {
    match side {
        Side::Main => "f",
        Side::Dual => "g",
    }
}

/// Send the simulating thread up into the gadget with stack `entry`.
pub fn stack_action(g: Gadget, side: Side, entry: &str) -> ActionResult {
    let (p, exits) = standalone(g, side);
    let an = analyze(&p).expect("gadget well formed");
    let index = index_of(&p, p.root, thread_name(side));
    let mut w = Walker::new(&p, &an, PointedSequent { node: p.root, index });
    w.stack = stack_of(entry);
    run(&p, &an, w, &exits)
}

/// Send the returning thread down from the exit leaf `exit` with stack
/// `entry` and report what it carries out at the bottom.
pub fn stack_return(g: Gadget, side: Side, exit: &str, entry: &str) -> ActionResult {
    let (p, exits) = standalone(g, side);
    let an = analyze(&p).expect("gadget well formed");
    let Some(&(_, leaf)) = exits.iter().find(|(e, _)| e == exit) else {
        return ActionResult::Lost(format!("no exit {exit}"));
    };
    let back = if side == Side::Main { "g" } else { "f" };
    let mut w = Walker::with_tree_history(&p, &an, PointedSequent { node: leaf, index: index_of(&p, leaf, back) });
    w.motion = Motion::Down;
    w.stack = stack_of(entry);
    run(&p, &an, w, &exits)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExitTrace {
    /// Stack carried out of the F-side simulation.
    pub main_exit: Option<String>,
    /// Stack carried out of the G-side simulation.
    pub dual_exit: Option<String>,
    pub steps: usize,
    pub max_height: usize,
    /// Branches tried at ⅋/⊗ met with empty stack.
    pub forks: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Simulation {
    /// The thread came back up to the root through the main loop.
    Exits(ExitTrace),
    Lost(String),
    OutOfFuel,
}

/// Follow the F-thread from the root. It is deterministic except at ⅋/⊗
/// with empty stack, where both ways are tried depth first, left first.
/// `fuel` bounds the total number of steps.
pub fn simulate_main_thread(gp: &GadgetProof, fuel: usize) -> Simulation {
    let p = &gp.proof;
    let an = match analyze(p) {
        Ok(a) => a,
        Err(d) => return Simulation::Lost(format!("malformed: {}", d[0])),
    };
    let bounce = bounce_table(p, &an);
    let home = PointedSequent { node: gp.root, index: 1 };
    let mut pending = vec![(Walker::new(p, &an, home), ExitTrace::default())];
    let mut used = 0usize;
    let mut forks = 0usize;
    let mut why = String::from("no branch");
    while let Some((mut w, mut tr)) = pending.pop() {
        loop {
            if used >= fuel {
                return Simulation::OutOfFuel;
            }
            if w.motion == Motion::Up && !bounce[w.at.node][w.at.index] {
                why = format!("no axiom above {}", p.format_pointed(w.at));
                break;
            }
            let fork = w.motion == Motion::Up
                && w.stack.is_empty()
                && an.shapes[w.at.node].flows[w.at.index] == Flow::Principal
                && matches!(p.nodes[w.at.node].rule, Rule::Tensor(_) | Rule::Par(_));
            if fork {
                forks += 1;
                let mut other = w.clone();
                if other.step(&mut |_| Some(Dir::R)).is_ok() {
                    used += 1;
                    pending.push((other, tr.clone()));
                }
            }
            used += 1;
            match w.step(&mut |_| Some(Dir::L)) {
                Ok(Letter::C) => {
                    if let Some(&(q, 0)) = w.history.last() {
                        if q == gp.main_cut {
                            tr.main_exit = Some(bold_of(&w.stack));
                        } else if q == gp.dual_cut {
                            tr.dual_exit = Some(bold_of(&w.stack));
                        }
                    }
                }
                Ok(_) => {}
                Err(h) => {
                    why = format!("{h} at {}", p.format_pointed(w.at));
                    break;
                }
            }
            if w.motion == Motion::Up && w.at == home {
                tr.steps = used;
                tr.max_height = w.max_height;
                tr.forks = forks;
                return Simulation::Exits(tr);
            }
        }
    }
    Simulation::Lost(why)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bold_round_trip() {
        for w in ["", "r", "rlrr", "llr"] {
            assert_eq!(bold_of(&stack_of(w)), w);
        }
        assert_eq!(bold_of(&[Dir::L]), "!l");
    }
}
