//! Weak validity: some valid bouncing thread meets the branch infinitely
//! often. Decided approximately, inside a window of the unfolded tree
//! around each branch lasso.

use std::collections::{HashSet, VecDeque};

use crate::address::Dir;
use crate::priority::PriorityOrder;
use crate::proof::{Analysis, Down, Flow, Lasso, PreProof, Rule};
use crate::thread::Motion;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeakBounds {
    /// Longest branch lasso examined.
    pub lasso: usize,
    /// Depth explored off the branch.
    pub off_branch: usize,
    /// Loop periods unrolled past the stem.
    pub periods: usize,
}

impl Default for WeakBounds {
    fn default() -> Self {
        WeakBounds { lasso: 6, off_branch: 4, periods: 3 }
    }
}

/// Position in the unfolding: branch index plus slots taken off the branch.
type Pos = (usize, Vec<u8>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Conf {
    pos: Pos,
    idx: usize,
    motion: Motion,
    stack: Vec<Dir>,
}

const NO_EVENT: u32 = u32::MAX;

struct Window<'a> {
    p: &'a PreProof,
    an: &'a Analysis,
    ord: &'a PriorityOrder,
    l: &'a Lasso,
    k: usize,
    b: WeakBounds,
    limit: usize,
}

impl Window<'_> {
    fn node(&self, pos: &Pos) -> usize {
        let mut n = self.l.step(pos.0).0;
        for s in &pos.1 {
            n = self.p.nodes[n].premises[*s as usize].target();
        }
        n
    }

    fn child(&self, pos: &Pos, slot: usize) -> Option<Pos> {
        if pos.1.is_empty() && self.l.step(pos.0).1 == slot {
            (pos.0 + 1 < self.limit).then(|| (pos.0 + 1, Vec::new()))
        } else if pos.1.len() < self.b.off_branch {
            let mut off = pos.1.clone();
            off.push(slot as u8);
            Some((pos.0, off))
        } else {
            None
        }
    }

    fn parent(&self, pos: &Pos) -> Option<(Pos, usize)> {
        if let Some((last, rest)) = pos.1.split_last() {
            Some(((pos.0, rest.to_vec()), *last as usize))
        } else if pos.0 > 0 {
            Some(((pos.0 - 1, Vec::new()), self.l.step(pos.0 - 1).1))
        } else {
            None
        }
    }

    fn succ(&self, c: &Conf) -> Vec<(Conf, u32)> {
        let n = self.node(&c.pos);
        let shape = &self.an.shapes[n];
        let mut out = Vec::new();
        match c.motion {
            Motion::Up => match shape.flows[c.idx] {
                Flow::Context { premise, index } => {
                    if let Some(pos) = self.child(&c.pos, premise) {
                        out.push((Conf { pos, idx: index, ..c.clone() }, NO_EVENT));
                    }
                }
                Flow::Axiom { partner } => {
                    out.push((Conf { idx: partner, motion: Motion::Down, ..c.clone() }, NO_EVENT));
                }
                Flow::Principal => {
                    let dirs: Vec<Dir> = match (&self.p.nodes[n].rule, c.stack.last()) {
                        (Rule::Mu(_) | Rule::Nu(_), None | Some(Dir::I)) => vec![Dir::I],
                        (Rule::Tensor(_) | Rule::Par(_), None) => vec![Dir::L, Dir::R],
                        (Rule::Tensor(_) | Rule::Par(_), Some(d)) if *d != Dir::I => vec![*d],
                        _ => vec![],
                    };
                    for d in dirs {
                        let Some((slot, index)) = shape.sub(d) else { continue };
                        let Some(pos) = self.child(&c.pos, slot) else { continue };
                        let mut stack = c.stack.clone();
                        let visible = stack.pop().is_none();
                        let ev = if visible && d == Dir::I {
                            self.ord.priority(&self.p.nodes[n].conclusion[c.idx].formula).unwrap()
                        } else {
                            NO_EVENT
                        };
                        out.push((Conf { pos, idx: index, motion: Motion::Up, stack }, ev));
                    }
                }
                Flow::Leaf => {}
            },
            Motion::Down => {
                let Some((ppos, slot)) = self.parent(&c.pos) else { return out };
                let pn = self.node(&ppos);
                let ps = &self.an.shapes[pn];
                match ps.down[slot][c.idx] {
                    Down::Context(ci) => out.push((Conf { pos: ppos, idx: ci, ..c.clone() }, NO_EVENT)),
                    Down::Sub(d) => {
                        if c.stack.len() < self.k {
                            let mut stack = c.stack.clone();
                            stack.push(d);
                            out.push((Conf { pos: ppos, idx: ps.principal.unwrap(), motion: Motion::Down, stack }, NO_EVENT));
                        }
                    }
                    Down::Cut => {
                        let other = 1 - slot;
                        if let Some(pos) = self.child(&ppos, other) {
                            let idx = ps.cut.unwrap()[other];
                            out.push((Conf { pos, idx, motion: Motion::Up, stack: c.stack.clone() }, NO_EVENT));
                        }
                    }
                }
            }
        }
        out
    }

    fn shifted(&self, c: &Conf, m: usize) -> Conf {
        let mut d = c.clone();
        d.pos.0 += m * self.l.cycle.len();
        d
    }
}

/// Look for a thread segment `X → X shifted by whole periods` that meets
/// the branch and whose least visible priority is even.
pub fn lasso_weakly_valid(p: &PreProof, an: &Analysis, ord: &PriorityOrder, l: &Lasso, k: usize, b: WeakBounds) -> bool {
    let s = l.stem.len();
    let c = l.cycle.len();
    let w = Window { p, an, ord, l, k, b, limit: s + (b.periods + 1) * c };

    // Every upward configuration with empty stack may start a thread.
    let mut reach: HashSet<Conf> = HashSet::new();
    let mut queue: VecDeque<Conf> = VecDeque::new();
    let mut starts: Vec<Pos> = Vec::new();
    let mut frontier: Vec<Pos> = (0..w.limit).map(|j| (j, Vec::new())).collect();
    while let Some(pos) = frontier.pop() {
        let n = w.node(&pos);
        for slot in 0..p.nodes[n].premises.len() {
            if let Some(ch) = w.child(&pos, slot) {
                if !ch.1.is_empty() {
                    frontier.push(ch);
                }
            }
        }
        starts.push(pos);
    }
    for pos in starts {
        let n = w.node(&pos);
        for idx in 0..p.nodes[n].conclusion.len() {
            let cf = Conf { pos: pos.clone(), idx, motion: Motion::Up, stack: Vec::new() };
            if reach.insert(cf.clone()) {
                queue.push_back(cf);
            }
        }
    }
    while let Some(cf) = queue.pop_front() {
        for (nx, _) in w.succ(&cf) {
            if reach.insert(nx.clone()) {
                queue.push_back(nx);
            }
        }
    }

    let mut candidates: Vec<&Conf> = reach.iter().filter(|x| x.pos.0 >= s && x.pos.0 < s + c).collect();
    candidates.sort_by(|a, b| (a.pos.0, &a.pos.1, a.idx).cmp(&(b.pos.0, &b.pos.1, b.idx)));
    for x in candidates {
        let targets: Vec<Conf> = (1..=b.periods).map(|m| w.shifted(x, m)).collect();
        let mut seen: HashSet<(Conf, u32, bool)> = HashSet::new();
        let mut q: VecDeque<(Conf, u32, bool)> = VecDeque::new();
        q.push_back((x.clone(), NO_EVENT, x.pos.1.is_empty()));
        while let Some((cf, best, met)) = q.pop_front() {
            for (nx, ev) in w.succ(&cf) {
                if nx.pos.0 < s {
                    continue;
                }
                let best = best.min(ev);
                let met = met || nx.pos.1.is_empty();
                if met && best != NO_EVENT && best % 2 == 0 && targets.contains(&nx) {
                    return true;
                }
                let key = (nx, best, met);
                if !seen.contains(&key) {
                    seen.insert(key.clone());
                    q.push_back(key);
                }
            }
        }
    }
    false
}
