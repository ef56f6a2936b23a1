//! Relative addresses, minimal shortcuts and effect tables.

use std::collections::HashSet;
use std::fmt;

use crate::address::Dir;
use crate::proof::{Analysis, Flow, NodeId, PointedSequent, PreProof, Rule};
use crate::thread::{Halt, Letter, Motion, Walker};

/// One letter of a relative address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Jump {
    W,
    Sub(Dir),
    CutL,
    CutR,
}

impl fmt::Display for Jump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Jump::W => f.write_str("W"),
            Jump::Sub(d) => write!(f, "{}", d.as_char()),
            Jump::CutL => f.write_str("c_l"),
            Jump::CutR => f.write_str("c_r"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelAddr(pub Vec<Jump>);

impl fmt::Display for RelAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        f.write_str(&parts.join("·"))
    }
}

/// Where `j` leads from `at`, and through which premise slot.
pub fn jump(p: &PreProof, an: &Analysis, j: Jump, at: PointedSequent) -> Option<(usize, PointedSequent)> {
    let shape = &an.shapes[at.node];
    let (slot, index) = match j {
        Jump::W => match shape.flows.get(at.index)? {
            Flow::Context { premise, index } => (*premise, *index),
            _ => return None,
        },
        Jump::Sub(d) => {
            if shape.principal != Some(at.index) {
                return None;
            }
            shape.sub(d)?
        }
        Jump::CutL | Jump::CutR => {
            let k = if j == Jump::CutL { 0 } else { 1 };
            (k, shape.cut?[k])
        }
    };
    Some((slot, PointedSequent { node: p.nodes[at.node].premises[slot].target(), index }))
}

pub fn resolve(p: &PreProof, an: &Analysis, tau: &RelAddr, start: PointedSequent) -> Option<PointedSequent> {
    tau.0.iter().try_fold(start, |at, j| jump(p, an, *j, at).map(|(_, next)| next))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Failure {
    NotAxiomFirst,
    Overflow,
    Loop,
    DeadEnd,
    /// The shortcut leaves the part of the graph above its start.
    Escapes,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shortcut {
    pub start: PointedSequent,
    pub end: PointedSequent,
    pub letters: Vec<Letter>,
    pub max_height: usize,
    pub effect: RelAddr,
}

const STEP_CAP: usize = 100_000;

/// The unique minimal shortcut from `start` whose stack stays within `k`.
pub fn minimal_shortcut(p: &PreProof, an: &Analysis, start: PointedSequent, k: usize) -> Result<Shortcut, Failure> {
    let mut w = Walker::new(p, an, start);
    let mut letters = Vec::new();
    let (mut bounced_axiom, mut bounced_cut) = (false, false);
    let mut seen: HashSet<(PointedSequent, Motion, Vec<Dir>)> = HashSet::new();
    loop {
        if bounced_cut && w.motion == Motion::Up && w.stack.is_empty() {
            break;
        }
        if !bounced_axiom {
            match an.shapes[w.at.node].flows[w.at.index] {
                Flow::Principal => {
                    return Err(match p.nodes[w.at.node].rule {
                        Rule::One(_) | Rule::Bot(_) => Failure::DeadEnd,
                        _ => Failure::NotAxiomFirst,
                    })
                }
                Flow::Leaf => return Err(Failure::DeadEnd),
                _ => {}
            }
        }
        if !seen.insert((w.at, w.motion, w.stack.clone())) || letters.len() > STEP_CAP {
            return Err(Failure::Loop);
        }
        let l = w.step(&mut |_| None).map_err(|h| match h {
            Halt::Bottom => Failure::Escapes,
            _ => Failure::DeadEnd,
        })?;
        match l {
            Letter::A => bounced_axiom = true,
            Letter::C => bounced_cut = true,
            _ => {}
        }
        letters.push(l);
        if w.stack.len() > k {
            return Err(Failure::Overflow);
        }
    }
    let effect = relative_address(p, an, start, &w.history, w.at).ok_or(Failure::Escapes)?;
    Ok(Shortcut { start, end: w.at, letters, max_height: w.max_height, effect })
}

/// The first relative address, trying `W, i, l, r, c_l, c_r` in order at
/// each node, that follows `path` from `start` and lands on `end`.
pub fn relative_address(
    p: &PreProof,
    an: &Analysis,
    start: PointedSequent,
    path: &[(NodeId, usize)],
    end: PointedSequent,
) -> Option<RelAddr> {
    const ORDER: [Jump; 6] = [Jump::W, Jump::Sub(Dir::I), Jump::Sub(Dir::L), Jump::Sub(Dir::R), Jump::CutL, Jump::CutR];
    fn go(
        p: &PreProof,
        an: &Analysis,
        at: PointedSequent,
        path: &[(NodeId, usize)],
        end: PointedSequent,
        acc: &mut Vec<Jump>,
    ) -> bool {
        let Some(((node, slot), rest)) = path.split_first() else {
            return at == end;
        };
        debug_assert_eq!(*node, at.node);
        for j in ORDER {
            if let Some((s, next)) = jump(p, an, j, at) {
                if s == *slot {
                    acc.push(j);
                    if go(p, an, next, rest, end, acc) {
                        return true;
                    }
                    acc.pop();
                }
            }
        }
        false
    }
    let mut acc = Vec::new();
    go(p, an, start, path, end, &mut acc).then_some(RelAddr(acc))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectTable {
    pub k: usize,
    pub entries: Vec<(PointedSequent, Result<Shortcut, Failure>)>,
}

impl EffectTable {
    pub fn get(&self, at: PointedSequent) -> Option<&Shortcut> {
        self.entries.iter().find(|(ps, _)| *ps == at).and_then(|(_, r)| r.as_ref().ok())
    }

    pub fn shortcuts(&self) -> impl Iterator<Item = &Shortcut> {
        self.entries.iter().filter_map(|(_, r)| r.as_ref().ok())
    }

    /// Largest height reached by any shortcut of the table.
    pub fn max_height(&self) -> usize {
        self.shortcuts().map(|s| s.max_height).max().unwrap_or(0)
    }

    pub fn render(&self, p: &PreProof) -> String {
        let mut out = String::new();
        for (ps, r) in &self.entries {
            let rhs = match r {
                Ok(s) => format!("Some(height={}, effect={}, end={})", s.max_height, s.effect, p.format_pointed(s.end)),
                Err(f) => format!("None({f})"),
            };
            out.push_str(&format!("{}  ->  {}\n", p.format_pointed(*ps), rhs));
        }
        out
    }
}

pub fn build_effect_table(p: &PreProof, an: &Analysis, k: usize) -> EffectTable {
    let entries = p.pointed_sequents().into_iter().map(|ps| (ps, minimal_shortcut(p, an, ps, k))).collect();
    EffectTable { k, entries }
}

/// Effects with at least one shortcut, indexed by node and occurrence.
pub fn effect_index(table: &EffectTable, p: &PreProof) -> Vec<Vec<Option<RelAddr>>> {
    let mut out: Vec<Vec<Option<RelAddr>>> = p.nodes.iter().map(|n| vec![None; n.conclusion.len()]).collect();
    for s in table.shortcuts() {
        out[s.start.node][s.start.index] = Some(s.effect.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::{analyze, parse_proof};
    use crate::thread::{parse_word, athread_run, grammar_member, Nonterminal};

    fn load(src: &str) -> (PreProof, Analysis) {
        let p = parse_proof(src).unwrap();
        let an = analyze(&p).unwrap();
        (p, an)
    }

    fn ps(p: &PreProof, s: &str) -> PointedSequent {
        let (n, i) = s.split_once(':').unwrap();
        PointedSequent { node: p.node_by_name(n).unwrap(), index: i.parse().unwrap() }
    }

    const PI0: &str = include_str!("../corpus/pi0.proof");
    const RIGHT: &str = include_str!("../corpus/validproofs_right.proof");
    const LEFT: &str = include_str!("../corpus/validproofs_left.proof");

    #[test]
    fn pi0_shortcut() {
        let (p, an) = load(PI0);
        let s = minimal_shortcut(&p, &an, ps(&p, "c:0"), 1).unwrap();
        assert_eq!(s.letters, parse_word("W W A I C i").unwrap());
        assert_eq!(s.max_height, 1);
        assert_eq!(s.effect.to_string(), "c_r·i");
        assert_eq!(s.end, ps(&p, "n2:0"));
        assert_eq!(resolve(&p, &an, &s.effect, s.start), Some(s.end));
        assert_eq!(minimal_shortcut(&p, &an, ps(&p, "c:0"), 0), Err(Failure::Overflow));
    }

    #[test]
    fn pi0_table_has_one_entry() {
        let (p, an) = load(PI0);
        let t = build_effect_table(&p, &an, 1);
        assert_eq!(t.shortcuts().count(), 1);
        assert_eq!(t.entries.len(), p.pointed_sequents().len());
        assert_eq!(t.max_height(), 1);
    }

    #[test]
    fn shortcut_weights_are_axiom_then_b_path() {
        for src in [PI0, LEFT, RIGHT] {
            let (p, an) = load(src);
            for k in 0..4 {
                for s in build_effect_table(&p, &an, k).shortcuts() {
                    let a = s.letters.iter().position(|l| *l == Letter::A).unwrap();
                    assert!(s.letters[..a].iter().all(|l| *l == Letter::W));
                    assert!(grammar_member(&s.letters[a + 1..], Nonterminal::B));
                    assert!(athread_run(&s.letters).accepted());
                    let (f, g) = (&p.nodes[s.start.node].conclusion[s.start.index], &p.nodes[s.end.node].conclusion[s.end.index]);
                    assert!(f.equiv(g));
                }
            }
        }
    }

    #[test]
    fn right_proof_conclusion_unfolds_first() {
        let (p, an) = load(RIGHT);
        assert_eq!(minimal_shortcut(&p, &an, ps(&p, "c:0"), 3), Err(Failure::NotAxiomFirst));
        assert_eq!(minimal_shortcut(&p, &an, ps(&p, "x:0"), 3), Err(Failure::Escapes));
    }

    #[test]
    fn left_proof_bounces_with_empty_stack() {
        let (p, an) = load(LEFT);
        let s = minimal_shortcut(&p, &an, ps(&p, "c:0"), 0).unwrap();
        assert_eq!(s.max_height, 0);
        assert_eq!(s.effect.to_string(), "c_r");
    }

    #[test]
    fn resolve_side_conditions() {
        let (p, an) = load(PI0);
        let c0 = ps(&p, "c:0");
        assert_eq!(resolve(&p, &an, &RelAddr::default(), c0), Some(c0));
        assert_eq!(resolve(&p, &an, &RelAddr(vec![Jump::Sub(Dir::L)]), c0), None);
        assert_eq!(resolve(&p, &an, &RelAddr(vec![Jump::CutL]), c0), Some(ps(&p, "m:1")));
    }
}
