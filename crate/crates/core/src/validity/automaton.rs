//! The s-thread automaton: reads branch edges `(node, premise slot)` and
//! guesses a thread made of straight steps and effect jumps.

use crate::address::Dir;
use crate::priority::PriorityOrder;
use crate::proof::{Analysis, NodeId, PointedSequent, PreProof, Rule};
use crate::shortcut::{jump, EffectTable, Jump, Shortcut};

/// Bit used for "no priority event" in priority masks; also the largest.
pub const NONE: u32 = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum State {
    Idle,
    Follow(usize),
    /// Replaying shortcut `shortcut`, `pos` letters already consumed.
    Replay { shortcut: usize, pos: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trans {
    pub from: usize,
    pub to: usize,
    /// Priority of the event, or [`NONE`].
    pub prio: u32,
}

pub struct SThreadAutomaton {
    /// Local states per node.
    pub states: Vec<Vec<State>>,
    /// Transitions per node and premise slot, local indices.
    pub trans: Vec<Vec<Vec<Trans>>>,
    pub shortcuts: Vec<Shortcut>,
}

fn local(states: &[State], s: State) -> usize {
    states.iter().position(|x| *x == s).expect("state registered")
}

impl SThreadAutomaton {
    /// Build the automaton; `table = None` gives straight threads only.
    pub fn build(p: &PreProof, an: &Analysis, table: Option<&EffectTable>, ord: &PriorityOrder) -> Self {
        let shortcuts: Vec<Shortcut> = table.map(|t| t.shortcuts().cloned().collect()).unwrap_or_default();
        let mut states: Vec<Vec<State>> = p
            .nodes
            .iter()
            .map(|n| std::iter::once(State::Idle).chain((0..n.conclusion.len()).map(State::Follow)).collect())
            .collect();
        // Pointed sequents visited by each effect, in order.
        let mut tracks: Vec<Vec<(usize, PointedSequent)>> = Vec::new();
        for (si, s) in shortcuts.iter().enumerate() {
            let mut at = s.start;
            let mut track = Vec::new();
            for (pos, j) in s.effect.0.iter().enumerate() {
                let (slot, next) = jump(p, an, *j, at).expect("effect resolves");
                track.push((slot, next));
                if pos + 1 < s.effect.0.len() {
                    states[next.node].push(State::Replay { shortcut: si, pos: pos + 1 });
                }
                at = next;
            }
            tracks.push(track);
        }

        let effect_at = |at: PointedSequent| shortcuts.iter().position(|s| s.start == at);
        let mut trans: Vec<Vec<Vec<Trans>>> =
            p.nodes.iter().map(|n| vec![Vec::new(); n.premises.len()]).collect();
        for (n, row) in trans.iter_mut().enumerate() {
            for (slot, cell) in row.iter_mut().enumerate() {
                let t = p.nodes[n].premises[slot].target();
                let mut out = Vec::new();
                for (fi, st) in states[n].iter().enumerate() {
                    let mut follows: Vec<usize> = Vec::new();
                    match *st {
                        State::Idle => {
                            out.push(Trans { from: fi, to: local(&states[t], State::Idle), prio: NONE });
                            follows.extend(0..p.nodes[n].conclusion.len());
                        }
                        State::Follow(idx) => follows.push(idx),
                        State::Replay { shortcut, pos } => {
                            let (s_slot, next) = tracks[shortcut][pos];
                            if s_slot == slot {
                                let to = replay_target(&states[t], &shortcuts[shortcut], shortcut, pos + 1, next);
                                out.push(Trans { from: fi, to, prio: NONE });
                            }
                        }
                    }
                    for idx in follows {
                        let at = PointedSequent { node: n, index: idx };
                        for j in [Jump::W, Jump::Sub(Dir::I), Jump::Sub(Dir::L), Jump::Sub(Dir::R)] {
                            if let Some((s, next)) = jump(p, an, j, at) {
                                if s == slot {
                                    let prio = match (j, &p.nodes[n].rule) {
                                        (Jump::Sub(Dir::I), Rule::Mu(_) | Rule::Nu(_)) => {
                                            let f = &p.nodes[n].conclusion[idx].formula;
                                            ord.priority(f).expect("fixed point")
                                        }
                                        _ => NONE,
                                    };
                                    assert!(prio <= NONE, "priority too large");
                                    out.push(Trans { from: fi, to: local(&states[t], State::Follow(next.index)), prio });
                                }
                            }
                        }
                        if let Some(si) = effect_at(at) {
                            let (s_slot, next) = tracks[si][0];
                            if s_slot == slot {
                                let to = replay_target(&states[t], &shortcuts[si], si, 1, next);
                                out.push(Trans { from: fi, to, prio: NONE });
                            }
                        }
                    }
                }
                out.sort_by_key(|x| (x.from, x.to, x.prio));
                out.dedup();
                *cell = out;
            }
        }
        SThreadAutomaton { states, trans, shortcuts }
    }

    pub fn state_count(&self) -> usize {
        self.states.iter().map(|v| v.len()).sum()
    }

    pub fn idle(&self) -> usize {
        0
    }

    pub fn edges_from(&self, n: NodeId, slot: usize) -> &[Trans] {
        &self.trans[n][slot]
    }
}

fn replay_target(states: &[State], s: &Shortcut, si: usize, pos: usize, next: PointedSequent) -> usize {
    if pos == s.effect.0.len() {
        local(states, State::Follow(next.index))
    } else {
        local(states, State::Replay { shortcut: si, pos })
    }
}
