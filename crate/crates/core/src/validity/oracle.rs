//! Brute-force check: enumerate branch lassos and search each product of
//! lasso positions with s-thread states for a good cycle.

use std::collections::{HashMap, VecDeque};

use crate::address::Dir;
use crate::priority::PriorityOrder;
use crate::proof::{enumerate_all_lassos, Analysis, Lasso, PointedSequent, PreProof, Rule};
use crate::shortcut::{jump, EffectTable, Jump, Shortcut};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum S {
    Idle,
    At(usize),
    Replay(usize, usize),
}

const NO_EVENT: u32 = u32::MAX;

struct Ctx<'a> {
    p: &'a PreProof,
    an: &'a Analysis,
    ord: &'a PriorityOrder,
    shortcuts: Vec<&'a Shortcut>,
}

impl Ctx<'_> {
    /// Successors of `s` at `node` when the branch leaves through `slot`.
    fn succ(&self, node: usize, s: S, slot: usize) -> Vec<(S, u32)> {
        let mut out = Vec::new();
        let from_follow = |idx: usize, out: &mut Vec<(S, u32)>| {
            let at = PointedSequent { node, index: idx };
            for j in [Jump::W, Jump::Sub(Dir::I), Jump::Sub(Dir::L), Jump::Sub(Dir::R)] {
                if let Some((sl, next)) = jump(self.p, self.an, j, at) {
                    if sl != slot {
                        continue;
                    }
                    let prio = match (j, &self.p.nodes[node].rule) {
                        (Jump::Sub(Dir::I), Rule::Mu(_) | Rule::Nu(_)) => {
                            self.ord.priority(&self.p.nodes[node].conclusion[idx].formula).unwrap()
                        }
                        _ => NO_EVENT,
                    };
                    out.push((S::At(next.index), prio));
                }
            }
            for (si, sc) in self.shortcuts.iter().enumerate() {
                if sc.start == at {
                    if let Some(r) = self.replay(si, 0, at, slot) {
                        out.push((r, NO_EVENT));
                    }
                }
            }
        };
        match s {
            S::Idle => {
                out.push((S::Idle, NO_EVENT));
                for idx in 0..self.p.nodes[node].conclusion.len() {
                    from_follow(idx, &mut out);
                }
            }
            S::At(idx) => from_follow(idx, &mut out),
            S::Replay(si, pos) => {
                let sc = self.shortcuts[si];
                let at = crate::shortcut::resolve(self.p, self.an, &crate::shortcut::RelAddr(sc.effect.0[..pos].to_vec()), sc.start)
                    .expect("prefix resolves");
                if let Some(r) = self.replay(si, pos, at, slot) {
                    out.push((r, NO_EVENT));
                }
            }
        }
        out
    }

    fn replay(&self, si: usize, pos: usize, at: PointedSequent, slot: usize) -> Option<S> {
        let sc = self.shortcuts[si];
        let (sl, next) = jump(self.p, self.an, sc.effect.0[pos], at)?;
        if sl != slot {
            return None;
        }
        Some(if pos + 1 == sc.effect.0.len() { S::At(next.index) } else { S::Replay(si, pos + 1) })
    }
}

/// Does some s-thread validate the branch `l`?
fn lasso_validated(cx: &Ctx, l: &Lasso) -> bool {
    let n = l.len();
    let wrap = |j: usize| if j + 1 == n { l.stem.len() } else { j + 1 };
    // Product graph.
    let mut ids: HashMap<(usize, S), usize> = HashMap::new();
    let mut edges: Vec<Vec<(usize, u32)>> = Vec::new();
    let mut queue = VecDeque::new();
    ids.insert((0, S::Idle), 0);
    edges.push(Vec::new());
    queue.push_back((0usize, S::Idle));
    while let Some((j, s)) = queue.pop_front() {
        let from = ids[&(j, s)];
        let (node, slot) = l.step(j);
        for (t, prio) in cx.succ(node, s, slot) {
            let key = (wrap(j), t);
            let to = match ids.get(&key) {
                Some(x) => *x,
                None => {
                    ids.insert(key, edges.len());
                    edges.push(Vec::new());
                    queue.push_back(key);
                    edges.len() - 1
                }
            };
            edges[from].push((to, prio));
        }
    }
    // All product states are reachable. Look for an edge of even priority
    // `p` on a cycle using only priorities ≥ p.
    let mut prios: Vec<u32> = edges.iter().flatten().map(|e| e.1).filter(|p| *p != NO_EVENT && p % 2 == 0).collect();
    prios.sort_unstable();
    prios.dedup();
    for p in prios {
        for (u, out) in edges.iter().enumerate() {
            for &(v, q) in out {
                if q != p {
                    continue;
                }
                let mut seen = vec![false; edges.len()];
                let mut stack = vec![v];
                seen[v] = true;
                while let Some(x) = stack.pop() {
                    if x == u {
                        return true;
                    }
                    for &(y, r) in &edges[x] {
                        if r >= p && !seen[y] {
                            seen[y] = true;
                            stack.push(y);
                        }
                    }
                }
            }
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleVerdict {
    pub valid: bool,
    pub witness: Option<Lasso>,
    pub lassos: usize,
    /// The bound is at least twice the node count. This is a heuristic
    /// for exhaustiveness, not a guarantee.
    pub complete: bool,
}

/// Check every lasso of length at most `bound`; `table = None` allows
/// straight threads only.
pub fn oracle_check(
    p: &PreProof,
    an: &Analysis,
    table: Option<&EffectTable>,
    ord: &PriorityOrder,
    bound: usize,
) -> OracleVerdict {
    let cx = Ctx { p, an, ord, shortcuts: table.map(|t| t.shortcuts().collect()).unwrap_or_default() };
    let lassos = enumerate_all_lassos(p, bound);
    let mut witness = None;
    for l in &lassos {
        if !lasso_validated(&cx, l) {
            witness = Some(l.clone());
            break;
        }
    }
    OracleVerdict { valid: witness.is_none(), witness, lassos: lassos.len(), complete: bound >= 2 * p.len() }
}

/// Re-check a single branch.
pub fn oracle_lasso(p: &PreProof, an: &Analysis, table: Option<&EffectTable>, ord: &PriorityOrder, l: &Lasso) -> bool {
    let cx = Ctx { p, an, ord, shortcuts: table.map(|t| t.shortcuts().collect()).unwrap_or_default() };
    lasso_validated(&cx, l)
}
