//! Inclusion of the branch language in the s-thread language, by closing
//! path summaries under composition and testing idempotent loops.

use std::collections::{HashMap, VecDeque};

use super::automaton::{SThreadAutomaton, NONE};
use crate::proof::{Edge, NodeId, PreProof};

const EVEN: u32 = 0x5555_5555;

/// Priority masks composed along a path: every pair of bits `a`, `b`
/// yields bit `min(a, b)`.
fn combine(x: u32, y: u32) -> u32 {
    let mut out = 0;
    let mut xs = x;
    while xs != 0 {
        let a = xs.trailing_zeros();
        xs &= xs - 1;
        let below = y & ((1u32 << a) - 1);
        out |= below;
        if y >> a != 0 {
            out |= 1 << a;
        }
    }
    out
}

fn compose(a: &[u32], b: &[u32], rows: usize, mid: usize, cols: usize) -> Vec<u32> {
    let mut out = vec![0u32; rows * cols];
    for q in 0..rows {
        for r in 0..mid {
            let x = a[q * mid + r];
            if x == 0 {
                continue;
            }
            for c in 0..cols {
                let y = b[r * cols + c];
                if y != 0 {
                    out[q * cols + c] |= combine(x, y);
                }
            }
        }
    }
    out
}

pub type Path = Vec<(NodeId, usize)>;

#[derive(Clone, Debug, Default)]
pub struct Inclusion {
    /// Stem and loop of a branch with no accepting run.
    pub witness: Option<(Path, Path)>,
    pub summaries: usize,
    pub subsets: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explosion(pub usize);

/// Target node, boolean matrix, parent item and the edge taken.
type Summary = (NodeId, Vec<u32>, usize, (NodeId, usize));

const SUMMARY_CAP: usize = 2_000_000;

fn sccs(p: &PreProof) -> Vec<usize> {
    // Iterative Tarjan.
    let n = p.nodes.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;
    for s in 0..n {
        if index[s] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(s, 0)];
        index[s] = next;
        low[s] = next;
        next += 1;
        stack.push(s);
        on[s] = true;
        while let Some(&mut (v, ref mut k)) = call.last_mut() {
            let prems = &p.nodes[v].premises;
            if *k < prems.len() {
                let w = prems[*k].target();
                *k += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on[w] = true;
                    call.push((w, 0));
                } else if on[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

fn bitset_has(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

/// Decide whether every infinite branch from the root has an accepting run.
pub fn check_inclusion(p: &PreProof, aut: &SThreadAutomaton) -> Result<Inclusion, Explosion> {
    let comp = sccs(p);
    let nontrivial = |n: NodeId| {
        p.nodes[n].premises.iter().any(|e| e.target() == n)
            || (0..p.nodes.len()).any(|m| m != n && comp[m] == comp[n])
    };
    let mut anchors: Vec<NodeId> = Vec::new();
    for n in &p.nodes {
        for e in &n.premises {
            if let Edge::Back(t, _) = e {
                if !anchors.contains(t) && nontrivial(*t) {
                    anchors.push(*t);
                }
            }
        }
    }
    anchors.sort_unstable();

    // Reachable state sets along stems.
    struct Entry {
        node: NodeId,
        set: Vec<u64>,
        parent: Option<(usize, (NodeId, usize))>,
    }
    let words = |n: NodeId| aut.states[n].len().div_ceil(64);
    let mut entries: Vec<Entry> = Vec::new();
    let mut index: HashMap<(NodeId, Vec<u64>), usize> = HashMap::new();
    let mut init = vec![0u64; words(p.root)];
    init[0] |= 1;
    index.insert((p.root, init.clone()), 0);
    entries.push(Entry { node: p.root, set: init, parent: None });
    let mut k = 0;
    while k < entries.len() {
        let (n, set) = (entries[k].node, entries[k].set.clone());
        for (slot, e) in p.nodes[n].premises.iter().enumerate() {
            let t = e.target();
            let mut next = vec![0u64; words(t)];
            for tr in aut.edges_from(n, slot) {
                if bitset_has(&set, tr.from) {
                    next[tr.to / 64] |= 1 << (tr.to % 64);
                }
            }
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry((t, next.clone())) {
                e.insert(entries.len());
                entries.push(Entry { node: t, set: next, parent: Some((k, (n, slot))) });
                if entries.len() > SUMMARY_CAP {
                    return Err(Explosion(entries.len()));
                }
            }
        }
        k += 1;
    }
    let stem_of = |mut i: usize| {
        let mut path = Vec::new();
        while let Some((j, e)) = entries[i].parent {
            path.push(e);
            i = j;
        }
        path.reverse();
        path
    };

    let mut out = Inclusion { witness: None, summaries: 0, subsets: entries.len() };
    for &a in &anchors {
        let qa = aut.states[a].len();
        let stems: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].node == a).collect();
        // Summaries from `a`, each with a representative path.
        let mut seen: HashMap<(NodeId, Vec<u32>), usize> = HashMap::new();
        let mut items: Vec<Summary> = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        let edge_summary = |n: NodeId, slot: usize| {
            let t = p.nodes[n].premises[slot].target();
            let cols = aut.states[t].len();
            let mut m = vec![0u32; aut.states[n].len() * cols];
            for tr in aut.edges_from(n, slot) {
                m[tr.from * cols + tr.to] |= 1 << tr.prio;
            }
            (t, m)
        };
        let mut push = |to: NodeId, m: Vec<u32>, parent: usize, edge: (NodeId, usize), items: &mut Vec<_>, queue: &mut VecDeque<usize>| {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry((to, m.clone())) {
                e.insert(items.len());
                items.push((to, m, parent, edge));
                queue.push_back(items.len() - 1);
            }
        };
        for slot in 0..p.nodes[a].premises.len() {
            let (t, m) = edge_summary(a, slot);
            if comp[t] == comp[a] {
                push(t, m, usize::MAX, (a, slot), &mut items, &mut queue);
            }
        }
        while let Some(i) = queue.pop_front() {
            if items.len() > SUMMARY_CAP {
                return Err(Explosion(items.len()));
            }
            let b = items[i].0;
            if b == a {
                let e = &items[i].1;
                let ee = compose(e, e, qa, qa, qa);
                if &ee == e {
                    let good: Vec<bool> = (0..qa)
                        .map(|s| (0..qa).any(|t| e[s * qa + t] != 0 && e[t * qa + t] & EVEN & !(1 << NONE) != 0))
                        .collect();
                    for &si in &stems {
                        let set = &entries[si].set;
                        if !(0..qa).any(|s| bitset_has(set, s) && good[s]) {
                            let mut cyc = Vec::new();
                            let mut j = i;
                            while j != usize::MAX {
                                cyc.push(items[j].3);
                                j = items[j].2;
                            }
                            cyc.reverse();
                            out.summaries += items.len();
                            out.witness = Some((stem_of(si), cyc));
                            return Ok(out);
                        }
                    }
                }
            }
            let qb = aut.states[b].len();
            for slot in 0..p.nodes[b].premises.len() {
                let (c, m) = edge_summary(b, slot);
                if comp[c] != comp[a] {
                    continue;
                }
                let qc = aut.states[c].len();
                let composed = compose(&items[i].1, &m, qa, qb, qc);
                push(c, composed, i, (b, slot), &mut items, &mut queue);
            }
        }
        out.summaries += items.len();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_takes_minimum() {
        assert_eq!(combine(1 << 3, 1 << 5), 1 << 3);
        assert_eq!(combine(1 << 3 | 1 << NONE, 1 << 2), 1 << 2);
        assert_eq!(combine(1 << NONE, 1 << NONE), 1 << NONE);
        assert_eq!(combine(1 << 4 | 1 << 6, 1 << 5), 1 << 4 | 1 << 5);
        assert_eq!(combine(0, 1), 0);
    }
}
