//! Ultimately periodic branches of a circular proof.

use super::{NodeId, PreProof};

/// A branch `stem · cycle^ω`. Each step is `(node, premise slot)`; the
/// cycle starts at the node reached by the stem and returns to it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lasso {
    pub stem: Vec<(NodeId, usize)>,
    pub cycle: Vec<(NodeId, usize)>,
}

impl Lasso {
    pub fn len(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    /// The `k`-th step of the infinite branch.
    pub fn step(&self, k: usize) -> (NodeId, usize) {
        if k < self.stem.len() {
            self.stem[k]
        } else {
            self.cycle[(k - self.stem.len()) % self.cycle.len()]
        }
    }

    pub fn describe(&self, p: &PreProof) -> String {
        let fmt = |v: &[(NodeId, usize)]| {
            v.iter().map(|(n, k)| format!("{}.{}", p.nodes[*n].name, k)).collect::<Vec<_>>().join(" ")
        };
        format!("stem [{}] cycle [{}]", fmt(&self.stem), fmt(&self.cycle))
    }
}

/// All simple lassos: the path visits no node twice before closing the cycle.
pub fn enumerate_lassos(p: &PreProof, max_len: usize) -> Vec<Lasso> {
    let mut out = Vec::new();
    let mut path: Vec<(NodeId, usize)> = Vec::new();
    let mut on_path: Vec<NodeId> = Vec::new();
    dfs(p, p.root, max_len, &mut path, &mut on_path, &mut out);
    out
}

fn dfs(
    p: &PreProof,
    n: NodeId,
    max_len: usize,
    path: &mut Vec<(NodeId, usize)>,
    on_path: &mut Vec<NodeId>,
    out: &mut Vec<Lasso>,
) {
    on_path.push(n);
    for (k, e) in p.nodes[n].premises.iter().enumerate() {
        if path.len() + 1 > max_len {
            break;
        }
        let t = e.target();
        path.push((n, k));
        if let Some(j) = on_path.iter().position(|x| *x == t) {
            out.push(Lasso { stem: path[..j].to_vec(), cycle: path[j..].to_vec() });
        } else {
            dfs(p, t, max_len, path, on_path, out);
        }
        path.pop();
    }
    on_path.pop();
}

/// Every lasso `stem · cycle^ω` with `|stem| + |cycle| ≤ bound`, nodes may
/// repeat. Cycles are kept only in a rotation-free canonical form: the
/// stem never ends with the cycle's last step.
pub fn enumerate_all_lassos(p: &PreProof, bound: usize) -> Vec<Lasso> {
    let mut out = Vec::new();
    let mut stem = Vec::new();
    walk_stems(p, p.root, bound, &mut stem, &mut out);
    out
}

fn walk_stems(p: &PreProof, n: NodeId, bound: usize, stem: &mut Vec<(NodeId, usize)>, out: &mut Vec<Lasso>) {
    let mut cycle = Vec::new();
    walk_cycles(p, n, n, bound - stem.len(), stem, &mut cycle, out);
    if stem.len() < bound {
        for (k, e) in p.nodes[n].premises.iter().enumerate() {
            stem.push((n, k));
            walk_stems(p, e.target(), bound, stem, out);
            stem.pop();
        }
    }
}

fn walk_cycles(
    p: &PreProof,
    start: NodeId,
    n: NodeId,
    budget: usize,
    stem: &[(NodeId, usize)],
    cycle: &mut Vec<(NodeId, usize)>,
    out: &mut Vec<Lasso>,
) {
    if cycle.len() >= budget {
        return;
    }
    for (k, e) in p.nodes[n].premises.iter().enumerate() {
        cycle.push((n, k));
        if e.target() == start && stem.last() != cycle.last() && is_primitive(cycle) {
            out.push(Lasso { stem: stem.to_vec(), cycle: cycle.clone() });
        }
        walk_cycles(p, start, e.target(), budget, stem, cycle, out);
        cycle.pop();
    }
}

fn is_primitive(c: &[(NodeId, usize)]) -> bool {
    let n = c.len();
    (1..n).filter(|d| n.is_multiple_of(*d)).all(|d| (0..n).any(|i| c[i] != c[i % d]))
}
