//! Well-formedness of pre-proofs and the per-node occurrence flow used by
//! every later pass.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Edge, NodeId, PreProof, Rule};
use crate::address::{overlapping_pair, Address, Dir, Occurrence, Sequent};
use crate::formula::Formula;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiagKind {
    Schema,
    ContextNotPartitioned,
    RenamingNotTotal,
    RenamingNotInjective,
    AncestorCondition,
    Unreachable,
    TreeShape,
    Overlap,
    CutNotFresh,
    Arity,
    UnsupportedFragment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub node: Option<String>,
    pub kind: DiagKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(n) => write!(f, "node {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Where a conclusion occurrence goes when moving up through the rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Context { premise: usize, index: usize },
    Principal,
    Axiom { partner: usize },
    Leaf,
}

/// Where a premise occurrence comes from when moving down through the rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Down {
    Context(usize),
    Sub(Dir),
    Cut,
}

#[derive(Clone, Debug, Default)]
pub struct NodeShape {
    pub flows: Vec<Flow>,
    pub principal: Option<usize>,
    /// Sub-occurrences of the principal: (letter, premise, index).
    pub subs: Vec<(Dir, usize, usize)>,
    /// Indices of the cut occurrences in premises 0 and 1.
    pub cut: Option<[usize; 2]>,
    pub premise_seqs: Vec<Sequent>,
    pub down: Vec<Vec<Down>>,
}

impl NodeShape {
    pub fn sub(&self, d: Dir) -> Option<(usize, usize)> {
        self.subs.iter().find(|(x, _, _)| *x == d).map(|(_, p, i)| (*p, *i))
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub shapes: Vec<NodeShape>,
    /// Tree parent and the premise slot the node occupies there.
    pub tree_parent: Vec<Option<(NodeId, usize)>>,
    pub depth: Vec<usize>,
}

impl Analysis {
    /// Tree path from the root to `n`, inclusive.
    pub fn tree_path(&self, n: NodeId) -> Vec<NodeId> {
        let mut out = vec![n];
        let mut cur = n;
        while let Some((p, _)) = self.tree_parent[cur] {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}

struct Ctx<'a> {
    p: &'a PreProof,
    diags: Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn push(&mut self, node: Option<NodeId>, kind: DiagKind, message: String) {
        let node = node.map(|n| self.p.nodes[n].name.clone());
        self.diags.push(Diagnostic { node, kind, message });
    }
}

pub fn validate(p: &PreProof) -> Vec<Diagnostic> {
    match analyze(p) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    }
}

/// Validate and, on success, compute the occurrence flow of every node.
pub fn analyze(p: &PreProof) -> Result<Analysis, Vec<Diagnostic>> {
    let mut cx = Ctx { p, diags: Vec::new() };
    if p.nodes.is_empty() || p.root >= p.nodes.len() {
        cx.push(None, DiagKind::TreeShape, "empty proof or root out of range".into());
        return Err(cx.diags);
    }
    let n = p.nodes.len();

    // tree shape
    let mut tree_parent: Vec<Option<(NodeId, usize)>> = vec![None; n];
    for (id, node) in p.nodes.iter().enumerate() {
        for (k, e) in node.premises.iter().enumerate() {
            if let Edge::Tree(c) = e {
                if *c == p.root {
                    cx.push(Some(id), DiagKind::TreeShape, "tree edge into the root".into());
                } else if tree_parent[*c].is_some() {
                    cx.push(Some(*c), DiagKind::TreeShape, "node has two tree parents".into());
                } else {
                    tree_parent[*c] = Some((id, k));
                }
            }
        }
    }
    let mut depth = vec![usize::MAX; n];
    let mut stack = vec![(p.root, 0usize)];
    while let Some((id, d)) = stack.pop() {
        if depth[id] != usize::MAX {
            continue;
        }
        depth[id] = d;
        for e in &p.nodes[id].premises {
            if let Edge::Tree(c) = e {
                stack.push((*c, d + 1));
            }
        }
    }
    for (id, d) in depth.iter().enumerate() {
        if *d == usize::MAX {
            cx.push(Some(id), DiagKind::Unreachable, "node not reachable from the root by tree edges".into());
        }
    }

    // cut freshness across the whole graph
    let mut cut_names: BTreeMap<String, NodeId> = BTreeMap::new();
    for (id, node) in p.nodes.iter().enumerate() {
        if let Rule::Cut(_, a) = &node.rule {
            if let Some(other) = cut_names.insert(a.name.clone(), id) {
                let other = p.nodes[other].name.clone();
                cx.push(Some(id), DiagKind::CutNotFresh, format!("cut atom '{}' also used by node {other}", a.name));
            }
        }
    }

    let mut shapes = Vec::with_capacity(n);
    for id in 0..n {
        shapes.push(check_node(&mut cx, id));
    }

    // ancestor condition
    for (id, node) in p.nodes.iter().enumerate() {
        for e in &node.premises {
            if let Edge::Back(t, _) = e {
                if depth[id] == usize::MAX {
                    continue;
                }
                let mut cur = Some(id);
                let mut ok = false;
                while let Some(c) = cur {
                    if c == *t {
                        ok = true;
                        break;
                    }
                    cur = tree_parent[c].map(|(q, _)| q);
                }
                if !ok {
                    let tn = p.nodes[*t].name.clone();
                    cx.push(Some(id), DiagKind::AncestorCondition, format!("back-edge target {tn} is not an ancestor"));
                }
            }
        }
    }

    if cx.diags.is_empty() {
        Ok(Analysis { shapes, tree_parent, depth })
    } else {
        Err(cx.diags)
    }
}

fn premise_sequent(cx: &mut Ctx, id: NodeId, e: &Edge) -> Option<Sequent> {
    let p = cx.p;
    match e {
        Edge::Tree(c) => Some(p.nodes[*c].conclusion.clone()),
        Edge::Back(t, ren) => {
            let target = &p.nodes[*t].conclusion;
            let mut ok = true;
            let mut used: Vec<(&Address, &Address)> = Vec::new();
            for o in target {
                match ren.key_for(&o.address) {
                    None => {
                        cx.push(
                            Some(id),
                            DiagKind::RenamingNotTotal,
                            format!("renaming not total: atom '{}' of {} unmapped", o.address.name, p.nodes[*t].name),
                        );
                        ok = false;
                    }
                    Some(k) => {
                        let v = &ren.0[k];
                        if !used.iter().any(|(u, _)| *u == k) {
                            if used.iter().any(|(_, w)| *w == v) {
                                cx.push(Some(id), DiagKind::RenamingNotInjective, format!("renaming sends two atoms to {v}"));
                                ok = false;
                            }
                            used.push((k, v));
                        }
                    }
                }
            }
            if !ok {
                return None;
            }
            ren.apply_seq(target)
        }
    }
}

fn check_node(cx: &mut Ctx, id: NodeId) -> NodeShape {
    let p = cx.p;
    let node = &p.nodes[id];
    let mut shape = NodeShape::default();
    let concl = &node.conclusion;

    if let Some((i, j)) = overlapping_pair(concl) {
        cx.push(Some(id), DiagKind::Overlap, format!("addresses {} and {} overlap", concl[i].address, concl[j].address));
    }
    for o in concl {
        if let Some(c) = o.formula.additive_connective() {
            cx.push(Some(id), DiagKind::UnsupportedFragment, format!("additive connective '{c}' is not supported"));
            return shape;
        }
    }
    if let Some(c) = node.rule.additive_name() {
        cx.push(Some(id), DiagKind::UnsupportedFragment, format!("additive rule '{c}' is not supported"));
        return shape;
    }
    if node.rule.arity() != node.premises.len() {
        cx.push(
            Some(id),
            DiagKind::Arity,
            format!("rule {} expects {} premises, found {}", node.rule.keyword(), node.rule.arity(), node.premises.len()),
        );
        return shape;
    }
    let mut prems = Vec::new();
    for e in &node.premises {
        match premise_sequent(cx, id, e) {
            Some(s) => prems.push(s),
            None => return shape,
        }
    }
    for (k, s) in prems.iter().enumerate() {
        if let Some((i, j)) = overlapping_pair(s) {
            cx.push(
                Some(id),
                DiagKind::Overlap,
                format!("premise {k}: addresses {} and {} overlap", s[i].address, s[j].address),
            );
            return shape;
        }
    }

    let find = |a: &Address| concl.iter().position(|o| &o.address == a);
    let schema = |cx: &mut Ctx, msg: String| cx.push(Some(id), DiagKind::Schema, msg);

    match &node.rule {
        Rule::Open => {
            shape.flows = vec![Flow::Leaf; concl.len()];
        }
        Rule::Ax(a, b) => {
            let (ia, ib) = match (find(a), find(b)) {
                (Some(x), Some(y)) if concl.len() == 2 && x != y => (x, y),
                _ => {
                    schema(cx, format!("axiom conclusion must be exactly the occurrences at {a} and {b}"));
                    return shape;
                }
            };
            if concl[ia].formula != concl[ib].formula.negate() {
                schema(cx, "axiom formulas are not dual".into());
                return shape;
            }
            shape.flows = vec![Flow::Leaf; 2];
            shape.flows[ia] = Flow::Axiom { partner: ib };
            shape.flows[ib] = Flow::Axiom { partner: ia };
        }
        Rule::One(a) => {
            if concl.len() != 1 || concl[0].address != *a || concl[0].formula != Formula::One {
                schema(cx, format!("one rule needs the conclusion to be exactly 1 @ {a}"));
                return shape;
            }
            shape.flows = vec![Flow::Principal];
            shape.principal = Some(0);
        }
        Rule::Cut(f, beta) => {
            if concl.iter().any(|o| o.address.name == beta.name) {
                cx.push(Some(id), DiagKind::CutNotFresh, format!("cut atom '{}' occurs in the conclusion", beta.name));
                return shape;
            }
            let left = Occurrence::new(f.clone(), beta.clone());
            let right = left.dual();
            let actives = vec![vec![left], vec![right]];
            if let Some(sh) = distribute(cx, id, concl, None, &prems, &actives) {
                shape = sh;
                shape.cut = Some([active_index(&prems[0], &actives[0][0]), active_index(&prems[1], &actives[1][0])]);
                for (k, idx) in shape.cut.unwrap().iter().enumerate() {
                    shape.down[k][*idx] = Down::Cut;
                }
            }
        }
        rule => {
            let a = rule.principal().expect("principal rule").clone();
            let pi = match find(&a) {
                Some(x) => x,
                None => {
                    schema(cx, format!("no occurrence at principal address {a}"));
                    return shape;
                }
            };
            let pf = &concl[pi];
            let actives: Vec<Vec<(Dir, Occurrence)>> = match (rule, &pf.formula) {
                (Rule::Tensor(_), Formula::Tensor(..)) => {
                    let (l, r) = pf.split().unwrap();
                    vec![vec![(Dir::L, l)], vec![(Dir::R, r)]]
                }
                (Rule::Par(_), Formula::Par(..)) => {
                    let (l, r) = pf.split().unwrap();
                    vec![vec![(Dir::L, l), (Dir::R, r)]]
                }
                (Rule::Bot(_), Formula::Bot) => vec![vec![]],
                (Rule::Mu(_), Formula::Mu(_)) | (Rule::Nu(_), Formula::Nu(_)) => {
                    vec![vec![(Dir::I, pf.unfold().unwrap())]]
                }
                _ => {
                    schema(cx, format!("rule {} does not match principal formula {}", rule.keyword(), pf.formula));
                    return shape;
                }
            };
            let plain: Vec<Vec<Occurrence>> =
                actives.iter().map(|v| v.iter().map(|(_, o)| o.clone()).collect()).collect();
            if let Some(sh) = distribute(cx, id, concl, Some(pi), &prems, &plain) {
                shape = sh;
                shape.flows[pi] = Flow::Principal;
                shape.principal = Some(pi);
                for (k, acts) in actives.iter().enumerate() {
                    for (d, o) in acts {
                        let idx = active_index(&prems[k], o);
                        shape.subs.push((*d, k, idx));
                        shape.down[k][idx] = Down::Sub(*d);
                    }
                }
            }
        }
    }
    shape.premise_seqs = prems;
    shape
}

fn active_index(prem: &[Occurrence], o: &Occurrence) -> usize {
    prem.iter().position(|x| x == o).expect("active occurrence present")
}

/// Check that the premises hold their active occurrences plus a partition
/// of the non-principal conclusion occurrences, and nothing else.
fn distribute(
    cx: &mut Ctx,
    id: NodeId,
    concl: &[Occurrence],
    principal: Option<usize>,
    prems: &[Sequent],
    actives: &[Vec<Occurrence>],
) -> Option<NodeShape> {
    let mut ok = true;
    let mut flows = vec![Flow::Leaf; concl.len()];
    let mut down: Vec<Vec<Option<Down>>> = prems.iter().map(|s| vec![None; s.len()]).collect();
    for (k, acts) in actives.iter().enumerate() {
        for a in acts {
            match prems[k].iter().position(|x| x == a) {
                Some(i) => down[k][i] = Some(Down::Cut),
                None => {
                    cx.push(Some(id), DiagKind::Schema, format!("premise {k} lacks active occurrence {a}"));
                    ok = false;
                }
            }
        }
    }
    for (ci, o) in concl.iter().enumerate() {
        if Some(ci) == principal {
            continue;
        }
        let mut hits = Vec::new();
        for (k, s) in prems.iter().enumerate() {
            if let Some(i) = s.iter().position(|x| x == o) {
                if down[k][i].is_none() {
                    hits.push((k, i));
                }
            }
        }
        if hits.len() != 1 {
            cx.push(
                Some(id),
                DiagKind::ContextNotPartitioned,
                format!("context not partitioned: {o} appears in {} premises", hits.len()),
            );
            ok = false;
            continue;
        }
        let (k, i) = hits[0];
        down[k][i] = Some(Down::Context(ci));
        flows[ci] = Flow::Context { premise: k, index: i };
    }
    for (k, s) in prems.iter().enumerate() {
        for (i, o) in s.iter().enumerate() {
            if down[k][i].is_none() {
                cx.push(Some(id), DiagKind::Schema, format!("premise {k} has unexpected occurrence {o}"));
                ok = false;
            }
        }
    }
    if !ok {
        return None;
    }
    Some(NodeShape {
        flows,
        principal: None,
        subs: Vec::new(),
        cut: None,
        premise_seqs: Vec::new(),
        down: down.into_iter().map(|v| v.into_iter().map(|d| d.unwrap()).collect()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::parse_proof;

    const LOOP: &str = "\
proof loop
node n0
  seq  nu X. X @ a
  rule nu@a
  prem back(n0; a->a:i)
root n0
";

    #[test]
    fn simple_loop_is_valid() {
        let p = parse_proof(LOOP).unwrap();
        let a = analyze(&p).unwrap();
        assert_eq!(a.shapes[0].principal, Some(0));
        assert_eq!(a.shapes[0].subs, vec![(Dir::I, 0, 0)]);
    }

    #[test]
    fn renaming_must_be_total() {
        let p = parse_proof(&LOOP.replace("back(n0; a->a:i)", "back(n0)")).unwrap();
        let d = validate(&p);
        assert!(d.iter().any(|d| d.kind == DiagKind::RenamingNotTotal && d.message.contains("renaming not total")));
    }

    #[test]
    fn tensor_context_must_partition() {
        let src = "\
proof bad
node t
  seq  1 * 1 @ a , bot @ b
  rule tensor@a
  prem p
  prem q
node p
  seq  1 @ a:l , bot @ b
  rule bot@b
  prem p1
node p1
  seq  1 @ a:l
  rule one@a:l
node q
  seq  1 @ a:r , bot @ b
  rule bot@b
  prem q1
node q1
  seq  1 @ a:r
  rule one@a:r
root t
";
        let p = parse_proof(src).unwrap();
        let d = validate(&p);
        assert!(d.iter().any(|d| d.message.contains("context not partitioned")), "{d:?}");
    }

    #[test]
    fn back_edge_needs_ancestor() {
        let src = "\
proof bad
node c
  seq  nu X. X @ a
  rule cut(1 @ k)
  prem l
  prem r
node l
  seq  nu X. X @ a , 1 @ k
  rule nu@a
  prem back(r; k->k, a->a:i)
node r
  seq  bot @ k^
  rule bot@k^
  prem back(l; k->k, a->a:i)
root c
";
        let p = parse_proof(src).unwrap();
        let d = validate(&p);
        assert!(d.iter().any(|d| d.kind == DiagKind::AncestorCondition), "{d:?}");
    }
}
