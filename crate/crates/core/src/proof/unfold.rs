//! Finite prefixes of the infinite derivation denoted by a circular proof.

use std::collections::BTreeMap;

use super::{Analysis, Edge, NodeId, PreProof, Renaming, Rule};
use crate::address::{Address, Sequent};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnfoldedNode {
    pub source: NodeId,
    pub conclusion: Sequent,
    pub rule: Rule,
    pub children: Vec<UnfoldedNode>,
    /// Premises exist but were cut off by the depth bound.
    pub open: bool,
}

impl UnfoldedNode {
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(|c| c.count()).sum::<usize>()
    }

    /// The same tree cut off at depth `d`.
    pub fn restrict(&self, d: usize) -> UnfoldedNode {
        let mut n = self.clone();
        if d == 0 {
            n.open = n.open || !n.children.is_empty();
            n.children.clear();
        } else {
            n.children = self.children.iter().map(|c| c.restrict(d - 1)).collect();
        }
        n
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a UnfoldedNode)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

pub(crate) fn rename_rule(r: &Rule, ren: &Renaming) -> Rule {
    let a = |x: &Address| ren.apply(x).unwrap_or_else(|| x.clone());
    match r {
        Rule::Ax(x, y) => Rule::Ax(a(x), a(y)),
        Rule::Cut(f, x) => Rule::Cut(f.clone(), a(x)),
        Rule::Tensor(x) => Rule::Tensor(a(x)),
        Rule::Par(x) => Rule::Par(a(x)),
        Rule::One(x) => Rule::One(a(x)),
        Rule::Bot(x) => Rule::Bot(a(x)),
        Rule::Mu(x) => Rule::Mu(a(x)),
        Rule::Nu(x) => Rule::Nu(a(x)),
        Rule::With(x) => Rule::With(a(x)),
        Rule::Plus(x, k) => Rule::Plus(a(x), *k),
        Rule::Top(x) => Rule::Top(a(x)),
        Rule::Open => Rule::Open,
    }
}

/// Unfold `p` from its root down to depth `d`. Back-edges are followed
/// with their renamings composed along the path; every copy of a cut gets
/// its own atom so no sequent ever holds two equal addresses.
pub fn unfold_to_depth(p: &PreProof, an: &Analysis, d: usize) -> UnfoldedNode {
    let root_names: BTreeMap<Address, Address> = p.nodes[p.root]
        .conclusion
        .iter()
        .map(|o| (Address::atomic(&o.address.name), Address::atomic(&o.address.name)))
        .collect();
    build(p, an, p.root, Renaming(root_names), d, &mut Vec::new(), false)
}

fn build(
    p: &PreProof,
    _an: &Analysis,
    id: NodeId,
    ren: Renaming,
    d: usize,
    path: &mut Vec<usize>,
    crossed: bool,
) -> UnfoldedNode {
    let node = &p.nodes[id];
    let mut ren = ren;
    let mut rule = node.rule.clone();
    if let Rule::Cut(f, beta) = &node.rule {
        let fresh = if crossed {
            let tag: String = path.iter().map(|k| char::from(b'0' + *k as u8)).collect();
            format!("{}'{}", beta.name, tag)
        } else {
            beta.name.clone()
        };
        ren.bind_atom(&beta.name, Address::atomic(&fresh));
        rule = Rule::Cut(f.clone(), Address::atomic(&fresh));
    } else {
        rule = rename_rule(&rule, &ren);
    }
    let conclusion = ren.apply_seq(&node.conclusion).expect("renaming covers the conclusion");
    let mut out = UnfoldedNode { source: id, conclusion, rule, children: Vec::new(), open: false };
    if node.premises.is_empty() {
        return out;
    }
    if d == 0 {
        out.open = true;
        return out;
    }
    for (k, e) in node.premises.iter().enumerate() {
        let (child, child_ren) = match e {
            Edge::Tree(c) => (*c, ren.clone()),
            Edge::Back(t, sigma) => (*t, ren.compose_after(sigma).expect("renaming covers the target")),
        };
        path.push(k);
        out.children.push(build(p, _an, child, child_ren, d - 1, path, crossed || e.is_back()));
        path.pop();
    }
    out
}
