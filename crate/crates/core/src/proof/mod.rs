//! Circular pre-proofs: rule nodes, tree edges and back-edges carrying
//! address renamings.

mod check;
mod lasso;
mod text;
mod unfold;

use std::collections::BTreeMap;
use std::fmt;

pub use check::{analyze, validate, Analysis, DiagKind, Diagnostic, Down, Flow, NodeShape};
pub use lasso::{enumerate_all_lassos, enumerate_lassos, Lasso};
pub use text::{parse_proof, serialize_proof, ProofParseError};
pub use unfold::{unfold_to_depth, UnfoldedNode};
pub(crate) use unfold::rename_rule;

use crate::address::{Address, Occurrence, Sequent};
use crate::formula::Formula;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    Ax(Address, Address),
    /// Cut formula placed at the given atomic address in the left premise,
    /// its dual at the dual address in the right premise.
    Cut(Formula, Address),
    Tensor(Address),
    Par(Address),
    One(Address),
    Bot(Address),
    Mu(Address),
    Nu(Address),
    With(Address),
    Plus(Address, u8),
    Top(Address),
    /// Truncation marker used when printing finite prefixes.
    Open,
}

impl Rule {
    pub fn arity(&self) -> usize {
        match self {
            Rule::Ax(..) | Rule::One(_) | Rule::Top(_) | Rule::Open => 0,
            Rule::Cut(..) | Rule::Tensor(_) | Rule::With(_) => 2,
            _ => 1,
        }
    }

    pub fn principal(&self) -> Option<&Address> {
        match self {
            Rule::Tensor(a)
            | Rule::Par(a)
            | Rule::One(a)
            | Rule::Bot(a)
            | Rule::Mu(a)
            | Rule::Nu(a)
            | Rule::With(a)
            | Rule::Plus(a, _)
            | Rule::Top(a) => Some(a),
            _ => None,
        }
    }

    pub fn additive_name(&self) -> Option<&'static str> {
        match self {
            Rule::With(_) => Some("&"),
            Rule::Plus(..) => Some("+"),
            Rule::Top(_) => Some("top"),
            _ => None,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Rule::Ax(..) => "ax",
            Rule::Cut(..) => "cut",
            Rule::Tensor(_) => "tensor",
            Rule::Par(_) => "par",
            Rule::One(_) => "one",
            Rule::Bot(_) => "bot",
            Rule::Mu(_) => "mu",
            Rule::Nu(_) => "nu",
            Rule::With(_) => "with",
            Rule::Plus(_, 1) => "plus1",
            Rule::Plus(..) => "plus2",
            Rule::Top(_) => "top",
            Rule::Open => "open",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Ax(a, b) => write!(f, "ax({a}, {b})"),
            Rule::Cut(g, a) => write!(f, "cut({g} @ {a})"),
            Rule::Open => write!(f, "open"),
            other => write!(f, "{}@{}", other.keyword(), other.principal().expect("principal rule")),
        }
    }
}

/// Renaming of address prefixes. A positive atomic key renames the atom
/// and, through duality, its dual; any other key renames the addresses it
/// is a prefix of. The longest matching key wins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming(pub BTreeMap<Address, Address>);

impl Renaming {
    /// Bind `from` to `to`, normalizing dual atomic keys.
    pub fn insert(&mut self, from: Address, to: Address) {
        if from.is_atomic() && from.dual {
            self.0.insert(from.dual(), to.dual());
        } else {
            self.0.insert(from, to);
        }
    }

    /// Rebind a whole atom, dropping every longer key on it.
    pub fn bind_atom(&mut self, name: &str, to: Address) {
        self.0.retain(|k, _| k.name != name);
        self.0.insert(Address::atomic(name), to);
    }

    fn lookup(&self, a: &Address) -> Option<(&Address, &Address)> {
        let mut best: Option<(&Address, &Address)> = None;
        for (k, v) in self.0.range(Address::atomic(&a.name)..) {
            if k.name != a.name {
                break;
            }
            let hit = if k.is_atomic() && !k.dual { true } else { k.is_prefix_of(a) };
            if hit && best.is_none_or(|(b, _)| b.path.len() < k.path.len()) {
                best = Some((k, v));
            }
        }
        best
    }

    pub fn apply(&self, a: &Address) -> Option<Address> {
        let (k, img) = self.lookup(a)?;
        let base = if a.dual && !k.dual && k.is_atomic() { img.dual() } else { img.clone() };
        Some(base.extend(&a.path[k.path.len()..]))
    }

    /// The key used to rename `a`.
    pub fn key_for(&self, a: &Address) -> Option<&Address> {
        self.lookup(a).map(|(k, _)| k)
    }

    pub fn apply_occ(&self, o: &Occurrence) -> Option<Occurrence> {
        Some(Occurrence::new(o.formula.clone(), self.apply(&o.address)?))
    }

    pub fn apply_seq(&self, s: &[Occurrence]) -> Option<Sequent> {
        s.iter().map(|o| self.apply_occ(o)).collect()
    }

    /// `self` after `inner`: first rename by `inner`, then by `self`.
    pub fn compose_after(&self, inner: &Renaming) -> Option<Renaming> {
        let mut out = BTreeMap::new();
        for (k, v) in &inner.0 {
            // A positive atomic key also stands for its dual; `self` may
            // only know that side.
            let img = match self.apply(v) {
                Some(a) => a,
                None if k.is_atomic() && !k.dual => self.apply(&v.dual())?.dual(),
                None => return None,
            };
            out.insert(k.clone(), img);
        }
        Some(Renaming(out))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Edge {
    Tree(NodeId),
    Back(NodeId, Renaming),
}

impl Edge {
    pub fn target(&self) -> NodeId {
        match self {
            Edge::Tree(n) | Edge::Back(n, _) => *n,
        }
    }

    pub fn is_back(&self) -> bool {
        matches!(self, Edge::Back(..))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    pub name: String,
    pub conclusion: Sequent,
    pub rule: Rule,
    pub premises: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreProof {
    pub name: String,
    pub nodes: Vec<ProofNode>,
    pub root: NodeId,
}

/// A node together with an occurrence index of its conclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointedSequent {
    pub node: NodeId,
    pub index: usize,
}

impl PreProof {
    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn node(&self, id: NodeId) -> &ProofNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn pointed_sequents(&self) -> Vec<PointedSequent> {
        let mut out = Vec::new();
        for (node, n) in self.nodes.iter().enumerate() {
            for index in 0..n.conclusion.len() {
                out.push(PointedSequent { node, index });
            }
        }
        out
    }

    pub fn format_pointed(&self, p: PointedSequent) -> String {
        format!("{}:{}", self.nodes[p.node].name, p.index)
    }

    /// First additive connective used by a rule or a conclusion formula.
    pub fn additive_connective(&self) -> Option<&'static str> {
        for n in &self.nodes {
            if let Some(c) = n.rule.additive_name() {
                return Some(c);
            }
            for o in &n.conclusion {
                if let Some(c) = o.formula.additive_connective() {
                    return Some(c);
                }
            }
            if let Rule::Cut(f, _) = &n.rule {
                if let Some(c) = f.additive_connective() {
                    return Some(c);
                }
            }
        }
        None
    }

    pub fn cut_formulas(&self) -> Vec<&Formula> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.rule {
                Rule::Cut(f, _) => Some(f),
                _ => None,
            })
            .collect()
    }

    pub fn root_formulas(&self) -> Vec<&Formula> {
        self.nodes[self.root].conclusion.iter().map(|o| &o.formula).collect()
    }

    pub fn priority_order(&self) -> crate::priority::PriorityOrder {
        crate::priority::build_priority_order(self.root_formulas(), self.cut_formulas())
    }
}
