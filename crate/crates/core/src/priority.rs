//! Closure of a set of formulas and the parity priorities used to decide
//! which recurring fixed point wins along a thread.
//!
//! The priority of a closed fixed-point formula depends on the formula
//! alone: `2·rank + (1 if μ)`, where `rank` is the length of the longest
//! chain of closed fixed-point strict subterms below it. A strict subterm
//! therefore always gets a smaller (more significant) priority.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::formula::{Binder, Formula};

/// Closure bound; closed formulas have finite closures far below this.
const CLOSURE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Default)]
pub struct PriorityOrder {
    closure: BTreeSet<Formula>,
    priorities: BTreeMap<Formula, u32>,
}

impl PriorityOrder {
    pub fn closure(&self) -> &BTreeSet<Formula> {
        &self.closure
    }

    /// Priority of a fixed-point formula (even for ν, odd for μ).
    pub fn priority(&self, f: &Formula) -> Option<u32> {
        let (b, _) = f.binder()?;
        if let Some(p) = self.priorities.get(f) {
            return Some(*p);
        }
        Some(priority_of(b, fixpoint_rank(f)))
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.closure.contains(f)
    }

    pub fn fixpoints(&self) -> impl Iterator<Item = (&Formula, u32)> {
        self.priorities.iter().map(|(f, p)| (f, *p))
    }
}

fn priority_of(b: Binder, rank: u32) -> u32 {
    2 * rank + if b == Binder::Mu { 1 } else { 0 }
}

/// Longest chain of closed fixed-point subterms strictly below `f`, plus
/// one for `f` itself when it is a fixed point; counted from zero.
pub fn fixpoint_rank(f: &Formula) -> u32 {
    let below = inner_rank(f, true);
    below.map(|r| r + 1).unwrap_or(0)
}

/// Highest rank among closed fixed-point strict subterms of `f`.
fn inner_rank(f: &Formula, top: bool) -> Option<u32> {
    if !top && f.is_fixpoint() && f.is_closed() {
        return Some(fixpoint_rank(f));
    }
    match f {
        Formula::Tensor(a, b) | Formula::Par(a, b) | Formula::Plus(a, b) | Formula::With(a, b) => {
            match (inner_rank(a, false), inner_rank(b, false)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
        Formula::Mu(b) | Formula::Nu(b) => inner_rank(b, false),
        _ => None,
    }
}

/// Close `roots ∪ cuts ∪ cuts⊥` under decomposition and unfolding and
/// assign a priority to every fixed point of the closure.
pub fn build_priority_order<'a>(
    roots: impl IntoIterator<Item = &'a Formula>,
    cuts: impl IntoIterator<Item = &'a Formula>,
) -> PriorityOrder {
    let mut queue: VecDeque<Formula> = roots.into_iter().cloned().collect();
    for c in cuts {
        queue.push_back(c.clone());
        queue.push_back(c.negate());
    }
    let mut closure = BTreeSet::new();
    while let Some(f) = queue.pop_front() {
        if closure.contains(&f) {
            continue;
        }
        assert!(closure.len() < CLOSURE_LIMIT, "formula closure exceeded {CLOSURE_LIMIT} members");
        if let Some((_, a, b)) = f.split_binary() {
            queue.push_back(a.clone());
            queue.push_back(b.clone());
        }
        if let Some(u) = f.unfold() {
            queue.push_back(u);
        }
        closure.insert(f);
    }
    let priorities = closure
        .iter()
        .filter_map(|f| f.binder().map(|(b, _)| (f.clone(), priority_of(b, fixpoint_rank(f)))))
        .collect();
    PriorityOrder { closure, priorities }
}

/// True when `small` is a strict syntactic subterm of `big`.
pub fn is_strict_subterm(small: &Formula, big: &Formula) -> bool {
    match big {
        Formula::Tensor(a, b) | Formula::Par(a, b) | Formula::Plus(a, b) | Formula::With(a, b) => {
            **a == *small || **b == *small || is_strict_subterm(small, a) || is_strict_subterm(small, b)
        }
        Formula::Mu(b) | Formula::Nu(b) => **b == *small || is_strict_subterm(small, b),
        _ => false,
    }
}
