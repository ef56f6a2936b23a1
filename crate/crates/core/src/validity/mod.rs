//! Bounded-height validity of circular pre-proofs, the straight-thread
//! baseline, weak validity, and a brute-force oracle.

mod automaton;
mod oracle;
mod ramsey;
mod weak;

use serde::Serialize;
use thiserror::Error;

pub use automaton::{SThreadAutomaton, State, Trans};
pub use oracle::{oracle_check, oracle_lasso, OracleVerdict};
pub use ramsey::{check_inclusion, Explosion, Inclusion};
pub use weak::{lasso_weakly_valid, WeakBounds};

use crate::proof::{analyze, enumerate_all_lassos, Analysis, DiagKind, Diagnostic, Lasso, NodeId, PreProof};
use crate::shortcut::{build_effect_table, EffectTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Valid,
    Invalid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Bouncing,
    Straight,
    Weak,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    /// For `Invalid`: a branch with no validating thread.
    pub witness: Option<Lasso>,
    pub states: usize,
    pub shortcuts: usize,
    pub summaries: usize,
    pub subsets: usize,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.outcome == Outcome::Valid
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("malformed proof: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Malformed(Vec<Diagnostic>),
    #[error("unsupported fragment: {0}")]
    Unsupported(String),
    #[error("too many path summaries ({0})")]
    Explosion(usize),
}

/// Validate the graph, separating unsupported connectives from other errors.
pub fn prepare(p: &PreProof) -> Result<Analysis, CheckError> {
    analyze(p).map_err(|diags| match diags.iter().find(|d| d.kind == DiagKind::UnsupportedFragment) {
        Some(d) => CheckError::Unsupported(d.message.clone()),
        None => CheckError::Malformed(diags),
    })
}

/// Cut a repeated cycle down to its primitive root and rotate it so the
/// stem does not end with the cycle's last step.
fn normalize(mut stem: Vec<(NodeId, usize)>, mut cycle: Vec<(NodeId, usize)>) -> Lasso {
    let n = cycle.len();
    if let Some(d) = (1..=n).find(|d| n.is_multiple_of(*d) && (0..n).all(|i| cycle[i] == cycle[i % d])) {
        cycle.truncate(d);
    }
    while !stem.is_empty() && stem.last() == cycle.last() {
        stem.pop();
        cycle.rotate_right(1);
    }
    Lasso { stem, cycle }
}

fn run(p: &PreProof, an: &Analysis, table: Option<&EffectTable>) -> Result<Verdict, CheckError> {
    let ord = p.priority_order();
    let aut = SThreadAutomaton::build(p, an, table, &ord);
    let inc = check_inclusion(p, &aut).map_err(|Explosion(n)| CheckError::Explosion(n))?;
    let witness = inc.witness.map(|(s, c)| normalize(s, c));
    Ok(Verdict {
        outcome: if witness.is_none() { Outcome::Valid } else { Outcome::Invalid },
        witness,
        states: aut.state_count(),
        shortcuts: aut.shortcuts.len(),
        summaries: inc.summaries,
        subsets: inc.subsets,
    })
}

/// Every infinite branch is validated by a thread of height at most `k`.
pub fn check_k_valid(p: &PreProof, an: &Analysis, k: usize) -> Result<Verdict, CheckError> {
    let table = build_effect_table(p, an, k);
    run(p, an, Some(&table))
}

/// Every infinite branch carries a valid straight thread.
pub fn check_straight(p: &PreProof, an: &Analysis) -> Result<Verdict, CheckError> {
    run(p, an, None)
}

/// Every branch lasso within the bounds meets a valid thread of height at
/// most `k` infinitely often. Unsound as a proof criterion.
pub fn check_weak(p: &PreProof, an: &Analysis, k: usize, b: WeakBounds) -> Verdict {
    let ord = p.priority_order();
    let lassos = enumerate_all_lassos(p, b.lasso);
    let witness = lassos.iter().find(|l| !lasso_weakly_valid(p, an, &ord, l, k, b)).cloned();
    Verdict {
        outcome: if witness.is_none() { Outcome::Valid } else { Outcome::Invalid },
        witness,
        states: 0,
        shortcuts: 0,
        summaries: lassos.len(),
        subsets: 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinK {
    pub found: Option<usize>,
    pub kmax: usize,
    /// Largest height of any minimal shortcut computed with budget `kmax`.
    pub height_bound: usize,
}

pub fn find_min_k(p: &PreProof, an: &Analysis, kmax: usize) -> Result<MinK, CheckError> {
    let mut found = None;
    for k in 0..=kmax {
        if check_k_valid(p, an, k)?.is_valid() {
            found = Some(k);
            break;
        }
    }
    let height_bound = build_effect_table(p, an, kmax).max_height();
    Ok(MinK { found, kmax, height_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::parse_proof;

    fn load(src: &str) -> (PreProof, Analysis) {
        let p = parse_proof(src).unwrap();
        let an = prepare(&p).unwrap();
        (p, an)
    }

    const PI0: &str = include_str!("../../corpus/pi0.proof");
    const LEFT: &str = include_str!("../../corpus/validproofs_left.proof");
    const RIGHT: &str = include_str!("../../corpus/validproofs_right.proof");
    const UNSOUND: &str = include_str!("../../corpus/unsound.proof");
    const LOOP: &str = include_str!("../../corpus/loop.proof");
    const ADDITIVE: &str = include_str!("../../corpus/additive.proof");

    #[test]
    fn pi0_verdicts() {
        let (p, an) = load(PI0);
        assert!(!check_straight(&p, &an).unwrap().is_valid());
        let v0 = check_k_valid(&p, &an, 0).unwrap();
        assert!(!v0.is_valid());
        let w = v0.witness.unwrap();
        assert!(w.stem.is_empty());
        assert_eq!(w.cycle.len(), 3);
        assert!(check_k_valid(&p, &an, 1).unwrap().is_valid());
        let m = find_min_k(&p, &an, 4).unwrap();
        assert_eq!(m.found, Some(1));
        assert!(m.height_bound >= 1);
    }

    #[test]
    fn validproofs() {
        let (p, an) = load(LEFT);
        assert!(check_k_valid(&p, &an, 0).unwrap().is_valid());
        assert!(!check_straight(&p, &an).unwrap().is_valid());
        let (p, an) = load(RIGHT);
        for k in 0..=8 {
            assert!(!check_k_valid(&p, &an, k).unwrap().is_valid());
        }
        assert!(check_weak(&p, &an, 2, WeakBounds::default()).is_valid());
    }

    #[test]
    fn unsound_is_only_weakly_valid() {
        let (p, an) = load(UNSOUND);
        assert!(check_weak(&p, &an, 2, WeakBounds::default()).is_valid());
        for k in 0..=8 {
            assert!(!check_k_valid(&p, &an, k).unwrap().is_valid());
        }
    }

    #[test]
    fn cut_free_loop_is_straight_valid() {
        let (p, an) = load(LOOP);
        assert!(check_straight(&p, &an).unwrap().is_valid());
        assert!(check_weak(&p, &an, 0, WeakBounds::default()).is_valid());
    }

    #[test]
    fn additives_rejected() {
        let p = parse_proof(ADDITIVE).unwrap();
        match prepare(&p) {
            Err(CheckError::Unsupported(m)) => assert!(m.contains('+')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_agrees_on_golden_set() {
        for src in [PI0, LEFT, RIGHT, UNSOUND, LOOP] {
            let (p, an) = load(src);
            let ord = p.priority_order();
            for k in 0..3 {
                let t = build_effect_table(&p, &an, k);
                let a = check_k_valid(&p, &an, k).unwrap();
                let o = oracle_check(&p, &an, Some(&t), &ord, 8);
                assert_eq!(a.is_valid(), o.valid, "{} at k={k}", p.name);
                if let Some(w) = &a.witness {
                    assert!(!oracle_lasso(&p, &an, Some(&t), &ord, w));
                }
            }
        }
    }
}
