//! Explicit pre-threads: weights, decomposition, height and validity.

use std::collections::HashMap;

use thiserror::Error;

use super::dpda::{athread_run, Athread, Config, Move, RunResult};
use super::{Letter, Motion};
use crate::address::{Address, Occurrence};
use crate::formula::Formula;
use crate::priority::PriorityOrder;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub occ: Occurrence,
    pub motion: Motion,
}

impl Step {
    pub fn up(occ: Occurrence) -> Step {
        Step { occ, motion: Motion::Up }
    }

    pub fn down(occ: Occurrence) -> Step {
        Step { occ, motion: Motion::Down }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightError {
    #[error("steps {position} and {} are not related: {from} then {to}", position + 1)]
    Malformed { position: usize, from: Address, to: Address },
}

/// The weight of a finite pre-thread, one letter per consecutive pair.
pub fn weight(t: &[Step]) -> Result<Vec<Letter>, WeightError> {
    let mut out = Vec::new();
    for (position, pair) in t.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let l = match (a.motion, b.motion) {
            (Motion::Up, Motion::Down) => Letter::A,
            (Motion::Down, Motion::Up) => Letter::C,
            _ => {
                let (x, y) = (&a.occ.address, &b.occ.address);
                if x == y {
                    Letter::W
                } else if let Some(d) = x.extension_letter(y) {
                    Letter::Open(d)
                } else if let Some(d) = y.extension_letter(x) {
                    Letter::Close(d)
                } else {
                    return Err(WeightError::Malformed { position, from: x.clone(), to: y.clone() });
                }
            }
        };
        out.push(l);
    }
    Ok(out)
}

pub fn is_thread(t: &[Step]) -> bool {
    weight(t).map(|w| athread_run(&w).accepted()).unwrap_or(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Visible,
    Hidden,
}

/// A half-open range of letters. Letter `k` joins steps `k` and `k+1`, so
/// neighbouring blocks share their boundary step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    /// Starts with the (possibly empty) block `V₀`, then alternates.
    pub blocks: Vec<Block>,
}

impl Decomposition {
    pub fn visible(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.kind == BlockKind::Visible)
    }

    pub fn hidden(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.kind == BlockKind::Hidden)
    }

    /// Concatenation of the blocks' letters.
    pub fn reconstruct(&self, w: &[Letter]) -> Vec<Letter> {
        self.blocks.iter().flat_map(|b| w[b.start..b.end].iter().copied()).collect()
    }

    pub fn is_stationary(&self, w: &[Letter]) -> bool {
        self.visible().all(|b| w[b.start..b.end].iter().all(|l| *l == Letter::W))
    }
}

/// Split a thread weight into visible and hidden blocks; `None` when the
/// automaton rejects.
pub fn decompose(w: &[Letter]) -> Option<Decomposition> {
    let moves = match athread_run(w) {
        RunResult::Accept { moves, .. } => moves,
        RunResult::Reject { .. } => return None,
    };
    let mut blocks = vec![Block { kind: BlockKind::Visible, start: 0, end: 0 }];
    for (k, m) in moves.iter().enumerate() {
        let kind = if *m == Move::Visible { BlockKind::Visible } else { BlockKind::Hidden };
        let last = blocks.last_mut().unwrap();
        if last.kind == kind {
            last.end = k + 1;
        } else {
            blocks.push(Block { kind, start: k, end: k + 1 });
        }
    }
    Some(Decomposition { blocks })
}

/// Maximal stack size along the run; `None` when not a thread.
pub fn height(w: &[Letter]) -> Option<usize> {
    match athread_run(w) {
        RunResult::Accept { max_height, .. } => Some(max_height),
        RunResult::Reject { .. } => None,
    }
}

/// An infinite thread presented as a lasso: `letters[j]` joins step `j` to
/// step `j+1`, and the last letter joins the last step back to
/// `loop_start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoThread {
    pub formulas: Vec<Formula>,
    pub letters: Vec<Letter>,
    pub loop_start: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThreadVerdict {
    Valid,
    Invalid,
    Stationary,
    NotAThread,
}

struct LassoRun {
    max_height: Option<usize>,
    /// Configuration at a loop boundary that recurs, and the number of
    /// loop iterations between recurrences.
    periodic: Option<(Config, usize)>,
}

const LOOP_ROUNDS: usize = 256;

fn run_lasso(t: &LassoThread) -> Option<LassoRun> {
    let mut a = Athread::new();
    for l in &t.letters[..t.loop_start] {
        a.feed(*l).ok()?;
    }
    let cycle = &t.letters[t.loop_start..];
    if cycle.is_empty() {
        return None;
    }
    let mut seen: HashMap<Config, usize> = HashMap::new();
    for round in 0..LOOP_ROUNDS {
        if let Some(first) = seen.insert(a.config.clone(), round) {
            return Some(LassoRun { max_height: Some(a.max_height), periodic: Some((a.config, round - first)) });
        }
        for l in cycle {
            a.feed(*l).ok()?;
        }
    }
    Some(LassoRun { max_height: None, periodic: None })
}

/// Height of a lasso thread: `Ok(None)` stands for ω.
pub fn lasso_height(t: &LassoThread) -> Result<Option<usize>, ThreadVerdict> {
    run_lasso(t).map(|r| r.max_height).ok_or(ThreadVerdict::NotAThread)
}

/// Validity of a lasso thread: the least priority among formulas visibly
/// decomposed infinitely often must be even.
pub fn thread_valid(t: &LassoThread, ord: &PriorityOrder) -> ThreadVerdict {
    let run = match run_lasso(t) {
        Some(r) => r,
        None => return ThreadVerdict::NotAThread,
    };
    // An ever-growing stack never empties again: nothing is visible.
    let (config, rounds) = match run.periodic {
        Some(p) => p,
        None => return ThreadVerdict::Stationary,
    };
    let mut a = Athread::from_config(config);
    let mut best: Option<u32> = None;
    let mut moved = false;
    for _ in 0..rounds {
        for j in t.loop_start..t.letters.len() {
            let l = t.letters[j];
            let m = a.feed(l).expect("periodic run replays");
            if m == Move::Visible && l != Letter::W {
                moved = true;
                if let Some(p) = ord.priority(&t.formulas[j]) {
                    best = Some(best.map_or(p, |b| b.min(p)));
                }
            }
        }
    }
    match (moved, best) {
        (false, _) => ThreadVerdict::Stationary,
        (true, Some(p)) if p % 2 == 0 => ThreadVerdict::Valid,
        _ => ThreadVerdict::Invalid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::parse_address;
    use crate::formula::parse_formula;
    use crate::thread::parse_word;

    fn occ(f: &str, a: &str) -> Occurrence {
        Occurrence::new(parse_formula(f).unwrap(), parse_address(a).unwrap())
    }

    /// The two coloured pre-threads of the example with a cut on
    /// `F'⅋G'`, written with `F = νX.X @ d:l` and `G = νX.X @ d:r`.
    fn example(left: bool) -> Vec<Step> {
        let phi = "nu X. X";
        let pg = "(nu X. X) | (nu X. X)";
        let dual = "(mu X. X) * (mu X. X)";
        let side = if left { "l" } else { "r" };
        let dual_sub = "mu X. X";
        vec![
            Step::up(occ(pg, "d")),
            Step::up(occ(pg, "d")),
            Step::up(occ(phi, &format!("d:{side}"))),
            Step::down(occ(dual_sub, &format!("b^:{side}"))),
            Step::down(occ(dual, "b^")),
            Step::up(occ(pg, "b")),
            Step::up(occ(phi, "b:l")),
            Step::up(occ(phi, "b:li")),
        ]
    }

    #[test]
    fn blue_and_red_weights() {
        assert_eq!(weight(&example(true)).unwrap(), parse_word("W l A l̄ C l i").unwrap());
        assert_eq!(weight(&example(false)).unwrap(), parse_word("W r A r̄ C l i").unwrap());
        assert!(is_thread(&example(true)));
        assert!(!is_thread(&example(false)));
    }

    #[test]
    fn single_stationary_step() {
        let t = vec![Step::up(occ("1", "a")), Step::up(occ("1", "a"))];
        assert_eq!(weight(&t).unwrap(), vec![Letter::W]);
    }

    #[test]
    fn malformed_pair() {
        let t = vec![Step::up(occ("1", "a")), Step::up(occ("1", "b"))];
        assert!(matches!(weight(&t), Err(WeightError::Malformed { position: 0, .. })));
    }

    #[test]
    fn blue_decomposition() {
        let w = parse_word("W l A l̄ C l i").unwrap();
        let d = decompose(&w).unwrap();
        let spans: Vec<(BlockKind, usize, usize)> = d.blocks.iter().map(|b| (b.kind, b.start, b.end)).collect();
        assert_eq!(
            spans,
            vec![(BlockKind::Visible, 0, 2), (BlockKind::Hidden, 2, 6), (BlockKind::Visible, 6, 7)]
        );
        assert_eq!(d.reconstruct(&w), w);
        assert_eq!(height(&w), Some(1));
    }

    #[test]
    fn upward_thread_is_one_visible_block() {
        let w = parse_word("l W r i i").unwrap();
        let d = decompose(&w).unwrap();
        assert_eq!(d.blocks, vec![Block { kind: BlockKind::Visible, start: 0, end: 5 }]);
        assert_eq!(height(&w), Some(0));
    }

    #[test]
    fn bounce_only_is_stationary() {
        let w = parse_word("A C").unwrap();
        let d = decompose(&w).unwrap();
        assert_eq!(d.visible().map(|b| b.end - b.start).sum::<usize>(), 0);
        assert_eq!(d.hidden().count(), 1);
        assert!(d.is_stationary(&w));
    }

    fn lasso(fs: &[&str], w: &str, loop_start: usize) -> LassoThread {
        LassoThread {
            formulas: fs.iter().map(|f| parse_formula(f).unwrap()).collect(),
            letters: parse_word(w).unwrap(),
            loop_start,
        }
    }

    #[test]
    fn nu_loop_is_valid() {
        let t = lasso(&["nu X. X"], "i", 0);
        let ord = crate::priority::build_priority_order([&t.formulas[0]], []);
        assert_eq!(thread_valid(&t, &ord), ThreadVerdict::Valid);
        assert_eq!(lasso_height(&t), Ok(Some(0)));
    }

    #[test]
    fn mu_nu_alternation_is_invalid() {
        let f = "mu X. nu Y. X";
        let g = "nu Y. mu X. nu Y. X";
        let t = lasso(&[f, g], "i i", 0);
        let ord = crate::priority::build_priority_order([&t.formulas[0]], []);
        assert_eq!(thread_valid(&t, &ord), ThreadVerdict::Invalid);
    }

    #[test]
    fn w_loop_is_stationary() {
        let t = lasso(&["nu X. X", "nu X. X"], "i W", 1);
        let ord = crate::priority::build_priority_order([&t.formulas[0]], []);
        assert_eq!(thread_valid(&t, &ord), ThreadVerdict::Stationary);
    }

    #[test]
    fn growing_stack_has_infinite_height() {
        let t = lasso(&["nu X. X", "nu X. X", "nu X. X"], "A I C", 0);
        assert_eq!(lasso_height(&t), Ok(None));
        let t = lasso(&["nu X. X"], "C", 0);
        assert_eq!(lasso_height(&t), Err(ThreadVerdict::NotAThread));
        let t = lasso(&["nu X. X", "nu X. X"], "A I", 1);
        assert_eq!(lasso_height(&t), Ok(None));
    }
}
