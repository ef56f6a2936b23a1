//! Context-free grammars of b-paths, h-paths and whole thread weights, with
//! a small Earley recogniser. Used as an oracle for the automaton.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::Letter;
use crate::address::Dir;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Nonterminal {
    /// Augmented start, never on a right-hand side.
    Top,
    /// Whole thread weights: `V₀ H₁ V₁ H₂ …`.
    S,
    Ts,
    Vs,
    Ws,
    B,
    H,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sym {
    T(Letter),
    N(Nonterminal),
}

struct Rule {
    lhs: Nonterminal,
    rhs: Vec<Sym>,
}

struct Grammar {
    rules: Vec<Rule>,
    nullable: Vec<Nonterminal>,
}

impl Grammar {
    fn build() -> Grammar {
        use Nonterminal::*;
        use Sym::{N, T};
        let mut rules = Vec::new();
        let mut r = |lhs, rhs: Vec<Sym>| rules.push(Rule { lhs, rhs });
        r(S, vec![N(Vs), N(Ts)]);
        r(Ts, vec![]);
        r(Ts, vec![T(Letter::A), N(Ws), N(B), N(Vs), N(Ts)]);
        r(Vs, vec![]);
        for l in [Letter::Open(Dir::L), Letter::Open(Dir::R), Letter::Open(Dir::I), Letter::W] {
            r(Vs, vec![T(l), N(Vs)]);
        }
        r(Ws, vec![]);
        r(Ws, vec![T(Letter::W), N(Ws)]);
        r(B, vec![T(Letter::C)]);
        r(B, vec![N(B), N(Ws), T(Letter::A), N(Ws), N(B)]);
        for d in [Dir::L, Dir::R, Dir::I] {
            r(B, vec![T(Letter::Close(d)), N(Ws), N(B), N(Ws), T(Letter::Open(d))]);
        }
        r(H, vec![]);
        r(H, vec![T(Letter::A), N(Ws), N(B)]);

        let mut nullable: Vec<Nonterminal> = Vec::new();
        loop {
            let before = nullable.len();
            for rule in &rules {
                if !nullable.contains(&rule.lhs)
                    && rule.rhs.iter().all(|s| matches!(s, N(x) if nullable.contains(x)))
                {
                    nullable.push(rule.lhs);
                }
            }
            if nullable.len() == before {
                break;
            }
        }
        Grammar { rules, nullable }
    }

    fn get() -> &'static Grammar {
        static G: OnceLock<Grammar> = OnceLock::new();
        G.get_or_init(Grammar::build)
    }
}

/// Earley item: rule index (`usize::MAX` for the augmented rule), dot, origin.
type Item = (usize, usize, usize);

/// Incremental recogniser: letters can be pushed and popped, which makes
/// exhaustive enumeration over a trie of words cheap.
pub struct Earley {
    start: Nonterminal,
    columns: Vec<Vec<Item>>,
}

const AUG: usize = usize::MAX;

impl Earley {
    pub fn new(start: Nonterminal) -> Earley {
        let mut e = Earley { start, columns: Vec::new() };
        let col = e.close(vec![(AUG, 0, 0)], 0);
        e.columns.push(col);
        e
    }

    fn rhs(&self, rule: usize) -> &[Sym] {
        if rule == AUG {
            std::slice::from_ref(match self.start {
                Nonterminal::S => &Sym::N(Nonterminal::S),
                Nonterminal::B => &Sym::N(Nonterminal::B),
                Nonterminal::H => &Sym::N(Nonterminal::H),
                Nonterminal::Ts => &Sym::N(Nonterminal::Ts),
                Nonterminal::Vs => &Sym::N(Nonterminal::Vs),
                Nonterminal::Ws => &Sym::N(Nonterminal::Ws),
                Nonterminal::Top => panic!("Top is not a start symbol"),
            })
        } else {
            &Grammar::get().rules[rule].rhs
        }
    }

    fn lhs(rule: usize) -> Nonterminal {
        if rule == AUG {
            Nonterminal::Top
        } else {
            Grammar::get().rules[rule].lhs
        }
    }

    fn close(&self, seed: Vec<Item>, cur: usize) -> Vec<Item> {
        let g = Grammar::get();
        let mut seen: HashSet<Item> = seed.iter().copied().collect();
        let mut items = seed;
        let mut k = 0;
        while k < items.len() {
            let (rule, dot, origin) = items[k];
            k += 1;
            let rhs = self.rhs(rule);
            let mut add = |it: Item, items: &mut Vec<Item>| {
                if seen.insert(it) {
                    items.push(it);
                }
            };
            if dot < rhs.len() {
                if let Sym::N(x) = rhs[dot] {
                    for (ri, r) in g.rules.iter().enumerate() {
                        if r.lhs == x {
                            add((ri, 0, cur), &mut items);
                        }
                    }
                    if g.nullable.contains(&x) {
                        add((rule, dot + 1, origin), &mut items);
                    }
                }
            } else {
                // Empty completions are already covered by skipping nullables.
                if origin == cur {
                    continue;
                }
                let lhs = Self::lhs(rule);
                for &(pr, pd, po) in &self.columns[origin] {
                    let prhs = self.rhs(pr);
                    if pd < prhs.len() && prhs[pd] == Sym::N(lhs) {
                        add((pr, pd + 1, po), &mut items);
                    }
                }
            }
        }
        items
    }

    /// Read one letter; returns false when no continuation can succeed.
    pub fn push(&mut self, l: Letter) -> bool {
        let cur = self.columns.len();
        let last = self.columns.last().expect("initial column");
        let seed: Vec<Item> = last
            .iter()
            .filter(|(rule, dot, _)| {
                let rhs = self.rhs(*rule);
                *dot < rhs.len() && rhs[*dot] == Sym::T(l)
            })
            .map(|(rule, dot, origin)| (*rule, dot + 1, *origin))
            .collect();
        let col = self.close(seed, cur);
        let alive = !col.is_empty();
        self.columns.push(col);
        alive
    }

    pub fn pop(&mut self) {
        assert!(self.columns.len() > 1, "cannot pop the initial column");
        self.columns.pop();
    }

    /// The letters read so far form a prefix of some word of the language.
    pub fn viable(&self) -> bool {
        !self.columns.last().unwrap().is_empty()
    }

    pub fn accepts(&self) -> bool {
        self.columns.last().unwrap().contains(&(AUG, 1, 0))
    }

    pub fn len(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Membership of a finite word in the language generated by `which`.
pub fn grammar_member(w: &[Letter], which: Nonterminal) -> bool {
    let mut e = Earley::new(which);
    for l in w {
        if !e.push(*l) {
            return false;
        }
    }
    e.accepts()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thread::parse_word;

    fn m(s: &str, n: Nonterminal) -> bool {
        grammar_member(&parse_word(s).unwrap(), n)
    }

    #[test]
    fn small_members() {
        assert!(m("C", Nonterminal::B));
        assert!(m("A C", Nonterminal::H));
        assert!(m("", Nonterminal::H));
        assert!(!m("", Nonterminal::B));
        assert!(!m("L C r", Nonterminal::B));
        assert!(m("L W C W l", Nonterminal::B));
        assert!(m("C W A W C", Nonterminal::B));
        assert!(m("I L C l A C i", Nonterminal::B));
    }

    #[test]
    fn whole_weights() {
        assert!(m("W l A L C l i", Nonterminal::S));
        assert!(!m("W r A R C l i", Nonterminal::S));
        assert!(m("l r i W", Nonterminal::S));
        assert!(!m("A", Nonterminal::S));
    }

    #[test]
    fn push_pop_restores() {
        let mut e = Earley::new(Nonterminal::S);
        e.push(Letter::A);
        assert!(e.viable() && !e.accepts());
        e.push(Letter::C);
        assert!(e.accepts());
        e.pop();
        e.pop();
        assert!(e.accepts() && e.is_empty());
    }
}
