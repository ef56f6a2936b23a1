//! Sequent-level construction of the compiled proof. Every gadget allocates
//! its root before anything else, so `nodes.len()` at call time is the id a
//! later back-edge may target.

use std::collections::{BTreeMap, BTreeSet};

use super::{Action, Counter, Machine};
use crate::address::{Address, Dir, Occurrence};
use crate::formula::{parse_formula, Formula};
use crate::proof::{Edge, NodeId, PreProof, ProofNode, Renaming, Rule};

/// Which half of the construction: `Main` is driven by the F-thread,
/// `Dual` by the G-thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Main,
    Dual,
}

impl Side {
    fn prime(self) -> &'static str {
        match self {
            Side::Main => "",
            Side::Dual => "'",
        }
    }
}

/// The G, F and A occurrences a gadget works on. `a` is `None` only where
/// nothing is left to consume it.
#[derive(Clone, Debug)]
pub(crate) struct S {
    pub g: Address,
    pub f: Address,
    pub a: Option<Occurrence>,
}

pub(crate) type K<'a> = Box<dyn FnOnce(&mut Builder, S) -> Edge + 'a>;

fn k<'a>(f: impl FnOnce(&mut Builder, S) -> Edge + 'a) -> K<'a> {
    Box::new(f)
}

/// Bold letters: `l` is `i l`, `r` is `i r`.
fn bold(p: &str) -> Vec<Dir> {
    p.chars().flat_map(|c| [Dir::I, if c == 'l' { Dir::L } else { Dir::R }]).collect()
}

fn prefixes(p: &str) -> impl Iterator<Item = String> + '_ {
    (0..p.len()).map(|i| p[..i].to_string())
}

enum Leaf<'a> {
    /// Axiom with the F leaf at this bold path.
    Ax(&'static str),
    Inf,
    /// An ∞ leaf that also takes every unused F leaf.
    Sink,
    Cont(&'static str, K<'a>),
}

enum Resolved<'a> {
    Ax(Occurrence),
    Inf(Vec<Occurrence>, Occurrence),
    Cont(Address, Option<Occurrence>, K<'a>),
}

pub(crate) struct Builder {
    pub nodes: Vec<ProofNode>,
    pub tags: BTreeMap<String, Vec<NodeId>>,
    fresh: usize,
    fg: Formula,
    ff: Formula,
    fa: Formula,
    fb: Formula,
}

impl Builder {
    pub fn new() -> Self {
        let ff = parse_formula("nu X. X | X").unwrap();
        let fa = parse_formula("nu X. (X | X) * X").unwrap();
        let fb = parse_formula("mu X. X | ((nu Y. (Y | Y) * Y) | (nu Y. (Y | Y) * Y))").unwrap();
        Builder { nodes: Vec::new(), tags: BTreeMap::new(), fresh: 0, fg: ff.negate(), ff, fa, fb }
    }

    fn g(&self, a: &Address) -> Occurrence {
        Occurrence::new(self.fg.clone(), a.clone())
    }

    fn f(&self, a: &Address) -> Occurrence {
        Occurrence::new(self.ff.clone(), a.clone())
    }

    fn a(&self, a: &Address) -> Occurrence {
        Occurrence::new(self.fa.clone(), a.clone())
    }

    fn seq(&self, s: &S) -> Vec<Occurrence> {
        let mut v = vec![self.g(&s.g), self.f(&s.f)];
        v.extend(s.a.clone());
        v
    }

    fn alloc(&mut self, conclusion: Vec<Occurrence>, rule: Rule) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(ProofNode { name: format!("n{id}"), conclusion, rule, premises: Vec::new() });
        id
    }

    fn set(&mut self, id: NodeId, premises: Vec<Edge>) {
        self.nodes[id].premises = premises;
    }

    /// Tag the next node to be allocated.
    fn mark(&mut self, t: &str) {
        let id = self.nodes.len();
        self.tags.entry(t.to_string()).or_default().push(id);
    }

    fn ax(&mut self, x: Occurrence, y: Occurrence) -> Edge {
        let r = Rule::Ax(x.address.clone(), y.address.clone());
        Edge::Tree(self.alloc(vec![x, y], r))
    }

    fn back(&mut self, target: NodeId, t: &S, s: &S) -> Edge {
        let mut ren = Renaming::default();
        ren.insert(t.g.clone(), s.g.clone());
        ren.insert(t.f.clone(), s.f.clone());
        match (&t.a, &s.a) {
            (Some(x), Some(y)) => {
                assert_eq!(x.formula, y.formula);
                ren.insert(x.address.clone(), y.address.clone());
            }
            (None, None) => {}
            _ => panic!("back-edge shape mismatch"),
        }
        Edge::Back(target, ren)
    }

    fn split_a(&self) -> (Formula, Formula) {
        let u = self.fa.unfold().unwrap();
        let (_, l, _) = u.split_binary().unwrap();
        (u.clone(), l.clone())
    }

    /// ⊢ A@x, A@y, looping forever on ν.
    fn spade(&mut self, x: Address, y: Address) -> Edge {
        let (ua, pa) = self.split_a();
        let sp = self.alloc(vec![self.a(&x), self.a(&y)], Rule::Nu(x.clone()));
        let x1 = x.child(Dir::I);
        let n3 = self.alloc(vec![Occurrence::new(ua, x1.clone()), self.a(&y)], Rule::Tensor(x1.clone()));
        let xl = x1.child(Dir::L);
        let n4 = self.alloc(vec![Occurrence::new(pa, xl.clone())], Rule::Par(xl.clone()));
        let t = S { g: x.clone(), f: y.clone(), a: None };
        let mut r1 = Renaming::default();
        r1.insert(x.clone(), xl.child(Dir::L));
        r1.insert(y.clone(), xl.child(Dir::R));
        self.set(n4, vec![Edge::Back(sp, r1)]);
        let mut r2 = Renaming::default();
        r2.insert(t.g, x1.child(Dir::R));
        r2.insert(t.f, y);
        self.set(n3, vec![Edge::Tree(n4), Edge::Back(sp, r2)]);
        self.set(sp, vec![Edge::Tree(n3)]);
        Edge::Tree(sp)
    }

    /// ∞ ⊢ Γ, A@a: every branch unfolds an A forever.
    fn inf(&mut self, gamma: Vec<Occurrence>, a: Address) -> Edge {
        self.mark("inf");
        let (ua, pa) = self.split_a();
        let mut c0 = gamma.clone();
        c0.push(self.a(&a));
        let tri = self.alloc(c0, Rule::Nu(a.clone()));
        let x = a.child(Dir::I);
        let mut c1 = gamma.clone();
        c1.push(Occurrence::new(ua, x.clone()));
        let n1 = self.alloc(c1, Rule::Tensor(x.clone()));
        let xl = x.child(Dir::L);
        let n2 = self.alloc(vec![Occurrence::new(pa, xl.clone())], Rule::Par(xl.clone()));
        let sp = self.spade(xl.child(Dir::L), xl.child(Dir::R));
        self.set(n2, vec![sp]);
        let mut ren = Renaming::default();
        for o in &gamma {
            ren.insert(o.address.clone(), o.address.clone());
        }
        ren.insert(a, x.child(Dir::R));
        self.set(n1, vec![Edge::Tree(n2), Edge::Back(tri, ren)]);
        self.set(tri, vec![Edge::Tree(n1)]);
        Edge::Tree(tri)
    }

    /// Split one A into two; the unused right half becomes an ∞ leaf.
    fn par_a(&mut self, gamma: Vec<Occurrence>, a: Address, k: impl FnOnce(&mut Builder, Address, Address) -> Edge) -> Edge {
        self.mark("parA");
        let (ua, pa) = self.split_a();
        let mut c0 = gamma.clone();
        c0.push(self.a(&a));
        let n0 = self.alloc(c0, Rule::Nu(a.clone()));
        let x = a.child(Dir::I);
        let mut c1 = gamma.clone();
        c1.push(Occurrence::new(ua, x.clone()));
        let n1 = self.alloc(c1, Rule::Tensor(x.clone()));
        let xl = x.child(Dir::L);
        let mut c2 = gamma;
        c2.push(Occurrence::new(pa, xl.clone()));
        let n2 = self.alloc(c2, Rule::Par(xl.clone()));
        let top = k(self, xl.child(Dir::L), xl.child(Dir::R));
        let rest = self.inf(Vec::new(), x.child(Dir::R));
        self.set(n2, vec![top]);
        self.set(n1, vec![Edge::Tree(n2), rest]);
        self.set(n0, vec![Edge::Tree(n1)]);
        Edge::Tree(n0)
    }

    #[allow(clippy::type_complexity)]
    fn dup_a<'a>(
        &mut self,
        gamma: Vec<Occurrence>,
        a: Option<Occurrence>,
        n: usize,
        k: Box<dyn FnOnce(&mut Builder, Vec<Occurrence>) -> Edge + 'a>,
    ) -> Edge {
        if n <= 1 {
            return k(self, a.into_iter().collect());
        }
        let a = a.expect("an A to duplicate");
        assert_eq!(a.formula, self.fa);
        self.par_a(gamma.clone(), a.address, move |b, a1, a2| {
            let a2o = b.a(&a2);
            let mut g2 = gamma;
            g2.push(a2o.clone());
            let a1o = b.a(&a1);
            b.dup_a(
                g2,
                Some(a1o),
                n - 1,
                Box::new(move |b, mut list| {
                    list.push(a2o);
                    k(b, list)
                }),
            )
        })
    }

    fn unfold_f<'a>(&mut self, ctx: Vec<Occurrence>, f: &Address, internal: &[String], k: Box<dyn FnOnce(&mut Builder) -> Edge + 'a>) -> Edge {
        let par = self.ff.unfold().unwrap();
        let mut leaves = vec![self.f(f)];
        let mut first = None;
        let mut prev: Option<NodeId> = None;
        for p in internal {
            let at = f.extend(&bold(p));
            let pos = leaves.iter().position(|o| o.address == at).expect("F leaf present");
            let concl: Vec<Occurrence> = ctx.iter().chain(&leaves).cloned().collect();
            let n1 = self.alloc(concl, Rule::Nu(at.clone()));
            if let Some(q) = prev {
                self.set(q, vec![Edge::Tree(n1)]);
            }
            first.get_or_insert(n1);
            let x = at.child(Dir::I);
            leaves[pos] = Occurrence::new(par.clone(), x.clone());
            let concl: Vec<Occurrence> = ctx.iter().chain(&leaves).cloned().collect();
            let n2 = self.alloc(concl, Rule::Par(x.clone()));
            self.set(n1, vec![Edge::Tree(n2)]);
            leaves.splice(pos..=pos, [self.f(&x.child(Dir::L)), self.f(&x.child(Dir::R))]);
            prev = Some(n2);
        }
        let e = k(self);
        match prev {
            Some(q) => {
                self.set(q, vec![e]);
                Edge::Tree(first.unwrap())
            }
            None => e,
        }
    }

    fn occs(&self, r: &Resolved) -> Vec<Occurrence> {
        match r {
            Resolved::Ax(o) => vec![o.clone()],
            Resolved::Inf(ex, a) => ex.iter().cloned().chain([a.clone()]).collect(),
            Resolved::Cont(f, a, _) => [self.f(f)].into_iter().chain(a.clone()).collect(),
        }
    }

    fn gnode(&mut self, g: Address, path: String, res: &mut BTreeMap<String, Resolved>) -> Edge {
        if let Some(r) = res.remove(&path) {
            return match r {
                Resolved::Ax(o) => {
                    let go = self.g(&g);
                    self.ax(go, o)
                }
                Resolved::Inf(mut ex, a) => {
                    ex.insert(0, self.g(&g));
                    self.inf(ex, a.address)
                }
                Resolved::Cont(f, a, k) => k(self, S { g, f, a }),
            };
        }
        let others: Vec<Occurrence> =
            res.range(path.clone()..).take_while(|(p, _)| p.starts_with(&path)).flat_map(|(_, r)| self.occs(r)).collect();
        assert!(!others.is_empty() || res.keys().any(|p| p.starts_with(&path)), "G leaf missing at '{path}'");
        let mut c0 = vec![self.g(&g)];
        c0.extend(others.iter().cloned());
        let n0 = self.alloc(c0, Rule::Mu(g.clone()));
        let x = g.child(Dir::I);
        let mut c1 = vec![Occurrence::new(self.fg.unfold().unwrap(), x.clone())];
        c1.extend(others);
        let n1 = self.alloc(c1, Rule::Tensor(x.clone()));
        let l = self.gnode(x.child(Dir::L), format!("{path}l"), res);
        let r = self.gnode(x.child(Dir::R), format!("{path}r"), res);
        self.set(n1, vec![l, r]);
        self.set(n0, vec![Edge::Tree(n1)]);
        Edge::Tree(n0)
    }

    /// Unfold G into a tree with the given leaves (missing siblings become
    /// ∞ leaves), F along the paths those leaves need, and split the A once
    /// per extra consumer.
    fn pattern<'a>(&mut self, s: S, given: Vec<(&'static str, Leaf<'a>)>) -> Edge {
        let mut leaves: BTreeMap<String, Leaf<'a>> = given.into_iter().map(|(p, l)| (p.to_string(), l)).collect();
        let internal_g: BTreeSet<String> = leaves.keys().flat_map(|p| prefixes(p)).collect();
        for p in &internal_g {
            for c in ['l', 'r'] {
                let ch = format!("{p}{c}");
                if !internal_g.contains(&ch) && !leaves.contains_key(&ch) {
                    leaves.insert(ch, Leaf::Inf);
                }
            }
        }
        let need_f: BTreeSet<String> = leaves
            .values()
            .filter_map(|l| match l {
                Leaf::Ax(p) | Leaf::Cont(p, _) => Some(p.to_string()),
                _ => None,
            })
            .collect();
        let mut internal_f: Vec<String> = need_f.iter().flat_map(|p| prefixes(p)).collect::<BTreeSet<_>>().into_iter().collect();
        internal_f.sort_by_key(|p| (p.len(), p.clone()));
        let f_leaves: Vec<String> = if internal_f.is_empty() {
            vec![String::new()]
        } else {
            internal_f
                .iter()
                .flat_map(|p| [format!("{p}l"), format!("{p}r")])
                .filter(|c| !internal_f.contains(c))
                .collect()
        };
        let leftover: Vec<String> = f_leaves.into_iter().filter(|p| !need_f.contains(p)).collect();
        let sink = leaves
            .iter()
            .find(|(_, l)| matches!(l, Leaf::Sink))
            .or_else(|| leaves.iter().find(|(_, l)| matches!(l, Leaf::Inf)))
            .map(|(p, _)| p.clone());
        assert!(leftover.is_empty() || sink.is_some(), "no ∞ leaf for unused F");
        let n_a = leaves.values().filter(|l| !matches!(l, Leaf::Ax(_))).count();
        assert!(n_a > 0 || s.a.is_none(), "unused A");

        let ctx = vec![self.g(&s.g), self.f(&s.f)];
        let S { g, f, a } = s;
        self.dup_a(
            ctx,
            a,
            n_a,
            Box::new(move |b, alist| {
                let mut ctx = vec![b.g(&g)];
                ctx.extend(alist.iter().cloned());
                let fa = f.clone();
                b.unfold_f(
                    ctx,
                    &f,
                    &internal_f,
                    Box::new(move |b| {
                        let mut ai = alist.into_iter();
                        let mut res = BTreeMap::new();
                        for (p, l) in leaves {
                            let r = match l {
                                Leaf::Ax(fp) => Resolved::Ax(b.f(&fa.extend(&bold(fp)))),
                                Leaf::Inf | Leaf::Sink => {
                                    let ex = if Some(&p) == sink.as_ref() {
                                        leftover.iter().map(|q| b.f(&fa.extend(&bold(q)))).collect()
                                    } else {
                                        Vec::new()
                                    };
                                    Resolved::Inf(ex, ai.next().expect("an A for ∞"))
                                }
                                Leaf::Cont(fp, k) => Resolved::Cont(fa.extend(&bold(fp)), ai.next(), k),
                            };
                            res.insert(p, r);
                        }
                        b.gnode(g, String::new(), &mut res)
                    }),
                )
            }),
        )
    }

    /// Split the A, cut on F at a fresh atom: F on the left, G on the right.
    fn acut<'a>(&mut self, s: S, left: K<'a>, right: K<'a>) -> Edge {
        self.mark("Acut");
        let a = s.a.clone().expect("Acut needs an A").address;
        let ctx = vec![self.g(&s.g), self.f(&s.f)];
        self.par_a(ctx, a, move |b, a1, a2| {
            b.fresh += 1;
            let beta = Address::atomic(&format!("c{}", b.fresh));
            let concl = vec![b.g(&s.g), b.f(&s.f), b.a(&a1), b.a(&a2)];
            let id = b.alloc(concl, Rule::Cut(b.ff.clone(), beta.clone()));
            let (o1, o2) = (b.a(&a1), b.a(&a2));
            let l = left(b, S { g: s.g.clone(), f: beta.clone(), a: Some(o1) });
            let r = right(b, S { g: beta.dual(), f: s.f, a: Some(o2) });
            b.set(id, vec![l, r]);
            Edge::Tree(id)
        })
    }

    // ------------------------------------------------------------ shared

    fn exp<'a>(&mut self, s: S, l: K<'a>, r: K<'a>) -> Edge {
        self.mark("exp");
        self.pattern(s, vec![("l", Leaf::Cont("l", l)), ("r", Leaf::Cont("r", r))])
    }

    fn r_rule<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("r");
        self.pattern(s, vec![("l", Leaf::Inf), ("r", Leaf::Cont("r", c))])
    }

    fn l_rule<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("l");
        self.pattern(s, vec![("l", Leaf::Cont("l", c)), ("r", Leaf::Inf)])
    }

    /// Skip the first counter: `(r l^n r) w ↦ w` on the way up, restored on
    /// the way down.
    fn counter<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("counter");
        self.r_rule(
            s,
            k(move |b, s1| {
                let id = b.nodes.len();
                let t = s1.clone();
                b.mark("counter-loop");
                b.exp(s1, k(move |b, sl| b.back(id, &t, &sl)), c)
            }),
        )
    }

    fn qf(&mut self, s: S) -> Edge {
        self.mark("qf");
        self.pattern(s, vec![("l", Leaf::Sink), ("r", Leaf::Ax("r"))])
    }

    // -------------------------------------------------------- main side

    fn pi_ri(&mut self, s: S) -> Edge {
        self.pattern(s, vec![("l", Leaf::Inf), ("r", Leaf::Ax(""))])
    }

    fn pi_li(&mut self, s: S) -> Edge {
        self.pattern(s, vec![("l", Leaf::Ax("")), ("r", Leaf::Inf)])
    }

    fn r_i<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("r_i");
        self.acut(s, c, k(|b, s| b.pi_ri(s)))
    }

    fn l_i<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("l_i");
        self.acut(s, c, k(|b, s| b.pi_li(s)))
    }

    fn init<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("init");
        self.r_i(s, k(|b, s| b.r_i(s, k(|b, s| b.r_i(s, k(|b, s| b.r_i(s, c)))))))
    }

    fn inc<'a>(&mut self, s: S, two: bool, q: K<'a>) -> Edge {
        self.mark(if two { "Inc2" } else { "Inc1" });
        let body = k(|b, s| b.r_rule(s, k(|b, s| b.pi_li(s))));
        if two {
            self.acut(s, q, k(|b, s| b.counter(s, body)))
        } else {
            self.acut(s, q, body)
        }
    }

    fn dec_body(&mut self, s: S) -> Edge {
        self.pattern(s, vec![("l", Leaf::Inf), ("r", Leaf::Ax("rl"))])
    }

    fn dec<'a>(&mut self, s: S, two: bool, q: K<'a>) -> Edge {
        self.mark(if two { "Dec2" } else { "Dec1" });
        if two {
            self.acut(s, q, k(|b, s| b.counter(s, k(|b, s| b.dec_body(s)))))
        } else {
            self.acut(s, q, k(|b, s| b.dec_body(s)))
        }
    }

    fn test1<'a>(&mut self, s: S, zero: K<'a>, pos: K<'a>) -> Edge {
        self.mark("Test1");
        self.r_rule(
            s,
            k(|b, s| {
                b.exp(
                    s,
                    k(|b, s| b.l_i(s, k(|b, s| b.r_i(s, pos)))),
                    k(|b, s| b.r_i(s, k(|b, s| b.r_i(s, zero)))),
                )
            }),
        )
    }

    fn pi_aux(&mut self, s: S) -> Edge {
        self.pattern(s, vec![("l", Leaf::Sink), ("rll", Leaf::Ax("rl")), ("rrl", Leaf::Ax("rr"))])
    }

    /// Closed: `l^(k+1) T ↦ l^k T l` from the F side.
    fn shift(&mut self, s: S) -> Edge {
        self.mark("shift");
        let id = self.nodes.len();
        let t = s.clone();
        self.acut(
            s,
            k(move |b, s| b.pattern(s, vec![("l", Leaf::Cont("l", k(move |b, sl| b.back(id, &t, &sl)))), ("r", Leaf::Ax("r"))])),
            k(|b, s| {
                b.pattern(
                    s,
                    vec![("ll", Leaf::Ax("ll")), ("lr", Leaf::Sink), ("r", Leaf::Cont("lr", k(|b, s| b.pi_aux(s))))],
                )
            }),
        )
    }

    fn copy_l<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("copy_l");
        self.acut(s, c, k(|b, s| b.pattern(s, vec![("ll", Leaf::Ax("l")), ("lr", Leaf::Inf), ("r", Leaf::Ax("r"))])))
    }

    /// Closed: `l^k T ↦ l^k T l^k`.
    fn move_(&mut self, s: S) -> Edge {
        self.mark("move");
        let id = self.nodes.len();
        let t = s.clone();
        self.copy_l(
            s,
            k(move |b, s| {
                b.pattern(
                    s,
                    vec![
                        ("l", Leaf::Cont("l", k(move |b, s| b.acut(s, k(move |b, sl| b.back(id, &t, &sl)), k(|b, s| b.shift(s)))))),
                        ("r", Leaf::Ax("r")),
                    ],
                )
            }),
        )
    }

    fn prep<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("prep");
        self.acut(
            s,
            c,
            k(|b, s| {
                b.counter(s, k(|b, s| b.pattern(s, vec![("l", Leaf::Sink), ("rlrrl", Leaf::Ax("rl")), ("rrrrr", Leaf::Ax("rr"))])))
            }),
        )
    }

    fn result<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("result");
        self.prep(s, k(|b, s| b.r_rule(s, k(|b, s| b.acut(s, c, k(|b, s| b.move_(s)))))))
    }

    fn test2<'a>(&mut self, s: S, zero: K<'a>, pos: K<'a>) -> Edge {
        self.mark("Test2");
        self.result(
            s,
            k(move |b, s| {
                let id = b.nodes.len();
                let t = s.clone();
                b.mark("test-loop");
                b.exp(
                    s,
                    k(move |b, sl| b.back(id, &t, &sl)),
                    k(|b, s| b.r_rule(s, k(|b, s| b.exp(s, k(|b, s| b.r_i(s, pos)), k(|b, s| b.r_i(s, zero)))))),
                )
            }),
        )
    }

    // -------------------------------------------------------- dual side

    fn pi_ri_d(&mut self, s: S) -> Edge {
        self.pattern(s, vec![("l", Leaf::Sink), ("r", Leaf::Ax("rr"))])
    }

    fn pi_li_d(&mut self, s: S) -> Edge {
        self.pattern(s, vec![("l", Leaf::Sink), ("r", Leaf::Ax("rl"))])
    }

    fn r_i_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("r_i'");
        self.acut(s, k(|b, s| b.pi_ri_d(s)), c)
    }

    fn l_i_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("l_i'");
        self.acut(s, k(|b, s| b.pi_li_d(s)), c)
    }

    fn init_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("init'");
        self.r_i_d(s, k(|b, s| b.r_i_d(s, c)))
    }

    fn inc_d<'a>(&mut self, s: S, two: bool, q: K<'a>) -> Edge {
        self.mark(if two { "Inc2'" } else { "Inc1'" });
        if two {
            self.acut(s, k(|b, s| b.counter(s, k(|b, s| b.pi_li_d(s)))), q)
        } else {
            self.l_i_d(s, q)
        }
    }

    fn dec_body_d(&mut self, s: S) -> Edge {
        self.r_rule(s, k(|b, s| b.pattern(s, vec![("l", Leaf::Ax("")), ("r", Leaf::Inf)])))
    }

    fn dec_d<'a>(&mut self, s: S, two: bool, q: K<'a>) -> Edge {
        self.mark(if two { "Dec2'" } else { "Dec1'" });
        if two {
            self.acut(s, k(|b, s| b.counter(s, k(|b, s| b.dec_body_d(s)))), q)
        } else {
            self.acut(s, k(|b, s| b.dec_body_d(s)), q)
        }
    }

    /// `r X ↦ r X r` with `X` copied.
    fn rxcop<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("rXcop'");
        self.acut(s, k(|b, s| b.pattern(s, vec![("l", Leaf::Sink), ("rl", Leaf::Ax("rlrl")), ("rr", Leaf::Ax("rrrr"))])), c)
    }

    fn test1_d<'a>(&mut self, s: S, zero: K<'a>, pos: K<'a>) -> Edge {
        self.mark("Test1'");
        self.rxcop(s, k(|b, s| b.r_rule(s, k(|b, s| b.exp(s, pos, zero)))))
    }

    fn shift_d(&mut self, s: S) -> Edge {
        self.mark("shift'");
        let id = self.nodes.len();
        let t = s.clone();
        self.acut(
            s,
            k(|b, s| {
                b.pattern(
                    s,
                    vec![
                        ("ll", Leaf::Ax("ll")),
                        ("lrl", Leaf::Inf),
                        ("lrrl", Leaf::Ax("rrll")),
                        ("lrrr", Leaf::Ax("rrrl")),
                        ("r", Leaf::Sink),
                    ],
                )
            }),
            k(move |b, s| b.pattern(s, vec![("l", Leaf::Cont("l", k(move |b, sl| b.back(id, &t, &sl)))), ("r", Leaf::Ax("r"))])),
        )
    }

    fn copy_l_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("copy_l'");
        self.acut(s, k(|b, s| b.pattern(s, vec![("l", Leaf::Ax("ll")), ("rl", Leaf::Sink), ("rr", Leaf::Ax("rr"))])), c)
    }

    fn move_d(&mut self, s: S) -> Edge {
        self.mark("move'");
        let id = self.nodes.len();
        let t = s.clone();
        self.copy_l_d(
            s,
            k(move |b, s| {
                b.pattern(
                    s,
                    vec![
                        ("l", Leaf::Cont("l", k(move |b, s| b.acut(s, k(|b, s| b.shift_d(s)), k(move |b, sl| b.back(id, &t, &sl)))))),
                        ("r", Leaf::Ax("r")),
                    ],
                )
            }),
        )
    }

    fn prep_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("prep'");
        self.acut(
            s,
            k(|b, s| {
                b.counter(s, k(|b, s| b.pattern(s, vec![("l", Leaf::Sink), ("rl", Leaf::Ax("rlrrl")), ("rr", Leaf::Ax("rrrrr"))])))
            }),
            c,
        )
    }

    fn result_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("result'");
        self.prep_d(s, k(|b, s| b.r_rule(s, k(|b, s| b.acut(s, k(|b, s| b.move_d(s)), c)))))
    }

    fn rxr_d<'a>(&mut self, s: S, c: K<'a>) -> Edge {
        self.mark("rXr_i'");
        self.acut(s, k(|b, s| b.pattern(s, vec![("l", Leaf::Sink), ("rl", Leaf::Ax("rlr")), ("rr", Leaf::Ax("rrr"))])), c)
    }

    fn test2_d<'a>(&mut self, s: S, zero: K<'a>, pos: K<'a>) -> Edge {
        self.mark("Test2'");
        self.result_d(
            s,
            k(move |b, s| {
                let id = b.nodes.len();
                let t = s.clone();
                b.mark("test-loop'");
                b.exp(
                    s,
                    k(move |b, sl| b.back(id, &t, &sl)),
                    k(|b, s| b.rxr_d(s, k(|b, s| b.r_rule(s, k(|b, s| b.exp(s, pos, zero)))))),
                )
            }),
        )
    }

    // ---------------------------------------------------------- states

    /// The gadget of state `q`, or a back-edge when `q` is already on the
    /// path from the root.
    fn state<'a>(&mut self, m: &'a Machine, q: &str, s: S, env: Vec<(String, NodeId, S)>, side: Side) -> Edge {
        if let Some((_, id, t)) = env.iter().find(|(p, _, _)| p == q) {
            let t = t.clone();
            return self.back(*id, &t, &s);
        }
        let id = self.nodes.len();
        let mut env = env;
        env.push((q.to_string(), id, s.clone()));
        self.mark(&format!("({q}{})", side.prime()));
        let go = |t: &str| -> K<'a> {
            let env = env.clone();
            let t = t.to_string();
            k(move |b, s| b.state(m, &t, s, env, side))
        };
        match (m.delta.get(q), side) {
            (None, _) => self.qf(s),
            (Some(Action::Inc(c, t)), Side::Main) => self.inc(s, *c == Counter::Two, go(t)),
            (Some(Action::Inc(c, t)), Side::Dual) => self.inc_d(s, *c == Counter::Two, go(t)),
            (Some(Action::Dec(c, t)), Side::Main) => self.dec(s, *c == Counter::Two, go(t)),
            (Some(Action::Dec(c, t)), Side::Dual) => self.dec_d(s, *c == Counter::Two, go(t)),
            (Some(Action::Test(Counter::One, z, p)), Side::Main) => self.test1(s, go(z), go(p)),
            (Some(Action::Test(Counter::Two, z, p)), Side::Main) => self.test2(s, go(z), go(p)),
            (Some(Action::Test(Counter::One, z, p)), Side::Dual) => self.test1_d(s, go(z), go(p)),
            (Some(Action::Test(Counter::Two, z, p)), Side::Dual) => self.test2_d(s, go(z), go(p)),
        }
    }

    fn finish(self, name: &str, root: NodeId) -> (PreProof, BTreeMap<String, Vec<NodeId>>) {
        let mut tags = self.tags;
        for v in tags.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        (PreProof { name: name.to_string(), nodes: self.nodes, root }, tags)
    }
}

#[derive(Clone, Debug)]
pub struct GadgetProof {
    pub proof: PreProof,
    /// Gadget name to the roots of its instances.
    pub tags: BTreeMap<String, Vec<NodeId>>,
    pub root: NodeId,
    /// Cut joining the F-side simulation to the rest.
    pub main_cut: NodeId,
    /// Cut joining the G-side simulation to the main loop.
    pub dual_cut: NodeId,
}

impl GadgetProof {
    pub fn tag_names(&self) -> BTreeMap<String, Vec<String>> {
        self.tags
            .iter()
            .map(|(t, ids)| (t.clone(), ids.iter().map(|i| self.proof.nodes[*i].name.clone()).collect()))
            .collect()
    }
}

/// The proof of `⊢ G, F, B` for machine `m`. Its main branch loops through
/// the root; every other infinite branch is carried by an A.
pub fn compile(m: &Machine) -> GadgetProof {
    let mut b = Builder::new();
    let (g, f, bb) = (Address::atomic("g"), Address::atomic("f"), Address::atomic("b"));
    let bocc = Occurrence::new(b.fb.clone(), bb.clone());
    b.mark("root");
    let root = b.alloc(vec![b.g(&g), b.f(&f), bocc.clone()], Rule::Mu(bb.clone()));
    let b1 = bb.child(Dir::I);
    let ub = b.fb.unfold().unwrap();
    let (_, bl, br) = ub.split_binary().map(|(c, l, r)| (c, l.clone(), r.clone())).unwrap();
    let n1 = b.alloc(vec![b.g(&g), b.f(&f), Occurrence::new(ub.clone(), b1.clone())], Rule::Par(b1.clone()));
    let (bl_at, br_at) = (b1.child(Dir::L), b1.child(Dir::R));
    let n2 = b.alloc(
        vec![b.g(&g), b.f(&f), Occurrence::new(bl.clone(), bl_at.clone()), Occurrence::new(br, br_at.clone())],
        Rule::Par(br_at.clone()),
    );
    let (am, ar) = (br_at.child(Dir::R), br_at.child(Dir::L));
    let cm = Address::atomic("m");
    let cr = Address::atomic("d");
    let main_cut = b.alloc(
        vec![b.g(&g), b.f(&f), Occurrence::new(bl.clone(), bl_at.clone()), b.a(&ar), b.a(&am)],
        Rule::Cut(b.ff.clone(), cm.clone()),
    );
    let dual_cut = b.alloc(vec![b.g(&g), b.f(&cm), Occurrence::new(bl.clone(), bl_at.clone()), b.a(&ar)], Rule::Cut(b.ff.clone(), cr.clone()));

    // The loop: two unfoldings of F match what the dual side leaves, the
    // third is visible, then back to the root.
    let t = S { g: g.clone(), f: f.clone(), a: Some(bocc) };
    b.mark("loop");
    let home = k(move |b, s| b.pattern(s, vec![("l", Leaf::Cont("l", k(move |b, s| b.back(root, &t, &s)))), ("r", Leaf::Ax("r"))]));
    let lp = b.pattern(
        S { g: g.clone(), f: cr.clone(), a: Some(Occurrence::new(bl, bl_at)) },
        vec![
            ("l", Leaf::Ax("l")),
            ("r", Leaf::Cont("r", k(move |b, s| b.pattern(s, vec![("l", Leaf::Ax("l")), ("r", Leaf::Cont("r", home))])))),
        ],
    );
    let sr = S { g: cr.dual(), f: cm.clone(), a: Some(b.a(&ar)) };
    b.mark("pi_R");
    let q0 = m.initial.clone();
    let dual = b.init_d(sr, k(|b, s| b.state(m, &q0, s, Vec::new(), Side::Dual)));
    b.set(dual_cut, vec![lp, dual]);
    let sm = S { g: cm.dual(), f: f.clone(), a: Some(b.a(&am)) };
    b.mark("pi_M");
    let q0 = m.initial.clone();
    let main = b.init(sm, k(|b, s| b.state(m, &q0, s, Vec::new(), Side::Main)));
    b.set(main_cut, vec![Edge::Tree(dual_cut), main]);
    b.set(n2, vec![Edge::Tree(main_cut)]);
    b.set(n1, vec![Edge::Tree(n2)]);
    b.set(root, vec![Edge::Tree(n1)]);
    let (proof, tags) = b.finish("machine", root);
    GadgetProof { proof, tags, root, main_cut, dual_cut }
}

/// Gadgets that can be compiled on their own, between stub leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gadget {
    Init,
    Inc1,
    Inc2,
    Dec1,
    Dec2,
    Test1,
    Test2,
    Counter,
    Ri,
    Li,
    R,
    L,
    Shift,
    CopyL,
    Move,
    Prep,
    Result,
    Final,
}

impl Gadget {
    pub const ALL: [Gadget; 18] = [
        Gadget::Init,
        Gadget::Inc1,
        Gadget::Inc2,
        Gadget::Dec1,
        Gadget::Dec2,
        Gadget::Test1,
        Gadget::Test2,
        Gadget::Counter,
        Gadget::Ri,
        Gadget::Li,
        Gadget::R,
        Gadget::L,
        Gadget::Shift,
        Gadget::CopyL,
        Gadget::Move,
        Gadget::Prep,
        Gadget::Result,
        Gadget::Final,
    ];
}

/// One gadget with conclusion `⊢ G@g, F@f, A@a` and an open leaf per exit.
/// Exits are named `next`, or `zero` and `pos` for tests.
pub fn standalone(gadget: Gadget, side: Side) -> (PreProof, Vec<(String, NodeId)>) {
    use std::cell::RefCell;
    use std::rc::Rc;
    let mut b = Builder::new();
    let exits: Rc<RefCell<Vec<(String, NodeId)>>> = Rc::default();
    let stub = |name: &'static str| -> K<'static> {
        let exits = exits.clone();
        k(move |b, s| {
            let c = b.seq(&s);
            let id = b.alloc(c, Rule::Open);
            exits.borrow_mut().push((name.to_string(), id));
            Edge::Tree(id)
        })
    };
    let s = S { g: Address::atomic("g"), f: Address::atomic("f"), a: Some(b.a(&Address::atomic("a"))) };
    let d = side == Side::Dual;
    match gadget {
        Gadget::Init if d => b.init_d(s, stub("next")),
        Gadget::Init => b.init(s, stub("next")),
        Gadget::Inc1 if d => b.inc_d(s, false, stub("next")),
        Gadget::Inc1 => b.inc(s, false, stub("next")),
        Gadget::Inc2 if d => b.inc_d(s, true, stub("next")),
        Gadget::Inc2 => b.inc(s, true, stub("next")),
        Gadget::Dec1 if d => b.dec_d(s, false, stub("next")),
        Gadget::Dec1 => b.dec(s, false, stub("next")),
        Gadget::Dec2 if d => b.dec_d(s, true, stub("next")),
        Gadget::Dec2 => b.dec(s, true, stub("next")),
        Gadget::Test1 if d => b.test1_d(s, stub("zero"), stub("pos")),
        Gadget::Test1 => b.test1(s, stub("zero"), stub("pos")),
        Gadget::Test2 if d => b.test2_d(s, stub("zero"), stub("pos")),
        Gadget::Test2 => b.test2(s, stub("zero"), stub("pos")),
        Gadget::Counter => b.counter(s, stub("next")),
        Gadget::Ri if d => b.r_i_d(s, stub("next")),
        Gadget::Ri => b.r_i(s, stub("next")),
        Gadget::Li if d => b.l_i_d(s, stub("next")),
        Gadget::Li => b.l_i(s, stub("next")),
        Gadget::R => b.r_rule(s, stub("next")),
        Gadget::L => b.l_rule(s, stub("next")),
        Gadget::Shift if d => b.shift_d(s),
        Gadget::Shift => b.shift(s),
        Gadget::CopyL if d => b.copy_l_d(s, stub("next")),
        Gadget::CopyL => b.copy_l(s, stub("next")),
        Gadget::Move if d => b.move_d(s),
        Gadget::Move => b.move_(s),
        Gadget::Prep if d => b.prep_d(s, stub("next")),
        Gadget::Prep => b.prep(s, stub("next")),
        Gadget::Result if d => b.result_d(s, stub("next")),
        Gadget::Result => b.result(s, stub("next")),
        Gadget::Final => b.qf(s),
    };
    let (p, _) = b.finish(&format!("{gadget:?}{}", side.prime()), 0);
    let ex = exits.borrow().clone();
    (p, ex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadget::parse_machine;
    use crate::proof::validate;

    #[test]
    fn every_gadget_is_well_formed() {
        for g in Gadget::ALL {
            for side in [Side::Main, Side::Dual] {
                let (p, _) = standalone(g, side);
                let d = validate(&p);
                assert!(d.is_empty(), "{g:?} {side:?}: {}", d[0]);
            }
        }
    }

    #[test]
    fn compiled_machines_are_well_formed() {
        for src in [include_str!("../../corpus/m1.machine"), include_str!("../../corpus/m2.machine"), include_str!("../../corpus/m3.machine")] {
            let gp = compile(&parse_machine(src).unwrap());
            let d = validate(&gp.proof);
            assert!(d.is_empty(), "{}", d[0]);
            assert!(gp.tags.contains_key("(q0)") && gp.tags.contains_key("(q0')"));
        }
    }

    #[test]
    fn acut_orientation() {
        let gp = compile(&parse_machine(include_str!("../../corpus/m1.machine")).unwrap());
        let p = &gp.proof;
        for n in &p.nodes {
            if let Rule::Cut(f, beta) = &n.rule {
                assert_eq!(f.to_string(), Builder::new().ff.to_string());
                let l = p.nodes[n.premises[0].target()].conclusion.iter().any(|o| &o.address == beta);
                assert!(l || n.premises[0].is_back());
            }
        }
    }
}
