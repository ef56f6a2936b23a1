#![allow(dead_code)]

use circ::address::{Address, Dir, Occurrence};
use circ::formula::{parse_formula, Formula};
use circ::proof::{analyze, parse_proof, Edge, PreProof, ProofNode, Renaming, Rule};
use circ::thread::Letter;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn corpus_path(file: &str) -> String {
    format!("{}/corpus/{file}", env!("CARGO_MANIFEST_DIR"))
}

pub fn corpus(file: &str) -> PreProof {
    parse_proof(&std::fs::read_to_string(corpus_path(file)).unwrap()).unwrap()
}

pub const GOLDEN: [&str; 5] = ["pi0.proof", "validproofs_left.proof", "validproofs_right.proof", "unsound.proof", "loop.proof"];

/// Words shaped like weights: runs of W, balanced push/pop blocks around
/// bounces, and a sprinkle of arbitrary letters.
pub fn structured_word(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Letter> {
    let mut w = Vec::new();
    let dirs = [Dir::L, Dir::R, Dir::I];
    while w.len() < max_len {
        match rng.gen_range(0..6) {
            0 => w.push(Letter::W),
            1 => w.push(Letter::Open(*dirs.choose(rng).unwrap())),
            2 | 3 => {
                let depth = rng.gen_range(0..3);
                let ds: Vec<Dir> = (0..depth).map(|_| *dirs.choose(rng).unwrap()).collect();
                w.push(Letter::A);
                for d in &ds {
                    w.push(Letter::Close(*d));
                }
                if rng.gen_bool(0.3) {
                    w.push(Letter::W);
                }
                w.push(Letter::C);
                for d in ds.iter().rev() {
                    let d = if rng.gen_bool(0.9) { *d } else { *dirs.choose(rng).unwrap() };
                    w.push(Letter::Open(d));
                }
            }
            4 => w.push(*Letter::ALL.choose(rng).unwrap()),
            _ => {
                if rng.gen_bool(0.5) {
                    break;
                }
            }
        }
    }
    w.truncate(max_len);
    w
}

fn pool() -> Vec<Formula> {
    // The bare loops twice: they give the bouncing shapes most often.
    ["nu X. X", "mu X. X", "nu X. X", "mu X. X", "nu X. X | X", "mu X. X * X", "nu X. X * X", "mu X. X | X", "a", "~a"]
        .iter()
        .map(|s| parse_formula(s).unwrap())
        .collect()
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    nodes: Vec<ProofNode>,
    budget: usize,
    cuts: usize,
}

fn same_formulas(a: &[Occurrence], b: &[Occurrence]) -> Option<Renaming> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut ren = Renaming::default();
    for o in a {
        let j = (0..b.len()).find(|j| !used[*j] && b[*j].formula == o.formula)?;
        used[j] = true;
        ren.insert(o.address.clone(), b[j].address.clone());
    }
    Some(ren)
}

impl Gen<'_> {
    fn split_ctx(&mut self, ctx: Vec<Occurrence>) -> (Vec<Occurrence>, Vec<Occurrence>) {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for o in ctx {
            if self.rng.gen_bool(0.5) {
                l.push(o);
            } else {
                r.push(o);
            }
        }
        (l, r)
    }

    /// A premise for `seq` above the ancestors `path`.
    fn premise(&mut self, seq: Vec<Occurrence>, path: &[usize]) -> Option<Edge> {
        let anc: Vec<(usize, Renaming)> =
            path.iter().filter_map(|&a| same_formulas(&self.nodes[a].conclusion, &seq).map(|r| (a, r))).collect();
        if !anc.is_empty() && (self.rng.gen_bool(0.5) || self.nodes.len() >= self.budget) {
            let (a, r) = anc[self.rng.gen_range(0..anc.len())].clone();
            return Some(Edge::Back(a, r));
        }
        self.node(seq, path).map(Edge::Tree)
    }

    fn node(&mut self, seq: Vec<Occurrence>, path: &[usize]) -> Option<usize> {
        if self.nodes.len() >= self.budget {
            return None;
        }
        let id = self.nodes.len();
        self.nodes.push(ProofNode { name: format!("n{id}"), conclusion: seq.clone(), rule: Rule::Open, premises: vec![] });
        let mut path = path.to_vec();
        path.push(id);
        if seq.len() == 2 && seq[0].formula == seq[1].formula.negate() && self.rng.gen_bool(0.6) {
            self.nodes[id].rule = Rule::Ax(seq[0].address.clone(), seq[1].address.clone());
            return Some(id);
        }
        let cut = seq.len() <= 2 && self.rng.gen_bool(0.35);
        if cut {
            self.cuts += 1;
            let at = Address::atomic(&format!("c{}", self.cuts));
            // Usually cut against a context formula kept on the left, so the
            // left premise can close with an axiom.
            let (c, mut l, mut r) = if self.rng.gen_bool(0.6) {
                let mut ctx = seq;
                let o = ctx.remove(self.rng.gen_range(0..ctx.len()));
                let (mut l, r) = self.split_ctx(ctx);
                let c = o.formula.negate();
                l.insert(0, o);
                (c, l, r)
            } else {
                let c = pool().choose(self.rng).unwrap().clone();
                let (l, r) = self.split_ctx(seq);
                (c, l, r)
            };
            l.push(Occurrence::new(c.clone(), at.clone()));
            r.push(Occurrence::new(c.negate(), at.dual()));
            self.nodes[id].rule = Rule::Cut(c, at);
            let a = self.premise(l, &path)?;
            let b = self.premise(r, &path)?;
            self.nodes[id].premises = vec![a, b];
            return Some(id);
        }
        let k = self.rng.gen_range(0..seq.len());
        let o = seq[k].clone();
        let mut ctx = seq;
        ctx.remove(k);
        let addr = o.address.clone();
        match &o.formula {
            Formula::Par(..) => {
                let (a, b) = o.split().unwrap();
                ctx.push(a);
                ctx.push(b);
                self.nodes[id].rule = Rule::Par(addr);
                let e = self.premise(ctx, &path)?;
                self.nodes[id].premises = vec![e];
            }
            Formula::Tensor(..) => {
                let (a, b) = o.split().unwrap();
                let (mut l, mut r) = self.split_ctx(ctx);
                l.push(a);
                r.push(b);
                self.nodes[id].rule = Rule::Tensor(addr);
                let x = self.premise(l, &path)?;
                let y = self.premise(r, &path)?;
                self.nodes[id].premises = vec![x, y];
            }
            Formula::Mu(..) | Formula::Nu(..) => {
                ctx.push(o.unfold().unwrap());
                self.nodes[id].rule = if matches!(o.formula, Formula::Mu(..)) { Rule::Mu(addr) } else { Rule::Nu(addr) };
                let e = self.premise(ctx, &path)?;
                self.nodes[id].premises = vec![e];
            }
            _ => return None,
        }
        Some(id)
    }
}

/// `⊢ νX.X` by a cut on `μX.X`: `j` unfoldings then an axiom on the left,
/// `m` unfoldings then a loop to the root on the right.
pub fn cut_loop(j: usize, m: usize) -> PreProof {
    let nu = parse_formula("nu X. X").unwrap();
    let mu = nu.negate();
    let g = Address::atomic("g");
    let c = Address::atomic("c");
    let iter = |a: &Address, n: usize| a.extend(&vec![Dir::I; n]);
    let mut nodes = vec![ProofNode {
        name: "n0".into(),
        conclusion: vec![Occurrence::new(nu.clone(), g.clone())],
        rule: Rule::Cut(mu.clone(), c.clone()),
        premises: vec![],
    }];
    let mut prev = 0;
    for t in 0..=j {
        let id = nodes.len();
        nodes[prev].premises.push(Edge::Tree(id));
        let seq = vec![Occurrence::new(nu.clone(), g.clone()), Occurrence::new(mu.clone(), iter(&c, t))];
        let rule = if t == j { Rule::Ax(g.clone(), iter(&c, t)) } else { Rule::Mu(iter(&c, t)) };
        nodes.push(ProofNode { name: format!("n{id}"), conclusion: seq, rule, premises: vec![] });
        prev = id;
    }
    let cd = c.dual();
    let mut prev = 0;
    for t in 0..m {
        let id = nodes.len();
        nodes[prev].premises.push(Edge::Tree(id));
        let seq = vec![Occurrence::new(nu.clone(), iter(&cd, t))];
        nodes.push(ProofNode { name: format!("n{id}"), conclusion: seq, rule: Rule::Nu(iter(&cd, t)), premises: vec![] });
        prev = id;
    }
    let mut ren = Renaming::default();
    ren.insert(g, iter(&cd, m));
    nodes[prev].premises.push(Edge::Back(0, ren));
    PreProof { name: format!("cut_loop_{j}_{m}"), nodes, root: 0 }
}

/// A random well-formed graph of at most `max_nodes` nodes: a third are
/// cut loops, the rest grown rule by rule.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> PreProof {
    if max_nodes >= 3 && rng.gen_bool(0.33) {
        let j = rng.gen_range(0..=(max_nodes - 3).min(3));
        let m = rng.gen_range(0..=(max_nodes - 2 - j).min(4));
        return cut_loop(j, m);
    }
    loop {
        let pool = pool();
        let n = if rng.gen_bool(0.7) { 1 } else { 2 };
        let seq: Vec<Occurrence> =
            (0..n).map(|j| Occurrence::new(pool.choose(rng).unwrap().clone(), Address::atomic(&format!("g{j}")))).collect();
        let mut g = Gen { rng, nodes: Vec::new(), budget: max_nodes, cuts: 0 };
        if g.node(seq, &[]).is_some() {
            let p = PreProof { name: "random".into(), nodes: g.nodes, root: 0 };
            // Keep only a few of the one- and two-node graphs.
            if analyze(&p).is_ok() && (p.len() > 2 || rng.gen_bool(0.2)) {
                return p;
            }
        }
    }
}
