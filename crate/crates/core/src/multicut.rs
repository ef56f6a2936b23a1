//! Multicut reduction. A cut-free prefix grows below a frontier of
//! multicuts whose premises are cursors into the circular proof.
//!
//! Occurrences are identified by address everywhere: addresses of live
//! premises are pairwise disjoint, and cut atoms get a fresh name each time
//! a cut is absorbed.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::address::{format_sequent, same_set, Address, Dir, Occurrence, Sequent};
use crate::formula::Formula;
use crate::proof::{rename_rule, Edge, NodeId, PreProof, ProofNode, Renaming, Rule};
use crate::validity::{prepare, CheckError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Premise {
    /// Never reused within one reduction.
    pub uid: usize,
    pub node: NodeId,
    pub ren: Renaming,
    pub seq: Sequent,
    pub rule: Rule,
}

/// A redex, named by the uids of the premises involved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Ext(usize),
    Merge(usize),
    CutAx(usize),
    Princ(usize, usize),
}

impl Label {
    fn uid(self) -> usize {
        match self {
            Label::Ext(u) | Label::Merge(u) | Label::CutAx(u) | Label::Princ(u, _) => u,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Ext(u) => write!(f, "ext#{u}"),
            Label::Merge(u) => write!(f, "merge#{u}"),
            Label::CutAx(u) => write!(f, "cutax#{u}"),
            Label::Princ(u, v) => write!(f, "princ#{u},{v}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Multicut {
    pub conclusion: Sequent,
    /// `iota[j]` is the premise address standing for `conclusion[j]`.
    pub iota: Vec<Address>,
    /// Live premises in uid order.
    pub premises: BTreeMap<usize, Premise>,
    /// Connections, stored in both directions.
    conn: BTreeMap<Address, Address>,
    loc: HashMap<Address, usize>,
    /// The enabled redex of each premise, keyed by its lowest uid.
    labels: BTreeMap<usize, Label>,
    dirty: Vec<usize>,
    added: Vec<Label>,
}

impl Multicut {
    fn new(conclusion: Sequent, iota: Vec<Address>) -> Self {
        Multicut { conclusion, iota, ..Default::default() }
    }

    pub fn connections(&self) -> Vec<(&Address, &Address)> {
        self.conn.iter().filter(|(a, b)| a < b).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.labels.values().copied()
    }

    fn owner(&self, a: &Address) -> Option<&Premise> {
        self.loc.get(a).and_then(|u| self.premises.get(u))
    }

    fn mark(&mut self, a: &Address) {
        if let Some(u) = self.loc.get(a) {
            self.dirty.push(*u);
        }
    }

    fn add(&mut self, pr: Premise) {
        for o in &pr.seq {
            self.loc.insert(o.address.clone(), pr.uid);
        }
        self.dirty.push(pr.uid);
        self.premises.insert(pr.uid, pr);
    }

    fn take(&mut self, uid: usize) -> Premise {
        let pr = self.premises.remove(&uid).expect("live premise");
        for o in &pr.seq {
            self.loc.remove(&o.address);
        }
        self.labels.remove(&uid);
        pr
    }

    fn link(&mut self, a: Address, b: Address) {
        self.mark(&a);
        self.mark(&b);
        self.conn.insert(a.clone(), b.clone());
        self.conn.insert(b, a);
    }

    /// Drop the connection touching `a`, returning the other end.
    fn unlink(&mut self, a: &Address) -> Option<Address> {
        let b = self.conn.remove(a)?;
        self.conn.remove(&b);
        self.mark(a);
        self.mark(&b);
        Some(b)
    }

    fn label_of(&self, pr: &Premise) -> Option<Label> {
        match &pr.rule {
            Rule::Cut(..) => Some(Label::Merge(pr.uid)),
            Rule::Ax(a, b) => {
                if self.premises.len() == 1 {
                    Some(Label::Ext(pr.uid))
                } else if self.conn.contains_key(a) || self.conn.contains_key(b) {
                    Some(Label::CutAx(pr.uid))
                } else {
                    None
                }
            }
            Rule::Tensor(g) | Rule::Par(g) | Rule::Mu(g) | Rule::Nu(g) | Rule::Bot(g) | Rule::One(g) => {
                if self.iota.contains(g) {
                    (!matches!(pr.rule, Rule::One(_)) || self.premises.len() == 1).then_some(Label::Ext(pr.uid))
                } else {
                    let h = self.conn.get(g)?;
                    let q = self.owner(h)?;
                    (q.rule.principal() == Some(h) && dual_rules(&pr.rule, &q.rule) && pr.uid < q.uid)
                        .then_some(Label::Princ(pr.uid, q.uid))
                }
            }
            _ => None,
        }
    }

    /// Recompute the redexes of touched premises and their partners.
    fn refresh(&mut self) {
        let mut todo: BTreeSet<usize> = self.dirty.drain(..).collect();
        if self.premises.len() <= 2 {
            todo.extend(self.premises.keys());
        }
        let partners: Vec<usize> = todo
            .iter()
            .filter_map(|u| self.premises.get(u))
            .filter_map(|pr| pr.rule.principal())
            .filter_map(|g| self.conn.get(g))
            .filter_map(|h| self.loc.get(h))
            .copied()
            .collect();
        todo.extend(partners);
        for u in todo {
            let Some(pr) = self.premises.get(&u) else { continue };
            match self.label_of(pr) {
                Some(l) => {
                    if self.labels.insert(u, l) != Some(l) {
                        self.added.push(l);
                    }
                }
                None => {
                    self.labels.remove(&u);
                }
            }
        }
    }

    /// Order the conclusion like the premise occurrences it stands for.
    fn canonicalize(&mut self) {
        let key = |a: &Address| {
            let pr = self.owner(a).expect("iota image is live");
            (pr.uid, pr.seq.iter().position(|o| &o.address == a).unwrap())
        };
        let mut pairs: Vec<((usize, usize), Occurrence, Address)> =
            self.conclusion.iter().zip(&self.iota).map(|(c, a)| (key(a), c.clone(), a.clone())).collect();
        pairs.sort_by_key(|x| x.0);
        self.conclusion = pairs.iter().map(|x| x.1.clone()).collect();
        self.iota = pairs.into_iter().map(|x| x.2).collect();
    }

    /// The multicut side conditions.
    pub fn check(&self) -> Result<(), String> {
        let mut owner: HashMap<&Address, (usize, &Formula)> = HashMap::new();
        for pr in self.premises.values() {
            for o in &pr.seq {
                if owner.insert(&o.address, (pr.uid, &o.formula)).is_some() {
                    return Err(format!("address {} occurs twice among the premises", o.address));
                }
            }
        }
        if self.iota.len() != self.conclusion.len() {
            return Err("iota does not cover the conclusion".into());
        }
        let mut used: HashSet<&Address> = HashSet::new();
        for (c, a) in self.conclusion.iter().zip(&self.iota) {
            let Some((_, f)) = owner.get(a) else { return Err(format!("iota image {a} is not a premise occurrence")) };
            if *f != &c.formula {
                return Err(format!("iota maps {c} to a different formula {f}"));
            }
            if !used.insert(a) {
                return Err(format!("iota is not injective at {a}"));
            }
        }
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (x, y) in self.connections() {
            if self.conn.get(y) != Some(x) {
                return Err(format!("connection {x} -- {y} is not symmetric"));
            }
            let (Some((i, f)), Some((j, g))) = (owner.get(x), owner.get(y)) else {
                return Err(format!("connection {x} -- {y} leaves the premises"));
            };
            if f.negate() != **g {
                return Err(format!("connection {x} -- {y} joins non-dual formulas"));
            }
            if i == j {
                return Err(format!("connection {x} -- {y} inside one premise"));
            }
            if !used.insert(x) || !used.insert(y) {
                return Err(format!("an end of {x} -- {y} is also in the image of iota"));
            }
            if !edges.insert((*i.min(j), *i.max(j))) {
                return Err(format!("premises #{i} and #{j} connected twice"));
            }
            adj.entry(*i).or_default().push(*j);
            adj.entry(*j).or_default().push(*i);
        }
        if used.len() != owner.len() {
            let free = owner.keys().find(|a| !used.contains(*a)).unwrap();
            return Err(format!("occurrence {free} is neither in the image of iota nor connected"));
        }
        let n = self.premises.len();
        let Some(&first) = self.premises.keys().next() else { return Err("no premises".into()) };
        if edges.len() != n - 1 {
            return Err(format!("{} connections between {n} premises: not a tree", edges.len()));
        }
        let mut seen: HashSet<usize> = HashSet::from([first]);
        let mut stack = vec![first];
        while let Some(u) = stack.pop() {
            for v in adj.get(&u).into_iter().flatten() {
                if seen.insert(*v) {
                    stack.push(*v);
                }
            }
        }
        if seen.len() != n {
            return Err("connection graph is disconnected".into());
        }
        Ok(())
    }
}

fn dual_rules(a: &Rule, b: &Rule) -> bool {
    use Rule::*;
    matches!(
        (a, b),
        (Tensor(_), Par(_)) | (Par(_), Tensor(_)) | (Mu(_), Nu(_)) | (Nu(_), Mu(_)) | (One(_), Bot(_)) | (Bot(_), One(_))
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutNode {
    pub conclusion: Sequent,
    /// `None` while a multicut still sits here.
    pub rule: Option<Rule>,
    pub children: Vec<usize>,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub step: usize,
    pub label: Label,
    /// The redex with its occurrences spelled out.
    pub text: String,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.text, self.step)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub uid: usize,
    pub parent: Option<usize>,
    pub node: NodeId,
    pub seq: Sequent,
    /// Principal occurrence of the rule applied to this sequent in the proof.
    pub distinguished: Option<Occurrence>,
}

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("redex {0} is not enabled")]
    NotEnabled(Label),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOutcome {
    /// Every open branch of the prefix has the requested depth.
    ReachedDepth,
    BudgetExhausted,
    /// No redex is enabled below the requested depth.
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionState {
    pub out: Vec<OutNode>,
    /// Multicuts keyed by the prefix leaf they sit on.
    pub frontier: BTreeMap<usize, Multicut>,
    pub log: Vec<LogEntry>,
    trace: Vec<TraceEntry>,
    root_conclusion: Sequent,
    next_uid: usize,
    fresh: usize,
}

pub fn init_multicut(p: &PreProof) -> Result<ReductionState, ReduceError> {
    prepare(p)?;
    let ren = Renaming(
        p.nodes[p.root].conclusion.iter().map(|o| (Address::atomic(&o.address.name), Address::atomic(&o.address.name))).collect(),
    );
    let mut st = ReductionState {
        out: Vec::new(),
        frontier: BTreeMap::new(),
        log: Vec::new(),
        trace: Vec::new(),
        root_conclusion: Vec::new(),
        next_uid: 0,
        fresh: 0,
    };
    let root = st.cursor(p, p.root, ren, None);
    let mut m = Multicut::new(root.seq.clone(), root.seq.iter().map(|o| o.address.clone()).collect());
    m.add(root);
    st.root_conclusion = m.conclusion.clone();
    st.out.push(OutNode { conclusion: m.conclusion.clone(), rule: None, children: Vec::new(), depth: 0 });
    st.put(0, m);
    Ok(st)
}

/// Where a fired redex left its effects.
struct Fired {
    touched: Vec<usize>,
    emitted: Option<usize>,
}

impl ReductionState {
    fn cursor(&mut self, p: &PreProof, node: NodeId, ren: Renaming, parent: Option<usize>) -> Premise {
        let n = &p.nodes[node];
        let seq = ren.apply_seq(&n.conclusion).expect("renaming covers the conclusion");
        let rule = rename_rule(&n.rule, &ren);
        let uid = self.next_uid;
        self.next_uid += 1;
        let distinguished = rule.principal().and_then(|a| seq.iter().find(|o| &o.address == a)).cloned();
        self.trace.push(TraceEntry { uid, parent, node, seq: seq.clone(), distinguished });
        Premise { uid, node, ren, seq, rule }
    }

    fn child(&mut self, p: &PreProof, pr: &Premise, ren: &Renaming, slot: usize) -> Premise {
        let (t, r) = match &p.nodes[pr.node].premises[slot] {
            Edge::Tree(c) => (*c, ren.clone()),
            Edge::Back(t, sigma) => (*t, ren.compose_after(sigma).expect("renaming covers the target")),
        };
        self.cursor(p, t, r, Some(pr.uid))
    }

    fn put(&mut self, oid: usize, mut m: Multicut) {
        m.refresh();
        self.frontier.insert(oid, m);
    }

    pub fn conclusion(&self) -> &Sequent {
        &self.out[0].conclusion
    }

    /// Enabled redexes, frontier by frontier in prefix order.
    pub fn enumerate_redexes(&self) -> Vec<Label> {
        self.frontier.values().flat_map(|m| m.labels()).collect()
    }

    fn locate(&self, l: Label) -> Option<usize> {
        self.frontier.iter().find(|(_, m)| m.labels.get(&l.uid()) == Some(&l)).map(|(k, _)| *k)
    }

    pub fn apply_reduction(&mut self, p: &PreProof, label: Label) -> Result<(), ReduceError> {
        let oid = self.locate(label).ok_or(ReduceError::NotEnabled(label))?;
        for o in self.fire(p, oid, label).touched {
            if let Some(m) = self.frontier.get_mut(&o) {
                m.added.clear();
            }
        }
        Ok(())
    }

    fn fire(&mut self, p: &PreProof, oid: usize, label: Label) -> Fired {
        let m = self.frontier.remove(&oid).unwrap();
        let (text, fired) = match label {
            Label::Merge(u) => (self.merge(p, oid, m, u), Fired { touched: vec![oid], emitted: None }),
            Label::Princ(u, v) => (self.princ(p, oid, m, u, v), Fired { touched: vec![oid], emitted: None }),
            Label::CutAx(u) => (self.cutax(oid, m, u), Fired { touched: vec![oid], emitted: None }),
            Label::Ext(u) => {
                let text = self.ext(p, oid, m, u);
                (text, Fired { touched: self.out[oid].children.clone(), emitted: Some(oid) })
            }
        };
        self.log.push(LogEntry { step: self.log.len(), label, text });
        fired
    }

    fn merge(&mut self, p: &PreProof, oid: usize, mut m: Multicut, uid: usize) -> String {
        let pr = m.take(uid);
        let Rule::Cut(f, beta) = &p.nodes[pr.node].rule else { unreachable!("merge on a non-cut") };
        self.fresh += 1;
        let a = Address::atomic(&format!("{}'{}", beta.name, self.fresh));
        let mut ren = pr.ren.clone();
        ren.bind_atom(&beta.name, a.clone());
        let l = self.child(p, &pr, &ren, 0);
        let r = self.child(p, &pr, &ren, 1);
        m.add(l);
        m.add(r);
        m.link(a.clone(), a.dual());
        self.put(oid, m);
        format!("merge {{{}, {}}}", Occurrence::new(f.clone(), a.clone()), Occurrence::new(f.negate(), a.dual()))
    }

    fn princ(&mut self, p: &PreProof, oid: usize, mut m: Multicut, u: usize, v: usize) -> String {
        let (pu, pv) = (m.take(u), m.take(v));
        let g = pu.rule.principal().unwrap().clone();
        let h = pv.rule.principal().unwrap().clone();
        let text = format!(
            "{{{}, {}}}",
            pu.seq.iter().find(|o| o.address == g).unwrap(),
            pv.seq.iter().find(|o| o.address == h).unwrap()
        );
        m.conn.remove(&g);
        m.conn.remove(&h);
        let kind = match (&pu.rule, &pv.rule) {
            (Rule::Mu(_) | Rule::Nu(_), _) => {
                let (a, b) = (self.child(p, &pu, &pu.ren, 0), self.child(p, &pv, &pv.ren, 0));
                m.add(a);
                m.add(b);
                m.link(g.child(Dir::I), h.child(Dir::I));
                "mu/nu"
            }
            (Rule::Tensor(_) | Rule::Par(_), _) => {
                let (t, r, gt, hr) = if matches!(pu.rule, Rule::Tensor(_)) { (&pu, &pv, &g, &h) } else { (&pv, &pu, &h, &g) };
                let tl = self.child(p, t, &t.ren, 0);
                let tr = self.child(p, t, &t.ren, 1);
                let r2 = self.child(p, r, &r.ren, 0);
                m.add(tl);
                m.add(tr);
                m.add(r2);
                m.link(gt.child(Dir::L), hr.child(Dir::L));
                m.link(gt.child(Dir::R), hr.child(Dir::R));
                "tensor/par"
            }
            _ => {
                let b = if matches!(pu.rule, Rule::Bot(_)) { &pu } else { &pv };
                let b2 = self.child(p, b, &b.ren, 0);
                m.add(b2);
                "bot/one"
            }
        };
        self.put(oid, m);
        format!("princ({kind}) {text}")
    }

    fn cutax(&mut self, oid: usize, mut m: Multicut, uid: usize) -> String {
        let occs = m.premises[&uid].seq.clone();
        let k = (0..2).find(|&k| m.conn.contains_key(&occs[k].address)).expect("connected axiom");
        let (f, fp) = (&occs[1 - k], &occs[k]);
        let f2 = m.unlink(&fp.address).unwrap();
        if let Some(pos) = m.iota.iter().position(|x| x == &f.address) {
            m.iota[pos] = f2.clone();
            m.mark(&f2);
        } else if let Some(g) = m.unlink(&f.address) {
            m.link(f2, g);
        }
        m.take(uid);
        self.put(oid, m);
        format!("cutax {{{f}, {fp}}}")
    }

    fn ext(&mut self, p: &PreProof, oid: usize, mut m: Multicut, uid: usize) -> String {
        let pr = m.premises[&uid].clone();
        let at = |m: &Multicut, a: &Address| m.iota.iter().position(|x| x == a).expect("conclusion-mapped");
        if let Rule::Ax(a, b) = &pr.rule {
            let (ca, cb) = (m.conclusion[at(&m, a)].clone(), m.conclusion[at(&m, b)].clone());
            self.emit(oid, Rule::Ax(ca.address.clone(), cb.address.clone()), Vec::new());
            return format!("ext(ax) {{{ca}, {cb}}}");
        }
        let g = pr.rule.principal().unwrap().clone();
        let c = at(&m, &g);
        let occ = m.conclusion[c].clone();
        let alpha = occ.address.clone();
        let text = format!("ext({}) {{{occ}}}", pr.rule.keyword());
        if let Rule::One(_) = pr.rule {
            self.emit(oid, Rule::One(alpha), Vec::new());
            return text;
        }
        m.take(uid);
        let rule = match &pr.rule {
            Rule::Bot(_) => {
                m.conclusion.remove(c);
                m.iota.remove(c);
                Rule::Bot(alpha)
            }
            Rule::Mu(_) | Rule::Nu(_) => {
                m.conclusion[c] = occ.unfold().expect("fixed point");
                m.iota[c] = g.child(Dir::I);
                if matches!(pr.rule, Rule::Mu(_)) {
                    Rule::Mu(alpha)
                } else {
                    Rule::Nu(alpha)
                }
            }
            Rule::Par(_) => {
                let (l, r) = occ.split().expect("binary");
                m.conclusion.splice(c..=c, [l, r]);
                m.iota.splice(c..=c, [g.child(Dir::L), g.child(Dir::R)]);
                Rule::Par(alpha)
            }
            Rule::Tensor(_) => {
                let (l, r) = occ.split().expect("binary");
                let tl = self.child(p, &pr, &pr.ren, 0);
                let tr = self.child(p, &pr, &pr.ren, 1);
                let (ul, ur) = (tl.uid, tr.uid);
                m.add(tl);
                m.add(tr);
                let (left, right) = split(m, c, (l, g.child(Dir::L)), (r, g.child(Dir::R)), ul, ur);
                self.emit(oid, Rule::Tensor(alpha), vec![left, right]);
                return text;
            }
            other => unreachable!("external step on {other}"),
        };
        let next = self.child(p, &pr, &pr.ren, 0);
        m.add(next);
        m.canonicalize();
        self.emit(oid, rule, vec![m]);
        text
    }

    fn emit(&mut self, oid: usize, rule: Rule, children: Vec<Multicut>) {
        let depth = self.out[oid].depth + 1;
        let mut ids = Vec::new();
        for c in children {
            let id = self.out.len();
            self.out.push(OutNode { conclusion: c.conclusion.clone(), rule: None, children: Vec::new(), depth });
            self.put(id, c);
            ids.push(id);
        }
        self.out[oid].rule = Some(rule);
        self.out[oid].children = ids;
    }

    fn check_frontier(&self, oid: usize) -> Result<(), String> {
        let Some(m) = self.frontier.get(&oid) else { return Ok(()) };
        let o = &self.out[oid];
        if o.rule.is_some() || o.conclusion != m.conclusion {
            return Err(format!("frontier {oid} does not match its prefix leaf"));
        }
        m.check().map_err(|e| format!("frontier {oid}: {e}"))
    }

    fn check_emitted(&self, id: usize) -> Result<(), String> {
        let o = &self.out[id];
        let Some(r) = &o.rule else { return Ok(()) };
        let kids: Vec<&Sequent> = o.children.iter().map(|c| &self.out[*c].conclusion).collect();
        check_schema(&o.conclusion, r, &kids).map_err(|e| format!("prefix node {id}: {e}"))
    }

    /// Multicut side conditions on every frontier, schema correctness of the
    /// prefix, and the unchanged overall conclusion.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.out[0].conclusion != self.root_conclusion {
            return Err("the conclusion changed".into());
        }
        for oid in self.frontier.keys() {
            self.check_frontier(*oid)?;
        }
        (0..self.out.len()).try_for_each(|id| self.check_emitted(id))
    }

    /// [`Self::fair_reduce_with`], checking invariants after every step.
    pub fn fair_reduce(&mut self, p: &PreProof, depth: usize, budget: usize) -> Result<ReduceOutcome, ReduceError> {
        self.fair_reduce_with(p, depth, budget, true)
    }

    /// Reduce with a FIFO of enabled redexes until every open branch of the
    /// prefix reaches `depth`. Multicuts already at that depth are frozen.
    /// With `check`, the multicuts and rules touched by each step are
    /// validated right after it.
    pub fn fair_reduce_with(
        &mut self,
        p: &PreProof,
        depth: usize,
        budget: usize,
        check: bool,
    ) -> Result<ReduceOutcome, ReduceError> {
        let mut queue: VecDeque<Label> = VecDeque::new();
        let mut queued: HashSet<Label> = HashSet::new();
        let enqueue = |st: &mut Self, oids: &[usize], queue: &mut VecDeque<Label>, queued: &mut HashSet<Label>| {
            for oid in oids {
                let active = st.out[*oid].depth < depth;
                let Some(m) = st.frontier.get_mut(oid) else { continue };
                for l in m.added.drain(..) {
                    if active && queued.insert(l) {
                        queue.push_back(l);
                    }
                }
            }
        };
        let all: Vec<usize> = self.frontier.keys().copied().collect();
        for oid in &all {
            let m = self.frontier.get_mut(oid).unwrap();
            m.added = m.labels.values().copied().collect();
        }
        enqueue(self, &all, &mut queue, &mut queued);
        let mut steps = 0;
        let mut active = self.frontier.keys().filter(|o| self.out[**o].depth < depth).count();
        loop {
            if active == 0 {
                return Ok(ReduceOutcome::ReachedDepth);
            }
            if steps == budget {
                return Ok(ReduceOutcome::BudgetExhausted);
            }
            let (oid, l) = loop {
                let Some(l) = queue.pop_front() else { return Ok(ReduceOutcome::Stuck) };
                queued.remove(&l);
                if let Some(oid) = self.locate(l) {
                    if self.out[oid].depth < depth {
                        break (oid, l);
                    }
                }
            };
            let fired = self.fire(p, oid, l);
            if fired.emitted.is_some() {
                active -= 1;
                active += fired.touched.iter().filter(|o| self.out[**o].depth < depth).count();
            }
            if check {
                if self.out[0].conclusion != self.root_conclusion {
                    return Err(ReduceError::Invariant("the conclusion changed".into()));
                }
                for oid in &fired.touched {
                    self.check_frontier(*oid).map_err(ReduceError::Invariant)?;
                }
                if let Some(id) = fired.emitted {
                    self.check_emitted(id).map_err(ReduceError::Invariant)?;
                }
            }
            enqueue(self, &fired.touched, &mut queue, &mut queued);
            steps += 1;
        }
    }

    pub fn emitted_rules(&self) -> Vec<&Rule> {
        self.out.iter().filter_map(|o| o.rule.as_ref()).collect()
    }

    pub fn render_log(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }

    /// The prefix as a proof graph with `open` at the frontier.
    pub fn prefix_proof(&self, name: &str) -> PreProof {
        let mut order = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(self.out[id].children.iter().rev());
        }
        let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(k, id)| (*id, k)).collect();
        let nodes = order
            .iter()
            .map(|id| {
                let o = &self.out[*id];
                ProofNode {
                    name: format!("n{}", pos[id]),
                    conclusion: o.conclusion.clone(),
                    rule: o.rule.clone().unwrap_or(Rule::Open),
                    premises: o.children.iter().map(|c| Edge::Tree(pos[c])).collect(),
                }
            })
            .collect();
        PreProof { name: name.to_string(), nodes, root: 0 }
    }

    pub fn trace_of(&self) -> Trace {
        let live: HashSet<usize> = self.frontier.values().flat_map(|m| m.premises.keys().copied()).collect();
        Trace { entries: self.trace.clone(), border: self.trace.iter().map(|e| live.contains(&e.uid)).collect() }
    }
}

/// Split a multicut after a tensor: premises `ul` and `ur` are the two
/// sides, connections decide where everything else goes. Conclusion slot
/// `c` is replaced by `left` in one half and `right` in the other.
fn split(m: Multicut, c: usize, left: (Occurrence, Address), right: (Occurrence, Address), ul: usize, ur: usize) -> (Multicut, Multicut) {
    let mut side: HashMap<usize, usize> = HashMap::from([(ul, 0), (ur, 1)]);
    let mut stack = vec![ul, ur];
    while let Some(u) = stack.pop() {
        let s = side[&u];
        for o in &m.premises[&u].seq {
            if let Some(v) = m.conn.get(&o.address).and_then(|b| m.loc.get(b)) {
                if !side.contains_key(v) {
                    side.insert(*v, s);
                    stack.push(*v);
                }
            }
        }
    }
    let mut parts = [Multicut::default(), Multicut::default()];
    for (k, (o, a)) in m.conclusion.into_iter().zip(m.iota).enumerate() {
        let (o, a) = if k == c { left.clone() } else { (o, a) };
        let s = if k == c { 0 } else { side[&m.loc[&a]] };
        parts[s].conclusion.push(o);
        parts[s].iota.push(a);
    }
    parts[1].conclusion.push(right.0);
    parts[1].iota.push(right.1);
    let conn: Vec<(Address, Address)> = m.conn.iter().filter(|(a, b)| a < b).map(|(a, b)| (a.clone(), b.clone())).collect();
    for (u, pr) in m.premises {
        parts[side[&u]].add(pr);
    }
    for (x, y) in conn {
        let s = side[&m.loc[&x]];
        parts[s].link(x, y);
    }
    let [mut l, mut r] = parts;
    l.canonicalize();
    r.canonicalize();
    (l, r)
}

fn minus(seq: &Sequent, a: &Address) -> Result<(Occurrence, Sequent), String> {
    let k = seq.iter().position(|o| &o.address == a).ok_or_else(|| format!("no occurrence at {a}"))?;
    let mut rest = seq.clone();
    let o = rest.remove(k);
    Ok((o, rest))
}

/// One emitted rule against its premises.
fn check_schema(concl: &Sequent, rule: &Rule, kids: &[&Sequent]) -> Result<(), String> {
    let bad = || Err(format!("{rule} does not fit {} over {} premises", format_sequent(concl), kids.len()));
    match rule {
        Rule::Ax(a, b) => {
            let (x, rest) = minus(concl, a)?;
            let (y, rest) = minus(&rest, b)?;
            if !rest.is_empty() || x.formula.negate() != y.formula || !kids.is_empty() {
                return bad();
            }
        }
        Rule::One(a) => {
            let (x, rest) = minus(concl, a)?;
            if !rest.is_empty() || x.formula != Formula::One || !kids.is_empty() {
                return bad();
            }
        }
        Rule::Bot(a) => {
            let (x, rest) = minus(concl, a)?;
            if x.formula != Formula::Bot || kids.len() != 1 || !same_set(&rest, kids[0]) {
                return bad();
            }
        }
        Rule::Mu(a) | Rule::Nu(a) => {
            let (x, mut rest) = minus(concl, a)?;
            let ok = matches!((rule, &x.formula), (Rule::Mu(_), Formula::Mu(_)) | (Rule::Nu(_), Formula::Nu(_)));
            rest.push(x.unfold().map_err(|e| e.to_string())?);
            if !ok || kids.len() != 1 || !same_set(&rest, kids[0]) {
                return bad();
            }
        }
        Rule::Par(a) => {
            let (x, mut rest) = minus(concl, a)?;
            let Some((l, r)) = x.split() else { return bad() };
            rest.extend([l, r]);
            if !matches!(x.formula, Formula::Par(..)) || kids.len() != 1 || !same_set(&rest, kids[0]) {
                return bad();
            }
        }
        Rule::Tensor(a) => {
            let (x, rest) = minus(concl, a)?;
            let Some((l, r)) = x.split() else { return bad() };
            if !matches!(x.formula, Formula::Tensor(..)) || kids.len() != 2 || !kids[0].contains(&l) || !kids[1].contains(&r) {
                return bad();
            }
            let mut joined: Sequent = kids[0].iter().chain(kids[1].iter()).filter(|o| **o != l && **o != r).cloned().collect();
            joined.sort();
            let mut want = rest;
            want.sort();
            if joined != want {
                return bad();
            }
        }
        _ => return Err(format!("{rule} in a cut-free prefix")),
    }
    Ok(())
}

/// Sequents that entered a multicut, as a subtree of the unfolding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Entered but never reduced.
    pub border: Vec<bool>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn border_entries(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().zip(&self.border).filter(|(_, b)| **b).map(|(e, _)| e)
    }

    /// Indented tree, one sequent per line; border lines carry their
    /// distinguished occurrence.
    pub fn render(&self, p: &PreProof) -> String {
        let idx: HashMap<usize, usize> = self.entries.iter().enumerate().map(|(k, e)| (e.uid, k)).collect();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); self.entries.len()];
        let mut roots = Vec::new();
        for (k, e) in self.entries.iter().enumerate() {
            match e.parent {
                Some(u) => kids[idx[&u]].push(k),
                None => roots.push(k),
            }
        }
        let mut s = String::new();
        let mut stack: Vec<(usize, usize)> = roots.into_iter().rev().map(|r| (r, 0)).collect();
        while let Some((k, d)) = stack.pop() {
            let e = &self.entries[k];
            s.push_str(&format!("{}{}  |- {}", "  ".repeat(d), p.nodes[e.node].name, format_sequent(&e.seq)));
            if self.border[k] {
                match &e.distinguished {
                    Some(o) => s.push_str(&format!("  [border: {o}]")),
                    None => s.push_str("  [border]"),
                }
            }
            s.push('\n');
            stack.extend(kids[k].iter().rev().map(|c| (*c, d + 1)));
        }
        s
    }
}

/// Fire `labels` in order from the initial state.
pub fn replay(p: &PreProof, labels: &[Label]) -> Result<ReductionState, ReduceError> {
    let mut st = init_multicut(p)?;
    for l in labels {
        st.apply_reduction(p, *l)?;
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::parse_proof;

    const PI0: &str = include_str!("../corpus/pi0.proof");
    const LOOP: &str = include_str!("../corpus/loop.proof");
    const UNSOUND: &str = include_str!("../corpus/unsound.proof");

    #[test]
    fn init_wraps_root() {
        let p = parse_proof(PI0).unwrap();
        let st = init_multicut(&p).unwrap();
        assert_eq!(st.frontier.len(), 1);
        let m = &st.frontier[&0];
        assert_eq!(m.premises.len(), 1);
        assert_eq!(m.iota, vec![Address::atomic("alpha")]);
        assert_eq!(st.conclusion(), &p.nodes[p.root].conclusion);
        assert_eq!(st.trace_of().len(), 1);
        assert_eq!(st.enumerate_redexes(), vec![Label::Merge(0)]);
        st.check_invariants().unwrap();
    }

    #[test]
    fn pi0_cycle_pattern() {
        let p = parse_proof(PI0).unwrap();
        let mut st = init_multicut(&p).unwrap();
        assert_eq!(st.fair_reduce(&p, 4, 1000).unwrap(), ReduceOutcome::ReachedDepth);
        st.check_invariants().unwrap();
        let rules = st.emitted_rules();
        assert_eq!(rules.len(), 4);
        assert!(rules.iter().all(|r| matches!(r, Rule::Nu(_))));
        let kinds: Vec<&str> = st.log.iter().map(|e| e.text.split([' ', '(']).next().unwrap()).collect();
        assert_eq!(kinds, ["merge", "princ", "cutax", "ext"].repeat(4));
        assert!(st.log.iter().filter(|e| e.text.starts_with("princ")).all(|e| e.text.starts_with("princ(mu/nu)")));
        assert!(st.log.iter().filter(|e| e.text.starts_with("ext")).all(|e| e.text.starts_with("ext(nu)")));
    }

    #[test]
    fn replay_reproduces_state() {
        let p = parse_proof(PI0).unwrap();
        let mut st = init_multicut(&p).unwrap();
        st.fair_reduce(&p, 3, 1000).unwrap();
        let labels: Vec<Label> = st.log.iter().map(|e| e.label).collect();
        assert_eq!(replay(&p, &labels).unwrap(), st);
    }

    #[test]
    fn disabled_label_refused() {
        let p = parse_proof(PI0).unwrap();
        let mut st = init_multicut(&p).unwrap();
        assert!(matches!(st.apply_reduction(&p, Label::Ext(0)), Err(ReduceError::NotEnabled(_))));
    }

    #[test]
    fn cut_free_prefix_is_unfolding() {
        let p = parse_proof(LOOP).unwrap();
        let mut st = init_multicut(&p).unwrap();
        assert_eq!(st.fair_reduce(&p, 3, 100).unwrap(), ReduceOutcome::ReachedDepth);
        assert!(st.log.iter().all(|e| e.text.starts_with("ext")));
        assert_eq!(st.emitted_rules().len(), 3);
    }

    #[test]
    fn unsound_never_emits() {
        let p = parse_proof(UNSOUND).unwrap();
        let mut st = init_multicut(&p).unwrap();
        assert_eq!(st.fair_reduce(&p, 1, 2000).unwrap(), ReduceOutcome::BudgetExhausted);
        assert!(st.emitted_rules().is_empty());
        st.check_invariants().unwrap();
    }

    #[test]
    fn trace_border_after_merge() {
        let p = parse_proof(PI0).unwrap();
        let mut st = init_multicut(&p).unwrap();
        st.apply_reduction(&p, Label::Merge(0)).unwrap();
        let t = st.trace_of();
        assert_eq!(t.len(), 3);
        let border: Vec<&str> = t.border_entries().map(|e| p.nodes[e.node].name.as_str()).collect();
        assert_eq!(border, ["m", "n1"]);
        let r = t.render(&p);
        assert!(r.contains("[border: mu X. X @ beta'1]"), "{r}");
    }
}
