//! One line per acceptance criterion. Runs without the test harness so the
//! lines always show; exits non-zero if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use circ::gadget::*;
use circ::multicut::{init_multicut, replay, ReduceOutcome};
use circ::proof::{parse_proof, PreProof, Rule};
use circ::shortcut::build_effect_table;
use circ::thread::{athread_run, Earley, Letter, Nonterminal, RunResult as Dpda};
use circ::validity::*;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXHAUSTIVE_LEN: usize = 6;
const RANDOM_WORDS: usize = 10_000;
const RANDOM_WORD_LEN: usize = 20;
const RANDOM_GRAPHS: usize = 200;
const RANDOM_GRAPH_NODES: usize = 8;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const HIERARCHY_K: usize = 8;
const K_MAX_2CM: usize = 6;
const FUEL: usize = 100_000;

struct Line {
    id: &'static str,
    ok: bool,
    detail: String,
}

/// Thread-shaped: accepted and back at rest (going up, empty stack).
fn dpda_thread_shaped(w: &[Letter]) -> bool {
    match athread_run(w) {
        Dpda::Accept { trace, .. } => trace.last().unwrap().is_rest(),
        Dpda::Reject { .. } => false,
    }
}

fn c1_grammar() -> Line {
    let mut words = 0usize;
    let mut bad = 0usize;
    let mut e = Earley::new(Nonterminal::S);
    let mut w: Vec<Letter> = Vec::new();
    // Depth-first over all words, pushing and popping the recogniser.
    fn go(e: &mut Earley, w: &mut Vec<Letter>, words: &mut usize, bad: &mut usize) {
        *words += 1;
        let g = e.viable() && e.accepts();
        if g != dpda_thread_shaped(w) {
            *bad += 1;
        }
        if w.len() == EXHAUSTIVE_LEN {
            return;
        }
        for l in Letter::ALL {
            w.push(l);
            let viable = e.push(l);
            if viable {
                go(e, w, words, bad);
            } else {
                // Dead prefix: the grammar rejects every extension.
                count_dead(w, words, bad);
            }
            e.pop();
            w.pop();
        }
    }
    fn count_dead(w: &mut Vec<Letter>, words: &mut usize, bad: &mut usize) {
        *words += 1;
        if dpda_thread_shaped(w) {
            *bad += 1;
        }
        if w.len() == EXHAUSTIVE_LEN {
            return;
        }
        for l in Letter::ALL {
            w.push(l);
            count_dead(w, words, bad);
            w.pop();
        }
    }
    go(&mut e, &mut w, &mut words, &mut bad);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rbad = 0;
    for _ in 0..RANDOM_WORDS {
        let w = structured_word(&mut rng, RANDOM_WORD_LEN);
        if circ::thread::grammar_member(&w, Nonterminal::S) != dpda_thread_shaped(&w) {
            rbad += 1;
        }
    }
    let expected: usize = (0..=EXHAUSTIVE_LEN as u32).map(|n| 9usize.pow(n)).sum();
    Line {
        id: "1 grammar/automaton equivalence",
        ok: bad == 0 && rbad == 0 && words == expected,
        detail: format!("{words} words of length <= {EXHAUSTIVE_LEN}: {bad} disagreements; {RANDOM_WORDS} structured words <= {RANDOM_WORD_LEN}: {rbad}"),
    }
}

fn prep(p: &PreProof) -> circ::proof::Analysis {
    prepare(p).unwrap()
}

fn c2_golden() -> Line {
    let mut checks: Vec<(&str, bool)> = Vec::new();
    let pi0 = corpus("pi0.proof");
    let a = prep(&pi0);
    checks.push(("pi0 straight Invalid", !check_straight(&pi0, &a).unwrap().is_valid()));
    checks.push(("pi0 k=0 Invalid", !check_k_valid(&pi0, &a, 0).unwrap().is_valid()));
    checks.push(("pi0 k=1 Valid", check_k_valid(&pi0, &a, 1).unwrap().is_valid()));
    checks.push(("pi0 min-k 1", find_min_k(&pi0, &a, HIERARCHY_K).unwrap().found == Some(1)));
    let left = corpus("validproofs_left.proof");
    checks.push(("left k=0 Valid", check_k_valid(&left, &prep(&left), 0).unwrap().is_valid()));
    let right = corpus("validproofs_right.proof");
    let ar = prep(&right);
    checks.push(("right Invalid k<=8", (0..=8).all(|k| !check_k_valid(&right, &ar, k).unwrap().is_valid())));
    let uns = corpus("unsound.proof");
    let au = prep(&uns);
    checks.push(("unsound weak Valid", check_weak(&uns, &au, 2, WeakBounds::default()).is_valid()));
    checks.push(("unsound Invalid k<=8", (0..=8).all(|k| !check_k_valid(&uns, &au, k).unwrap().is_valid())));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Line {
        id: "2 golden verdicts",
        ok: failed.is_empty(),
        detail: if failed.is_empty() { format!("{} outcomes match", checks.len()) } else { format!("mismatch: {}", failed.join(", ")) },
    }
}

fn agree(p: &PreProof, k: usize) -> (bool, bool) {
    let an = prep(p);
    let v = check_k_valid(p, &an, k).unwrap();
    let table = build_effect_table(p, &an, k);
    let ord = p.priority_order();
    let o = oracle_check(p, &an, Some(&table), &ord, 2 * p.len());
    let witness_sound = v.witness.as_ref().is_none_or(|l| !oracle_lasso(p, &an, Some(&table), &ord, l));
    (o.valid == v.is_valid(), witness_sound)
}

fn c3_oracle() -> Line {
    let t = Instant::now();
    let mut runs = 0;
    let mut disagree = 0;
    let mut unsound_witness = 0;
    let mut graphs: Vec<PreProof> = ["pi0.proof", "validproofs_left.proof", "validproofs_right.proof", "unsound.proof", "loop.proof"]
        .iter()
        .map(|f| corpus(f))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    graphs.extend((0..RANDOM_GRAPHS).map(|_| random_graph(&mut rng, RANDOM_GRAPH_NODES)));
    for p in &graphs {
        for k in 0..=2 {
            let (a, w) = agree(p, k);
            runs += 1;
            disagree += usize::from(!a);
            unsound_witness += usize::from(!w);
        }
    }
    let el = t.elapsed();
    Line {
        id: "3 oracle agreement",
        ok: disagree == 0 && unsound_witness == 0 && el <= ORACLE_BUDGET,
        detail: format!(
            "{} graphs x k in 0..=2: {runs} runs, {disagree} disagreements, {unsound_witness} unconfirmed witnesses, {:.1}s (limit {}s)",
            graphs.len(),
            el.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    }
}

fn c4_hierarchy() -> Line {
    let mut notes = Vec::new();
    let mut ok = true;
    for f in ["pi0.proof", "validproofs_left.proof", "loop.proof"] {
        let p = corpus(f);
        let an = prep(&p);
        let vs: Vec<bool> = (0..=HIERARCHY_K).map(|k| check_k_valid(&p, &an, k).unwrap().is_valid()).collect();
        let first = vs.iter().position(|v| *v);
        let mono = first.is_some_and(|k| vs[k..].iter().all(|v| *v));
        let mk = find_min_k(&p, &an, HIERARCHY_K).unwrap();
        let bounded = mk.found.is_some_and(|k| mk.height_bound >= k);
        ok &= mono && bounded && mk.found == first;
        notes.push(format!("{f}: min {:?} bound {}", mk.found, mk.height_bound));
    }
    Line { id: "4 k-hierarchy", ok, detail: notes.join("; ") }
}

fn c5_reduction_golden() -> Line {
    let p = corpus("pi0.proof");
    let mut st = init_multicut(&p).unwrap();
    let out = st.fair_reduce(&p, 4, 1000).unwrap();
    let rules = st.emitted_rules();
    let four_nu = rules.len() == 4 && rules.iter().all(|r| matches!(r, Rule::Nu(_)));
    let prefix = st.prefix_proof("r");
    let open_leaf = prefix.nodes.iter().filter(|n| n.rule == Rule::Open).count() == 1;
    let golden = std::fs::read_to_string(corpus_path("pi0.reduce.log")).unwrap();
    let exact = st.render_log() == golden;
    let kinds: Vec<&str> = st.log.iter().map(|e| e.text.split([' ', '{']).next().unwrap()).collect();
    let pattern = kinds.chunks(4).all(|c| c == ["merge", "princ(mu/nu)", "cutax", "ext(nu)"]) && kinds.len() == 16;
    Line {
        id: "5 cut-elimination golden",
        ok: out == ReduceOutcome::ReachedDepth && four_nu && open_leaf && exact && pattern,
        detail: format!("four nu over open: {}, per-loop pattern: {pattern}, log matches: {exact}", four_nu && open_leaf),
    }
}

fn c6_multicut_safety() -> Line {
    let mut steps = 0;
    let mut violations = 0;
    let mut runs: Vec<(String, PreProof, usize, usize)> = vec![
        ("pi0".into(), corpus("pi0.proof"), 6, 1000),
        ("left".into(), corpus("validproofs_left.proof"), 6, 1000),
        ("right".into(), corpus("validproofs_right.proof"), 4, 500),
        ("unsound".into(), corpus("unsound.proof"), 2, 500),
        ("loop".into(), corpus("loop.proof"), 5, 100),
    ];
    let src = std::fs::read_to_string(corpus_path("m1.machine")).unwrap();
    runs.push(("m1".into(), compile(&parse_machine(&src).unwrap()).proof, 3, 400));
    for (_, p, depth, budget) in &runs {
        let mut st = init_multicut(p).unwrap();
        if st.fair_reduce_with(p, *depth, *budget, false).is_err() {
            violations += 1;
            continue;
        }
        // Replay step by step with the full invariant check after each.
        let labels: Vec<_> = st.log.iter().map(|e| e.label).collect();
        let mut r = init_multicut(p).unwrap();
        let root = r.conclusion().clone();
        for l in labels {
            steps += 1;
            if r.apply_reduction(p, l).is_err() || r.check_invariants().is_err() || r.conclusion() != &root {
                violations += 1;
            }
        }
        if replay(p, &st.log.iter().map(|e| e.label).collect::<Vec<_>>()).ok().as_ref() != Some(&st) {
            violations += 1;
        }
    }
    Line {
        id: "6 multicut safety",
        ok: violations == 0 && steps > 0,
        detail: format!("{} runs, {steps} steps checked, {violations} violations", runs.len()),
    }
}

fn c7_two_counter() -> Line {
    let load = |n: &str| parse_machine(&std::fs::read_to_string(corpus_path(&format!("{n}.machine"))).unwrap()).unwrap();
    let mut notes = Vec::new();
    let m1 = compile(&load("m1"));
    let a1 = prep(&m1.proof);
    let mk = find_min_k(&m1.proof, &a1, 16).unwrap();
    let valid = mk.found.is_some_and(|k| check_k_valid(&m1.proof, &a1, k).unwrap().is_valid());
    notes.push(format!("m1 k* = {:?}", mk.found));
    let exits = match simulate_main_thread(&m1, FUEL) {
        Simulation::Exits(t) => t.main_exit.is_some_and(|w| w.ends_with("rrrr")),
        _ => false,
    };
    let m2 = compile(&load("m2"));
    let a2 = prep(&m2.proof);
    let m2_invalid = (0..=K_MAX_2CM).all(|k| !check_k_valid(&m2.proof, &a2, k).unwrap().is_valid());
    let m2_no_exit = !matches!(simulate_main_thread(&m2, FUEL), Simulation::Exits(_));
    notes.push(format!("m1 exits r4: {exits}, m2 invalid k<={K_MAX_2CM}: {m2_invalid}, m2 no exit: {m2_no_exit}"));
    let table: &[(Gadget, &str, &str)] = &[
        (Gadget::Inc1, "rr", "rlr"),
        (Gadget::Dec1, "rlr", "rr"),
        (Gadget::Inc2, "rlrr", "rlrrl"),
        (Gadget::Dec2, "rllrrlr", "rllrrr"),
        (Gadget::Counter, "rllrl", "l"),
        (Gadget::CopyL, "lr", "llr"),
        (Gadget::Prep, "rllrrlrr", "rllrrlrrlrr"),
        (Gadget::Result, "rllrrlrr", "llrrlllrrlrr"),
        (Gadget::R, "rl", "l"),
        (Gadget::L, "lr", "r"),
    ];
    let mut rows = 0;
    let mut bad = Vec::new();
    for side in [Side::Main, Side::Dual] {
        let on = if side == Side::Main { "g" } else { "f" };
        let mut expect = |g: Gadget, entry: &str, want: ActionResult| {
            rows += 1;
            if stack_action(g, side, entry) != want {
                bad.push(format!("{g:?}/{side:?}"));
            }
        };
        let reached = |e: &str, s: &str| ActionResult::Reached { exit: e.into(), stack: s.into() };
        let out = |s: &str| ActionResult::Returned { on: on.into(), stack: s.into() };
        for &(g, a, b) in table {
            expect(g, a, reached("next", b));
        }
        expect(Gadget::Shift, "lllrrl", out("llrrll"));
        expect(Gadget::Move, "llrrl", out("llrrlll"));
        expect(Gadget::Test1, "rrrr", reached("zero", "rrrr"));
        expect(Gadget::Test1, "rlrr", reached("pos", "rlrr"));
        expect(Gadget::Test2, "rllrrrrr", reached("zero", "rllrrrrr"));
        expect(Gadget::Test2, "rllrrlrr", reached("pos", "rllrrlrr"));
        expect(Gadget::Final, "r", out("r"));
        match side {
            Side::Main => {
                expect(Gadget::Init, "", reached("next", "rrrr"));
                expect(Gadget::Ri, "l", reached("next", "rl"));
                expect(Gadget::Li, "r", reached("next", "lr"));
            }
            Side::Dual => {
                expect(Gadget::Init, "r", reached("next", "rrr"));
                expect(Gadget::Ri, "rl", reached("next", "rrl"));
                expect(Gadget::Li, "r", reached("next", "rl"));
            }
        }
    }
    notes.push(format!("{rows} stack-action rows, {} wrong", bad.len()));
    Line {
        id: "7 2CM end-to-end",
        ok: valid && exits && m2_invalid && m2_no_exit && bad.is_empty(),
        detail: notes.join("; "),
    }
}

fn circ(args: &[&str]) -> (i32, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_circ")).args(args).output().expect("binary runs");
    (o.status.code().unwrap_or(-1), o.stdout)
}

fn c8_determinism() -> Line {
    let tmp = std::env::temp_dir().join(format!("circ-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let out = tmp.join("m1.proof");
    let tags = tmp.join("m1.tags");
    let c = |f: &str| corpus_path(f);
    let cmds: Vec<Vec<String>> = vec![
        vec!["lint".into(), c("pi0.proof")],
        vec!["check".into(), c("pi0.proof"), "--k".into(), "1".into()],
        vec!["check".into(), c("pi0.proof"), "--mode".into(), "straight".into(), "--witness".into()],
        vec!["check".into(), c("validproofs_right.proof"), "--min-k".into(), "4".into()],
        vec!["check".into(), c("unsound.proof"), "--mode".into(), "weak".into(), "--k".into(), "2".into()],
        vec!["check".into(), c("pi0.proof"), "--k".into(), "0".into(), "--oracle".into(), "10".into()],
        vec!["check".into(), c("additive.proof"), "--k".into(), "1".into()],
        vec!["effects".into(), c("pi0.proof"), "--k".into(), "1".into()],
        vec!["weight".into(), c("pi0.proof"), "--from".into(), "c:0".into(), "--steps".into(), "20".into()],
        vec!["reduce".into(), c("pi0.proof"), "--depth".into(), "4".into()],
        vec!["gen2cm".into(), c("m1.machine"), "-o".into(), out.display().to_string(), "--tagmap".into(), tags.display().to_string()],
    ];
    let mut diffs = 0;
    let mut unparsable = 0;
    for cmd in &cmds {
        let mut args: Vec<&str> = vec!["--json"];
        args.extend(cmd.iter().map(|s| s.as_str()));
        let (c1, a) = circ(&args);
        let (c2, b) = circ(&args);
        if a != b || c1 != c2 {
            diffs += 1;
        }
        let v: Option<serde_json::Value> = serde_json::from_slice(&a).ok();
        if v.as_ref().and_then(|v| v.get("exit")).and_then(|e| e.as_i64()) != Some(c1 as i64) {
            unparsable += 1;
        }
    }
    // Exit codes and human/JSON verdict agreement.
    let mut codes = Vec::new();
    for (args, want) in [
        (vec!["check", &c("pi0.proof"), "--k", "1"], 0),
        (vec!["check", &c("pi0.proof"), "--mode", "straight"], 1),
        (vec!["check", &c("additive.proof"), "--k", "1"], 2),
    ] {
        let (code, text) = circ(&args);
        let mut j = vec!["--json"];
        j.extend(args.iter().copied());
        let (_, json) = circ(&j);
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap_or_default();
        let text = String::from_utf8_lossy(&text);
        let verdict_ok = match v.get("verdict").and_then(|x| x.as_str()) {
            Some(verdict) => text.starts_with(verdict),
            None => code == 2,
        };
        codes.push(code == want && verdict_ok);
    }
    let _ = std::fs::remove_dir_all(&tmp);
    let codes_ok = codes.iter().all(|c| *c);
    Line {
        id: "8 determinism",
        ok: diffs == 0 && unparsable == 0 && codes_ok,
        detail: format!("{} commands twice: {diffs} differ, {unparsable} bad reports; exit codes 0/1/2 as documented: {codes_ok}", cmds.len()),
    }
}

fn main() -> ExitCode {
    // Sanity: the golden files parse.
    for f in GOLDEN {
        parse_proof(&std::fs::read_to_string(corpus_path(f)).unwrap()).unwrap();
    }
    let checks: [fn() -> Line; 8] =
        [c1_grammar, c2_golden, c3_oracle, c4_hierarchy, c5_reduction_golden, c6_multicut_safety, c7_two_counter, c8_determinism];
    let mut all = true;
    for c in checks {
        let t = Instant::now();
        let l = c();
        all &= l.ok;
        println!("criterion {:<34} {}  ({}; {:.2}s)", l.id, if l.ok { "PASS" } else { "FAIL" }, l.detail, t.elapsed().as_secs_f64());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
