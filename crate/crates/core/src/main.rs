use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use circ::address::Dir;
use circ::gadget::{compile, parse_machine, run_machine, RunResult, DEFAULT_FUEL};
use circ::multicut::{init_multicut, ReduceError, ReduceOutcome};
use circ::proof::{parse_proof, serialize_proof, validate, Analysis, PointedSequent, PreProof};
use circ::shortcut::build_effect_table;
use circ::thread::{athread_run, drive, format_word, Halt, RunResult as Dpda};
use circ::validity::{
    check_k_valid, check_straight, check_weak, find_min_k, oracle_check, prepare, CheckError, Verdict, WeakBounds,
};

const WEAK_WARNING: &str =
    "warning: weak validity is not a sound criterion; it accepts a proof of the empty sequent";

#[derive(Parser)]
#[command(name = "circ", version, about = "Circular proofs in multiplicative linear logic with fixed points")]
struct Cli {
    /// Print one JSON object on standard output instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Add wall-clock timings to the JSON report (makes it non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a proof file is a well-formed pre-proof.
    Lint { file: PathBuf },
    /// Decide validity.
    Check(CheckArgs),
    /// Dump the table of minimal shortcuts.
    Effects {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
    },
    /// Drive a pre-thread and print its weight.
    Weight(WeightArgs),
    /// Multicut elimination up to a depth.
    Reduce(ReduceArgs),
    /// Compile a two-counter machine into a pre-proof.
    Gen2cm {
        machine: PathBuf,
        #[arg(short, long)]
        o: PathBuf,
        #[arg(long)]
        tagmap: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Bouncing,
    Straight,
    Weak,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Bouncing)]
    mode: ModeArg,
    /// Search the least k up to this bound.
    #[arg(long, value_name = "KMAX")]
    min_k: Option<usize>,
    /// Cross-check with the lasso enumeration up to this length.
    #[arg(long, value_name = "BOUND")]
    oracle: Option<usize>,
    #[arg(long)]
    witness: bool,
}

#[derive(Args)]
struct WeightArgs {
    file: PathBuf,
    /// Start point as NODE:INDEX.
    #[arg(long)]
    from: String,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Direction at ⅋/⊗ with empty stack; repeat for later choices.
    #[arg(long, value_parser = ["l", "r"])]
    choose: Vec<String>,
}

#[derive(Args)]
struct ReduceArgs {
    file: PathBuf,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, value_name = "OUT")]
    emit_trace: Option<PathBuf>,
    #[arg(long, value_name = "OUT")]
    log: Option<PathBuf>,
}

enum Fail {
    Input(String),
    Internal(String),
}

impl From<CheckError> for Fail {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Explosion(_) => Fail::Internal(e.to_string()),
            _ => Fail::Input(e.to_string()),
        }
    }
}

struct Report {
    code: u8,
    text: String,
    json: Value,
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, s: &str) -> Result<(), Fail> {
    fs::write(path, s).map_err(|e| Fail::Internal(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(PreProof, Analysis), Fail> {
    let p = parse_proof(&read(path)?).map_err(|e| Fail::Input(format!("{}:{e}", path.display())))?;
    let an = prepare(&p)?;
    Ok((p, an))
}

fn lint(file: &Path) -> Result<Report, Fail> {
    let p = parse_proof(&read(file)?).map_err(|e| Fail::Input(format!("{}:{e}", file.display())))?;
    let diags = validate(&p);
    let text = if diags.is_empty() {
        format!("{}: ok ({} nodes)\n", p.name, p.len())
    } else {
        diags.iter().map(|d| format!("{d}\n")).collect()
    };
    Ok(Report {
        code: if diags.is_empty() { 0 } else { 2 },
        text,
        json: json!({
            "command": "lint",
            "proof": p.name,
            "nodes": p.len(),
            "verdict": if diags.is_empty() { "ok" } else { "malformed" },
            "diagnostics": diags,
        }),
    })
}

fn verdict_word(v: &Verdict) -> &'static str {
    if v.is_valid() {
        "Valid"
    } else {
        "Invalid"
    }
}

fn check(a: &CheckArgs, clock: &mut Vec<(&'static str, f64)>) -> Result<Report, Fail> {
    let (p, an) = load(&a.file)?;
    if let Some(kmax) = a.min_k {
        let t = Instant::now();
        let mk = find_min_k(&p, &an, kmax)?;
        clock.push(("min_k", t.elapsed().as_secs_f64()));
        let text = match mk.found {
            Some(k) => format!("min k = {k} (shortcut height bound {})\n", mk.height_bound),
            None => format!("no k up to {kmax} (shortcut height bound {})\n", mk.height_bound),
        };
        return Ok(Report {
            code: if mk.found.is_some() { 0 } else { 1 },
            text,
            json: json!({
                "command": "check",
                "proof": p.name,
                "mode": "bouncing",
                "verdict": if mk.found.is_some() { "Valid" } else { "Invalid" },
                "min_k": mk,
            }),
        });
    }
    let t = Instant::now();
    let (mode, v) = match a.mode {
        ModeArg::Bouncing => ("bouncing", check_k_valid(&p, &an, a.k)?),
        ModeArg::Straight => ("straight", check_straight(&p, &an)?),
        ModeArg::Weak => {
            eprintln!("{WEAK_WARNING}");
            ("weak", check_weak(&p, &an, a.k, WeakBounds::default()))
        }
    };
    clock.push(("check", t.elapsed().as_secs_f64()));
    let mut text = match a.mode {
        ModeArg::Straight => format!("{} (straight)\n", verdict_word(&v)),
        _ => format!("{} ({}, k = {})\n", verdict_word(&v), mode, a.k),
    };
    let witness = v.witness.as_ref().map(|l| l.describe(&p));
    if a.witness {
        if let Some(w) = &witness {
            text.push_str(&format!("witness: {w}\n"));
        }
    }
    let mut code = if v.is_valid() { 0 } else { 1 };
    let mut oracle = Value::Null;
    if let Some(bound) = a.oracle {
        if a.mode == ModeArg::Weak {
            return Err(Fail::Input("--oracle does not apply to weak mode".into()));
        }
        let t = Instant::now();
        let table = (a.mode == ModeArg::Bouncing).then(|| build_effect_table(&p, &an, a.k));
        let o = oracle_check(&p, &an, table.as_ref(), &p.priority_order(), bound);
        clock.push(("oracle", t.elapsed().as_secs_f64()));
        if !o.complete {
            eprintln!("warning: lasso bound {bound} may be too small to be exhaustive");
        }
        let agree = o.valid == v.is_valid();
        text.push_str(&format!(
            "oracle: {} over {} lassos{}\n",
            if o.valid { "Valid" } else { "Invalid" },
            o.lassos,
            if agree { "" } else { " (DISAGREES)" }
        ));
        if !agree {
            code = 3;
        }
        oracle = json!({ "valid": o.valid, "lassos": o.lassos, "complete": o.complete, "agrees": agree });
    }
    Ok(Report {
        code,
        text,
        json: json!({
            "command": "check",
            "proof": p.name,
            "mode": mode,
            "k": if a.mode == ModeArg::Straight { Value::Null } else { json!(a.k) },
            "verdict": verdict_word(&v),
            "witness": witness,
            "stats": {
                "automaton_states": v.states,
                "shortcuts": v.shortcuts,
                "summaries": v.summaries,
                "subsets": v.subsets,
            },
            "oracle": oracle,
        }),
    })
}

fn effects(file: &Path, k: usize) -> Result<Report, Fail> {
    let (p, an) = load(file)?;
    let table = build_effect_table(&p, &an, k);
    let entries: Vec<Value> = table
        .entries
        .iter()
        .map(|(ps, r)| match r {
            Ok(s) => json!({
                "at": p.format_pointed(*ps),
                "height": s.max_height,
                "effect": s.effect.to_string(),
                "end": p.format_pointed(s.end),
            }),
            Err(f) => json!({ "at": p.format_pointed(*ps), "none": f.to_string() }),
        })
        .collect();
    Ok(Report {
        code: 0,
        text: table.render(&p),
        json: json!({
            "command": "effects",
            "proof": p.name,
            "k": k,
            "shortcuts": table.shortcuts().count(),
            "max_height": table.max_height(),
            "entries": entries,
        }),
    })
}

fn parse_pointed(p: &PreProof, s: &str) -> Result<PointedSequent, Fail> {
    let bad = || Fail::Input(format!("bad start point '{s}', expected NODE:INDEX"));
    let (node, index) = s.rsplit_once(':').ok_or_else(bad)?;
    let node = p.node_by_name(node).ok_or_else(|| Fail::Input(format!("unknown node '{node}'")))?;
    let index: usize = index.parse().map_err(|_| bad())?;
    if index >= p.nodes[node].conclusion.len() {
        return Err(Fail::Input(format!("node {} has no occurrence {index}", p.nodes[node].name)));
    }
    Ok(PointedSequent { node, index })
}

fn weight(a: &WeightArgs) -> Result<Report, Fail> {
    let (p, an) = load(&a.file)?;
    let start = parse_pointed(&p, &a.from)?;
    let choices: Vec<Dir> = a.choose.iter().map(|c| if c == "l" { Dir::L } else { Dir::R }).collect();
    let d = drive(&p, &an, start, a.steps, &choices);
    let word = format_word(&d.letters);
    let (accepted, configs) = match athread_run(&d.letters) {
        Dpda::Accept { trace, .. } => (true, trace.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
        Dpda::Reject { position, reason } => (false, vec![format!("rejected at {position}: {reason}")]),
    };
    let lost = matches!(d.halt, Some(Halt::Unit | Halt::Mismatch)) || !accepted;
    let mut text = format!("weight: {word}\nheight: {}\n", d.max_height);
    if let Some(h) = d.halt {
        text.push_str(&format!("halted: {h}\n"));
    }
    text.push_str("trace:\n");
    for (c, (ps, m)) in configs.iter().zip(d.steps.iter().map(|(ps, m)| (p.format_pointed(*ps), m))) {
        text.push_str(&format!("  {ps} {m} {c}\n"));
    }
    Ok(Report {
        code: if lost { 1 } else { 0 },
        text,
        json: json!({
            "command": "weight",
            "proof": p.name,
            "from": a.from,
            "weight": word,
            "height": d.max_height,
            "halt": d.halt.map(|h| h.to_string()),
            "thread": accepted,
            "trace": configs,
        }),
    })
}

fn reduce(a: &ReduceArgs, clock: &mut Vec<(&'static str, f64)>) -> Result<Report, Fail> {
    let (p, _) = load(&a.file)?;
    let mut st = init_multicut(&p).map_err(reduce_fail)?;
    let t = Instant::now();
    let outcome = st.fair_reduce(&p, a.depth, a.max_steps).map_err(reduce_fail)?;
    clock.push(("reduce", t.elapsed().as_secs_f64()));
    let prefix = serialize_proof(&st.prefix_proof(&format!("{}_reduct", p.name)));
    if let Some(out) = &a.log {
        write(out, &st.render_log())?;
    }
    let trace = st.trace_of();
    if let Some(out) = &a.emit_trace {
        write(out, &trace.render(&p))?;
    }
    let name = match outcome {
        ReduceOutcome::ReachedDepth => "ReachedDepth",
        ReduceOutcome::BudgetExhausted => "BudgetExhausted",
        ReduceOutcome::Stuck => "Stuck",
    };
    let text = format!("{prefix}# {name} after {} steps, {} rules emitted\n", st.log.len(), st.emitted_rules().len());
    Ok(Report {
        code: if outcome == ReduceOutcome::ReachedDepth { 0 } else { 1 },
        text,
        json: json!({
            "command": "reduce",
            "proof": p.name,
            "depth": a.depth,
            "outcome": name,
            "steps": st.log.len(),
            "emitted": st.emitted_rules().len(),
            "trace_size": trace.len(),
            "border": trace.border_entries().count(),
            "prefix": prefix,
        }),
    })
}

fn reduce_fail(e: ReduceError) -> Fail {
    match e {
        ReduceError::Check(c) => c.into(),
        other => Fail::Internal(other.to_string()),
    }
}

fn gen2cm(machine: &Path, o: &Path, tagmap: Option<&Path>) -> Result<Report, Fail> {
    let m = parse_machine(&read(machine)?).map_err(|e| Fail::Input(format!("{}:{e}", machine.display())))?;
    let gp = compile(&m);
    write(o, &serialize_proof(&gp.proof))?;
    let tags = gp.tag_names();
    if let Some(t) = tagmap {
        let s = serde_json::to_string_pretty(&tags).map_err(|e| Fail::Internal(e.to_string()))?;
        write(t, &(s + "\n"))?;
    }
    let run = match run_machine(&m, DEFAULT_FUEL) {
        RunResult::Halts { configs, zero } => format!("halts after {} steps{}", configs.len() - 1, if zero { "" } else { " (non-zero counters)" }),
        RunResult::Stuck { configs } => format!("stuck after {} steps", configs.len() - 1),
        RunResult::OutOfFuel => "no halt within fuel".into(),
    };
    Ok(Report {
        code: 0,
        text: format!("{} nodes written to {} (machine {run})\n", gp.proof.len(), o.display()),
        json: json!({
            "command": "gen2cm",
            "nodes": gp.proof.len(),
            "states": m.states.len(),
            "run": run,
            "tags": tags.len(),
        }),
    })
}

fn dispatch(cli: &Cli, clock: &mut Vec<(&'static str, f64)>) -> Result<Report, Fail> {
    match &cli.cmd {
        Cmd::Lint { file } => lint(file),
        Cmd::Check(a) => check(a, clock),
        Cmd::Effects { file, k } => effects(file, *k),
        Cmd::Weight(a) => weight(a),
        Cmd::Reduce(a) => reduce(a, clock),
        Cmd::Gen2cm { machine, o, tagmap } => gen2cm(machine, o, tagmap.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut clock = Vec::new();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(&cli, &mut clock)))
        .unwrap_or_else(|_| Err(Fail::Internal("panic".into())));
    let (code, text, failed, mut report) = match result {
        Ok(r) => (r.code, r.text, false, r.json),
        Err(Fail::Input(m)) => (2, format!("error: {m}\n"), true, json!({ "error": m, "kind": "input" })),
        Err(Fail::Internal(m)) => (3, format!("internal error: {m}\n"), true, json!({ "error": m, "kind": "internal" })),
    };
    if cli.json {
        report["exit"] = json!(code);
        if cli.timings {
            report["timings"] = clock.iter().map(|(k, s)| (k.to_string(), json!(s))).collect();
        }
        println!("{report}");
    } else if failed {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(code)
}
