mod common;

use std::process::{Command, Output};

use common::corpus_path;

fn circ(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circ")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn documented_exit_codes() {
    let pi0 = corpus_path("pi0.proof");
    assert_eq!(code(&circ(&["check", &pi0, "--k", "1"])), 0);
    assert_eq!(code(&circ(&["check", &pi0, "--k", "0"])), 1);
    assert_eq!(code(&circ(&["check", &pi0, "--mode", "straight"])), 1);
    let add = circ(&["check", &corpus_path("additive.proof"), "--k", "1"]);
    assert_eq!(code(&add), 2);
    assert!(String::from_utf8_lossy(&add.stderr).contains('+'));
    assert_eq!(code(&circ(&["lint", &pi0])), 0);
    assert_eq!(code(&circ(&["check", "/nonexistent.proof"])), 2);
}

#[test]
fn lint_reports_malformed_graphs() {
    let dir = std::env::temp_dir().join(format!("circ-cli-lint-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.proof");
    std::fs::write(&bad, "proof bad\nnode a\n  seq nu X. X @ x, mu X. X @ y\n  rule ax(x, x)\nroot a\n").unwrap();
    let o = circ(&["lint", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    assert!(stdout(&o).contains("node a"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_and_text_verdicts_agree_on_the_corpus() {
    for f in ["pi0.proof", "validproofs_left.proof", "validproofs_right.proof", "unsound.proof", "loop.proof", "additive.proof"] {
        for k in ["0", "1", "2"] {
            let p = corpus_path(f);
            let text = circ(&["check", &p, "--k", k]);
            let json = circ(&["--json", "check", &p, "--k", k]);
            assert_eq!(code(&text), code(&json), "{f}");
            let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
            assert_eq!(v["exit"], code(&json));
            match v["verdict"].as_str() {
                Some(verdict) => assert!(stdout(&text).starts_with(verdict), "{f} k={k}"),
                None => assert_eq!(code(&text), 2),
            }
        }
    }
}

#[test]
fn weak_mode_warns() {
    let o = circ(&["check", &corpus_path("unsound.proof"), "--mode", "weak", "--k", "2"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a sound criterion"));
}

#[test]
fn witness_and_oracle() {
    let o = circ(&["check", &corpus_path("pi0.proof"), "--k", "0", "--witness", "--oracle", "10"]);
    assert_eq!(code(&o), 1);
    let s = stdout(&o);
    assert!(s.contains("witness: stem ["), "{s}");
    assert!(s.contains("oracle: Invalid"), "{s}");
}

#[test]
fn min_k_sweep() {
    let o = circ(&["--json", "check", &corpus_path("pi0.proof"), "--min-k", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["min_k"]["found"], 1);
    assert!(v["min_k"]["height_bound"].as_u64().unwrap() >= 1);
    let o = circ(&["check", &corpus_path("validproofs_right.proof"), "--min-k", "3"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn effects_table_lines() {
    let o = circ(&["effects", &corpus_path("pi0.proof"), "--k", "1"]);
    let s = stdout(&o);
    assert!(s.lines().any(|l| l == "c:0  ->  Some(height=1, effect=c_r·i, end=n2:0)"), "{s}");
    assert!(s.lines().all(|l| l.contains("  ->  ")));
}

#[test]
fn weight_of_a_driven_thread() {
    let o = circ(&["weight", &corpus_path("pi0.proof"), "--from", "c:0", "--steps", "6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("weight: W W A i\u{304} C i\nheight: 1\n"), "{}", stdout(&o));
    assert_eq!(code(&circ(&["weight", &corpus_path("pi0.proof"), "--from", "zz:0"])), 2);
}

#[test]
fn reduce_writes_log_and_trace() {
    let dir = std::env::temp_dir().join(format!("circ-cli-reduce-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let log = dir.join("log");
    let trace = dir.join("trace");
    let o = circ(&[
        "reduce",
        &corpus_path("pi0.proof"),
        "--depth",
        "4",
        "--log",
        log.to_str().unwrap(),
        "--emit-trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&log).unwrap(), std::fs::read_to_string(corpus_path("pi0.reduce.log")).unwrap());
    assert!(std::fs::read_to_string(&trace).unwrap().contains("[border"));
    let prefix = stdout(&o);
    assert_eq!(prefix.matches("rule nu@").count(), 4);
    assert_eq!(prefix.matches("rule open").count(), 1);
    let o = circ(&["reduce", &corpus_path("unsound.proof"), "--depth", "1", "--max-steps", "300"]);
    assert_eq!(code(&o), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gen2cm_round_trip() {
    let dir = std::env::temp_dir().join(format!("circ-cli-gen-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("m1.proof");
    let tags = dir.join("m1.json");
    let o = circ(&["gen2cm", &corpus_path("m1.machine"), "-o", out.to_str().unwrap(), "--tagmap", tags.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&circ(&["lint", out.to_str().unwrap()])), 0);
    let map: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&tags).unwrap()).unwrap();
    assert!(map["(q0)"].is_array() && map["init'"].is_array());
    assert_eq!(code(&circ(&["check", out.to_str().unwrap(), "--k", "12"])), 0);
    std::fs::remove_dir_all(&dir).unwrap();
}
