use circ::gadget::*;
use circ::validity::{check_k_valid, find_min_k, prepare, Outcome};

fn machine(name: &str) -> Machine {
    let src = std::fs::read_to_string(format!("{}/corpus/{name}.machine", env!("CARGO_MANIFEST_DIR"))).unwrap();
    parse_machine(&src).unwrap()
}

fn reached(exit: &str, stack: &str) -> ActionResult {
    ActionResult::Reached { exit: exit.into(), stack: stack.into() }
}

fn out(on: &str, stack: &str) -> ActionResult {
    ActionResult::Returned { on: on.into(), stack: stack.into() }
}

// (gadget, entry, result) with `None` exit meaning the thread leaves the
// gadget on its own root.
const TABLE: &[(Gadget, &str, Option<&str>, &str)] = &[
    (Gadget::Ri, "l", Some("next"), "rl"),
    (Gadget::Li, "r", Some("next"), "lr"),
    (Gadget::R, "rl", Some("next"), "l"),
    (Gadget::L, "lr", Some("next"), "r"),
    (Gadget::Inc1, "rr", Some("next"), "rlr"),
    (Gadget::Inc2, "rlrr", Some("next"), "rlrrl"),
    (Gadget::Dec1, "rlr", Some("next"), "rr"),
    (Gadget::Dec2, "rllrrlr", Some("next"), "rllrrr"),
    (Gadget::Test1, "rrrr", Some("zero"), "rrrr"),
    (Gadget::Test1, "rlrr", Some("pos"), "rlrr"),
    (Gadget::Counter, "rllrl", Some("next"), "l"),
    (Gadget::Shift, "lllrrl", None, "llrrll"),
    (Gadget::CopyL, "lr", Some("next"), "llr"),
    (Gadget::Move, "llrrl", None, "llrrlll"),
    (Gadget::Prep, "rllrrlrr", Some("next"), "rllrrlrrlrr"),
    (Gadget::Result, "rllrrlrr", Some("next"), "llrrlllrrlrr"),
    (Gadget::Test2, "rllrrlrr", Some("pos"), "rllrrlrr"),
    (Gadget::Test2, "rllrrrrr", Some("zero"), "rllrrrrr"),
    (Gadget::Final, "r", None, "r"),
];

#[test]
fn main_side_stack_actions() {
    assert_eq!(stack_action(Gadget::Init, Side::Main, ""), reached("next", "rrrr"));
    for &(g, entry, exit, stack) in TABLE {
        let want = match exit {
            Some(e) => reached(e, stack),
            None => out("g", stack),
        };
        assert_eq!(stack_action(g, Side::Main, entry), want, "{g:?} on {entry}");
    }
}

#[test]
fn dual_side_stack_actions() {
    // Dual gadgets run under one extra r that the loop keeps on top.
    assert_eq!(stack_action(Gadget::Init, Side::Dual, "r"), reached("next", "rrr"));
    assert_eq!(stack_action(Gadget::Ri, Side::Dual, "rl"), reached("next", "rrl"));
    assert_eq!(stack_action(Gadget::Li, Side::Dual, "r"), reached("next", "rl"));
    for &(g, entry, exit, stack) in TABLE {
        if matches!(g, Gadget::Ri | Gadget::Li) {
            continue;
        }
        let want = match exit {
            Some(e) => reached(e, stack),
            None => out("f", stack),
        };
        assert_eq!(stack_action(g, Side::Dual, entry), want, "{g:?}' on {entry}");
    }
}

#[test]
fn garbage_on_return() {
    let cases: &[(Gadget, &str, &str)] = &[
        (Gadget::Init, "next", ""),
        (Gadget::Inc1, "next", ""),
        (Gadget::Inc2, "next", ""),
        (Gadget::Dec1, "next", ""),
        (Gadget::Dec2, "next", ""),
        (Gadget::Test1, "zero", "rr"),
        (Gadget::Test1, "pos", "rl"),
        (Gadget::Test2, "zero", "rrrr"),
        (Gadget::Test2, "pos", "rrrl"),
        (Gadget::Counter, "next", "rr"),
        (Gadget::CopyL, "next", ""),
        (Gadget::Prep, "next", ""),
        (Gadget::Result, "next", "r"),
        (Gadget::R, "next", "r"),
        (Gadget::Ri, "next", ""),
    ];
    for side in [Side::Main, Side::Dual] {
        let on = if side == Side::Main { "g" } else { "f" };
        for &(g, exit, garbage) in cases {
            assert_eq!(stack_return(g, side, exit, ""), out(on, garbage), "{g:?} {side:?} {exit}");
        }
    }
}

#[test]
fn m1_simulation_exits_with_r4() {
    let gp = compile(&machine("m1"));
    match simulate_main_thread(&gp, DEFAULT_FUEL) {
        Simulation::Exits(t) => {
            assert!(t.main_exit.as_deref().unwrap().ends_with("rrrr"), "{t:?}");
            assert_eq!(t.dual_exit.as_deref(), Some("rr"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn simulation_exits_iff_run_halts() {
    for name in ["m1", "m2", "m3"] {
        let m = machine(name);
        let halts = matches!(run_machine(&m, DEFAULT_FUEL), RunResult::Halts { zero: true, .. });
        let exits = matches!(simulate_main_thread(&compile(&m), DEFAULT_FUEL), Simulation::Exits(_));
        assert_eq!(halts, exits, "{name}");
    }
}

#[test]
fn compiled_validity_follows_the_run() {
    let gp = compile(&machine("m1"));
    let an = prepare(&gp.proof).unwrap();
    let mk = find_min_k(&gp.proof, &an, 16).unwrap();
    let k = mk.found.expect("m1 compiles to a proof");
    assert_eq!(check_k_valid(&gp.proof, &an, k).unwrap().outcome, Outcome::Valid);
    assert_eq!(check_k_valid(&gp.proof, &an, k - 1).unwrap().outcome, Outcome::Invalid);
    for name in ["m2", "m3"] {
        let gp = compile(&machine(name));
        let an = prepare(&gp.proof).unwrap();
        for k in 0..=6 {
            assert_eq!(check_k_valid(&gp.proof, &an, k).unwrap().outcome, Outcome::Invalid, "{name} k={k}");
        }
    }
}

#[test]
fn tags_name_every_state_and_gadget() {
    let gp = compile(&machine("m1"));
    let names = gp.tag_names();
    for t in ["(q0)", "(q1)", "(q2)", "(q0')", "init", "init'", "Inc1", "Dec1", "Test1", "Test1'", "loop"] {
        assert!(names.contains_key(t), "missing {t}: {names:?}");
    }
}
