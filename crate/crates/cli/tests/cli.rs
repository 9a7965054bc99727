use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn resource(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "resources", name].iter().collect();
    p.display().to_string()
}

fn ea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ea")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn parse_renders_a_program_that_reparses() {
    let o = ea(&["parse", &resource("rea.ea")]);
    assert_eq!(o.status.code(), Some(0));
    let first = stdout(&o);
    assert!(first.contains("module FrontEnd"));
    let again = scratch("rendered.ea");
    fs::write(&again, &first).unwrap();
    assert_eq!(stdout(&ea(&["parse", again.to_str().unwrap()])), first);
}

#[test]
fn parse_reads_states_against_their_program() {
    let o = ea(&["parse", &resource("cea-n4.eas"), "--program", &resource("cea.ea")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("pp(3) = 0"), "{}", stdout(&o));
}

#[test]
fn syntax_errors_exit_two_with_a_position() {
    let bad = scratch("bad.ea");
    fs::write(&bad, "module M\n  if true then\n    x := 1\n").unwrap();
    let o = ea(&["parse", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.ea:4:1: "), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ea(&["check-equiv", "--N", "0"]).status.code(), Some(2));
    assert_eq!(ea(&["frobnicate"]).status.code(), Some(2));
    let o = ea(&["run", &resource("rea.ea"), "--state", &resource("rea-n4.eas"), "--env", "sometimes"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ea(&["explore", &resource("rea.ea"), "--state", &resource("rea-n4.eas"), "--congruence", "ring-R:x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let args = |seed: &str| {
        stdout(&ea(&[
            "--json",
            "run",
            &resource("rea.ea"),
            "--state",
            &resource("rea-n4.eas"),
            "--steps",
            "12",
            "--seed",
            seed,
        ]))
    };
    let a = args("7");
    assert_eq!(a, args("7"));
    let lines: Vec<serde_json::Value> = a.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 13);
    assert_eq!(lines[12]["steps"], 12);
    assert_ne!((0..8).map(|s| args(&s.to_string())).collect::<std::collections::BTreeSet<_>>().len(), 1);
}

#[test]
fn scripted_environment_drives_the_run() {
    let script = scratch("env.jsonl");
    fs::write(&script, "{\"InputDatum\": \"d1\", \"InSendBit\": 1}\n{}\n").unwrap();
    let o = ea(&[
        "--json",
        "run",
        &resource("rea.ea"),
        "--state",
        &resource("rea-n4.eas"),
        "--steps",
        "3",
        "--env",
        "script",
        script.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["agent"], "front_end");
    assert_eq!(lines[1]["agent"], "back_end");
    assert_eq!(lines[2]["deadlock"], true);
    assert!(lines[3]["final"].as_str().unwrap().contains("OutputDatum=d1"));
}

#[test]
fn explore_closes_the_ring_quotient_and_exports_the_graph() {
    let out = scratch("graph.jsonl");
    let o = ea(&[
        "--json",
        "--jobs",
        "2",
        "explore",
        &resource("rea.ea"),
        "--state",
        &resource("rea-n4.eas"),
        "--congruence",
        "ring-R:4",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(r["complete"], true);
    let lines = fs::read_to_string(&out).unwrap().lines().count() as u64;
    assert_eq!(lines, r["nodes"].as_u64().unwrap() + r["edges"].as_u64().unwrap());
}

#[test]
fn explore_reports_truncation() {
    let o = ea(&[
        "explore",
        &resource("rea.ea"),
        "--state",
        &resource("rea-n4.eas"),
        "--max-depth",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("truncated (max-depth)"), "{}", stdout(&o));
}

#[test]
fn lemma_suite_reports_each_lemma() {
    let o = ea(&["check-invariants", "r2", "--N", "2", "--data-size", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("pass")).count() >= 3, "{text}");
    assert!(text.contains("lemmas hold"));
}

#[test]
fn equivalence_check_text() {
    let o = ea(&["check-equiv", "--N", "2", "--data-size", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("equivalent-within-bounds (closure complete)"));
}

#[test]
fn metrics_for_both_machines() {
    let o = ea(&["--json", "casestudy", "metrics", "--N", "3", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let rs: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rs[0]["shared_count"], 5);
    assert_eq!(rs[1]["shared_count"], 6);
}
