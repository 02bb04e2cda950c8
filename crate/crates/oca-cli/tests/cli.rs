//! End-to-end CLI checks: exit codes, round-trips, verification reports.

use std::path::PathBuf;
use std::process::{Command, Output};

fn oca_bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_oca"));
    assert!(p.exists(), "binary not built at {}", p.display());
    p = p.canonicalize().unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(oca_bin())
        .args(args)
        .output()
        .expect("run oca binary")
}

fn testdata(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../oca/testdata")
        .join(name);
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_down_reports_ok_and_exits_zero() {
    let out = run(&["verify", "down", &testdata("anbn.oca"), "--max-len", "6"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("OK 127/127 agree"), "stdout: {stdout}");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_modes_all_pass_on_fixture() {
    for mode in ["exact", "up", "down"] {
        let out = run(&["verify", mode, &testdata("anbn.oca"), "--max-len", "5"]);
        assert_eq!(out.status.code(), Some(0), "mode {mode}");
    }
    let out = run(&["verify", "parikh", &testdata("anbn.oca"), "--norm", "6"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.oca");
    std::fs::write(&bad, "kind simple\nalphabet a\nstate p\ninitial p\nfinal p\ntrans p q zz p\n")
        .unwrap();
    let out = run(&["stats", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["stats", "/nonexistent/file.oca"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn upward_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let nfa_path = dir.path().join("up.nfa");
    let out = run(&[
        "upward",
        &testdata("anbn.oca"),
        "-o",
        nfa_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    // The emitted file parses and prints back identically.
    let text = std::fs::read_to_string(&nfa_path).unwrap();
    let parsed = oca::format::parse_oca(&text).unwrap();
    assert_eq!(oca::format::print_oca(&parsed), text);
    let q = 2u64;
    assert_eq!(parsed.state_count() as u64, q * (q * q + 2));
}

#[test]
fn hard_automaton_emits_extended_format() {
    let out = run(&["hard-automaton", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kind extended"));
    assert!(stdout.contains("reported size 3"));
    let parsed = oca::format::parse_oca(&stdout).unwrap();
    assert_eq!(parsed.state_count(), 2);
    assert_eq!(parsed.transitions().len(), 5);
}

#[test]
fn apply_subst_replaces_letters() {
    let dir = tempfile::tempdir().unwrap();
    let host = dir.path().join("host.nfa");
    std::fs::write(
        &host,
        "kind nfa\nalphabet a b c\nstate p\nstate q\ninitial p\nfinal q\ntrans p a zero q\n",
    )
    .unwrap();
    let image = dir.path().join("image.nfa");
    std::fs::write(
        &image,
        "kind nfa\nalphabet a b c\nstate x\nstate y\nstate z\ninitial x\nfinal z\ntrans x b zero y\ntrans y c zero z\n",
    )
    .unwrap();
    let sub = dir.path().join("sigma.sub");
    std::fs::write(&sub, "sub a -> image.nfa\n").unwrap();
    let out = run(&[
        "apply-subst",
        host.to_str().unwrap(),
        sub.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed = oca::format::parse_oca(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let al = parsed.alphabet().clone();
    let w: Vec<_> = ["b", "c"]
        .iter()
        .map(|t| al.get(t).unwrap().clone())
        .collect();
    assert!(oca::oracle::nfa_accepts(&parsed, &w).unwrap());
    let a_only = vec![al.get("a").unwrap().clone()];
    assert!(!oca::oracle::nfa_accepts(&parsed, &a_only).unwrap());
}

#[test]
fn parikh_fixed_deepen_matches_oracle() {
    let out = run(&[
        "parikh-fixed",
        &testdata("anbn.oca"),
        "--deepen",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed = oca::format::parse_oca(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let got = oca::oracle::nfa_parikh_up_to(&parsed, 6).unwrap();
    let a = oca::format::parse_oca(&std::fs::read_to_string(testdata("anbn.oca")).unwrap()).unwrap();
    let expect = oca::oracle::enumerate_parikh(&a, 6).unwrap();
    assert_eq!(got, expect);
}

#[test]
fn stats_reports_fields() {
    let out = run(&["stats", &testdata("exactly_ab.oca")]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kind simple"));
    assert!(stdout.contains("states 3"));
}

#[test]
fn flatten_and_reduce_emit_sigma_files() {
    let dir = tempfile::tempdir().unwrap();
    let sigma_dir = dir.path().join("sigma");
    let out = run(&[
        "flatten-rba",
        &testdata("anbn.oca"),
        "--reversals",
        "1",
        "-o",
        dir.path().join("flat.oca").to_str().unwrap(),
        "--sigma-dir",
        sigma_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(sigma_dir.join("sigma.sub").exists());
    let flat = oca::format::parse_oca(
        &std::fs::read_to_string(dir.path().join("flat.oca")).unwrap(),
    )
    .unwrap();
    assert_eq!(flat.kind(), oca::core::Kind::Extended);
}
