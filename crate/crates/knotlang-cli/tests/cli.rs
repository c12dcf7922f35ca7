//! Exercises the installed binary end to end: exit codes, output formats,
//! and agreement with the per-mode golden files for every bundled program.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn knotlang(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knotlang"))
        .args(args)
        .env_remove("KNOTLANG_FUEL")
        .output()
        .expect("binary runs")
}

fn knot_path(name: &str) -> String {
    corpus_dir().join(name).to_str().unwrap().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn check_exit_codes_follow_the_golden_verdicts() {
    for name in [
        "knot",
        "knot_nobackpatch",
        "knot_eta",
        "knot_let",
        "knot_pair",
        "id",
        "five",
    ] {
        for mode in ["unrestricted", "full-ground", "sorted"] {
            let golden_path = corpus_dir().join(format!("{name}.{mode}.expected"));
            let golden = std::fs::read_to_string(&golden_path).unwrap();
            let out = knotlang(&[
                "check",
                &knot_path(&format!("{name}.src")),
                "--mode",
                mode,
            ]);
            if golden.starts_with("OK ") {
                assert_eq!(code(&out), 0, "{name} {mode}: {}", stderr(&out));
                let ty = golden.trim_end().trim_start_matches("OK ");
                assert!(
                    stdout(&out).starts_with(ty),
                    "{name} {mode}: printed {:?}, golden type {ty:?}",
                    stdout(&out)
                );
            } else {
                assert_eq!(code(&out), 1, "{name} {mode}");
                assert!(
                    stderr(&out).trim_end().ends_with(golden.trim_end()),
                    "{name} {mode}: stderr {:?} vs golden {:?}",
                    stderr(&out),
                    golden
                );
            }
        }
    }
}

#[test]
fn check_prints_the_level_in_sorted_mode() {
    let out = knotlang(&["check", &knot_path("id.src"), "--mode", "sorted"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim_end(), "Nat ->[0] Nat :: Type 0");
    // default mode is sorted
    let out = knotlang(&["check", &knot_path("id.src")]);
    assert_eq!(stdout(&out).trim_end(), "Nat ->[0] Nat :: Type 0");
}

#[test]
fn empty_files_are_parse_errors() {
    let dir = std::env::temp_dir();
    let path = dir.join("knotlang_cli_empty.src");
    std::fs::write(&path, "").unwrap();
    let out = knotlang(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("parse error"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_five_and_help_exits_zero() {
    let out = knotlang(&["frobnicate"]);
    assert_eq!(code(&out), 5);
    let out = knotlang(&["check", &knot_path("id.src"), "--mode", "nonsense"]);
    assert_eq!(code(&out), 5);
    let out = knotlang(&["--help"]);
    assert_eq!(code(&out), 0);
    let out = knotlang(&["demo", "--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn run_reports_divergence_with_exit_three() {
    let out = knotlang(&[
        "run",
        &knot_path("knot.src"),
        "--mode",
        "unrestricted",
        "--fuel",
        "10000",
    ]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("FUEL EXHAUSTED"), "{}", stdout(&out));
}

#[test]
fn run_computes_results_and_steps() {
    let out = knotlang(&[
        "run",
        &knot_path("knot_nobackpatch.src"),
        "--mode",
        "unrestricted",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "0\nsteps: 7\n");
    let out = knotlang(&["run", &knot_path("five.src")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "5\nsteps: 0\n");
}

#[test]
fn run_honors_the_fuel_environment_variable() {
    let out = Command::new(env!("CARGO_BIN_EXE_knotlang"))
        .args(["run", &knot_path("knot.src"), "--mode", "unrestricted"])
        .env("KNOTLANG_FUEL", "50")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("after 50 steps"), "{}", stdout(&out));
}

#[test]
fn run_target_agrees_with_source() {
    let out = knotlang(&[
        "run",
        &knot_path("knot_nobackpatch.src"),
        "--mode",
        "unrestricted",
        "--target",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("0\n"), "{}", stdout(&out));
}

#[test]
fn run_traces_are_tab_separated_step_records() {
    let out = knotlang(&[
        "run",
        &knot_path("knot_nobackpatch.src"),
        "--mode",
        "unrestricted",
        "--trace",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4); // 2 trace lines + value + steps
    assert!(lines[0].starts_with("1\t"), "{}", lines[0]);
    assert_eq!(lines[0].split('\t').count(), 4);
}

#[test]
fn compile_emits_a_target_program_that_parses() {
    let out = knotlang(&["compile", &knot_path("id.src"), "--mode", "sorted"]);
    assert_eq!(code(&out), 0);
    let printed = stdout(&out);
    // the identity's environment is empty, so its existential sits at Type 0
    assert!(printed.contains("exists a : Type 0"), "{printed}");
    assert!(knotlang::syntax::parse_target(&printed).is_ok(), "{printed}");
}

#[test]
fn compile_writes_the_out_file_and_rejects_per_mode() {
    let path = std::env::temp_dir().join("knotlang_cli_knot.tgt");
    let _ = std::fs::remove_file(&path);
    let out = knotlang(&[
        "compile",
        &knot_path("knot.src"),
        "--mode",
        "unrestricted",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    // one pack per lambda (the knot has two) and the backpatch survives;
    // "unpack <" also contains "pack <", so subtract the unpacks
    let packs = text.matches("pack <").count() - text.matches("unpack <").count();
    assert_eq!(packs, 2, "{text}");
    assert_eq!(text.matches(":=").count(), 1, "{text}");

    let out = knotlang(&["compile", &knot_path("knot.src"), "--mode", "sorted"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn demo_is_self_verifying() {
    let out = knotlang(&["demo"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("demo: all verdicts as expected"));
    assert!(!text.contains("UNEXPECTED"));
    // the narrative hits all three verdicts and both derivation trees
    assert!(text.contains("NonFullGroundCapture"));
    assert!(text.contains("SortMismatch"));
    assert!(text.contains("exists a : Type 0"));
    assert!(text.contains("exists a : Type 1"));
}
