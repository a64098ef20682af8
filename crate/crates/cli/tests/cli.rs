use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn paramck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paramck")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn inputs(leader: &str, contributor: &str, property: &str) -> Vec<String> {
    let p = |n: &str| fixture(n).to_string_lossy().into_owned();
    vec!["--leader".into(), p(leader), "--contributor".into(), p(contributor), "--property".into(), p(property)]
}

fn run(cmd: &str, extra: &[&str], files: &[String]) -> Output {
    let mut args: Vec<&str> = vec![cmd];
    args.extend(extra);
    args.extend(files.iter().map(String::as_str));
    paramck(&args)
}

#[test]
fn fig1_is_nonempty_and_its_witness_replays() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("fig1.witness");
    let files = inputs("fig1-leader.fsm", "fig1-contributor.fsm", "fig1-property.fsm");
    let out = run("check", &["--witness", w.to_str().unwrap()], &files);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("NONEMPTY"), "{}", stdout(&out));
    let out = run("replay", &["--witness", w.to_str().unwrap()], &files);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn ex2_is_empty() {
    let files = inputs("ex2-leader.fsm", "ex2-contributor.fsm", "universal-1.fsm");
    let out = run("check", &[], &files);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("EMPTY"));
}

#[test]
fn json_report() {
    let files = inputs("fig1-leader.fsm", "fig1-contributor.fsm", "fig1-property.fsm");
    let out = run("check", &["--json", "--mode", "explicit"], &files);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "NONEMPTY");
    assert_eq!(v["mode"], "explicit");
    assert!(v["witness"].as_str().unwrap().starts_with("witness v1"));
    assert!(v["statistics"]["configs"].as_u64().unwrap() > 0);
}

#[test]
fn pdm_pdm_witness_replays() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("pdm.witness");
    let files = inputs("pushing-reader.pdm", "pushing-writer.pdm", "universal-1.fsm");
    let out = run("check", &["--witness", w.to_str().unwrap()], &files);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("NONEMPTY") && text.contains("mode: pdm-pdm"), "{text}");
    assert!(fs::read_to_string(&w).unwrap().contains("restrict = 5"));
    assert_eq!(run("replay", &["--witness", w.to_str().unwrap()], &files).status.code(), Some(0));
}

#[test]
fn restriction_budget_exits_3() {
    let files = inputs("pushing-reader.pdm", "pushing-writer.pdm", "universal-1.fsm");
    let out = Command::new(env!("CARGO_BIN_EXE_paramck"))
        .env("PARAMCK_BUDGET", "3")
        .arg("check")
        .args(&files)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("k = 5"), "{}", stdout(&out));
}

#[test]
fn witness_against_other_contributor_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("fig1.witness");
    let files = inputs("fig1-leader.fsm", "fig1-contributor.fsm", "fig1-property.fsm");
    assert_eq!(run("check", &["--witness", w.to_str().unwrap()], &files).status.code(), Some(0));
    let other = dir.path().join("other.fsm");
    let text = fs::read_to_string(fixture("fig1-contributor.fsm")).unwrap().replace("trans = c0 w(1) c1", "trans = c0 w(2) c1");
    fs::write(&other, text).unwrap();
    let mut files = files;
    files[3] = other.to_string_lossy().into_owned();
    let out = run("replay", &["--witness", w.to_str().unwrap()], &files);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("invalid: step"));
}

#[test]
fn truncated_witness_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("cut.witness");
    fs::write(&w, "witness v1\nk = 2\nstem:\n1 C0\n").unwrap();
    let files = inputs("fig1-leader.fsm", "fig1-contributor.fsm", "fig1-property.fsm");
    assert_eq!(run("replay", &["--witness", w.to_str().unwrap()], &files).status.code(), Some(2));
}

#[test]
fn bad_machine_file_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fsm");
    fs::write(&bad, "kind = fsm\nvalues = 1\nstates = a\ninitial = a\ninitial = a\n").unwrap();
    let mut files = inputs("fig1-leader.fsm", "fig1-contributor.fsm", "fig1-property.fsm");
    files[1] = bad.to_string_lossy().into_owned();
    let out = run("check", &[], &files);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5, column 1"));
}
