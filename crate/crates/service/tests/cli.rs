use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use interview_core::metrics::{write_cohort, Label, LabeledPair};
use interview_core::testing::{seed_defect, SEEDABLE};
use interview_core::tree::BUNDLED_TREE;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_interview"));
    c.env_remove("INTERVIEW_BACKEND");
    c
}

fn personas() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/personas")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("mini.json");
    std::fs::write(&good, BUNDLED_TREE).unwrap();
    let o = bin().args(["tree", "validate"]).arg(&good).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok:"));

    for kind in SEEDABLE {
        let bad = dir.path().join(format!("{kind:?}.json"));
        std::fs::write(&bad, seed_defect(kind).unwrap()).unwrap();
        let o = bin().args(["tree", "validate"]).arg(&bad).output().unwrap();
        assert_eq!(o.status.code(), Some(1), "{kind:?}");
        assert_eq!(stdout(&o).lines().count(), 1, "{kind:?}: {}", stdout(&o));
    }

    let o = bin().args(["tree", "validate", "/nonexistent/tree.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: VALIDATION"));
}

#[test]
fn metrics_on_hand_fixture() {
    let mut pairs = Vec::new();
    for (n, r, p) in [
        (40, Label::Case, Label::Case),
        (10, Label::Case, Label::Control),
        (5, Label::Control, Label::Case),
        (45, Label::Control, Label::Control),
    ] {
        for _ in 0..n {
            pairs.push(LabeledPair {
                id: format!("s{}", pairs.len()),
                reference: r,
                predicted: p,
            });
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cohort.jsonl");
    std::fs::write(&file, write_cohort(&pairs)).unwrap();
    let o = bin().arg("metrics").arg(&file).output().unwrap();
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("kappa 0.700"), "{out}");
    assert!(out.contains("accuracy 0.850"), "{out}");
    assert!(out.contains("macro_f1 0.850"), "{out}");
}

#[test]
fn batch_on_canonical_personas() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["evaluate", "batch", "mini"])
        .arg(personas())
        .args(["--mock", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("kappa 1.000"));
    for f in ["cohort.jsonl", "cohort-depression.jsonl", "cohort-suicide.jsonl", "metrics.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let m = bin()
        .arg("metrics")
        .arg(dir.path().join("cohort.jsonl"))
        .output()
        .unwrap();
    assert!(stdout(&m).contains("kappa 1.000"));
}

#[test]
fn batch_with_mislabeled_node_loses_a_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["evaluate", "batch", "mini"])
        .arg(personas())
        .args(["--mock", "--mislabel", "ra4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let out = stdout(&o);
    assert!(out.contains("fn 1"), "{out}");
    assert!(out.contains("fp 0"), "{out}");
}

#[test]
fn rules_export() {
    let o = bin().args(["rules", "export", "depression"]).output().unwrap();
    assert!(o.status.success());
    let rule: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rule["arity"], 10);
    let o = bin().args(["rules", "export", "phobia"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn interview_needs_a_participant() {
    let o = bin().args(["interview", "run", "mini", "--mock"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn interactive_session_reads_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = bin()
        .args(["interview", "run", "mini", "--interactive", "--mock"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        for _ in 0..200 {
            writeln!(stdin, "No, that does not apply to me.").unwrap();
        }
    }
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("PROBE[a1a]"));
    assert!(out.contains("criteria not met"));
}
