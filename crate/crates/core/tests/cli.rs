use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cip::compile::{Corruption, Planted, Side, SyntheticSpec};
use cip::conllu::read_conllu;
use cip::constraints::read_constraints;

fn cip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cip")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cip(args);
    assert!(
        out.status.success(),
        "cip {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Workspace { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Synthetic gold CoNLL-U, scores and planted constraints.
    fn synth(&self) {
        let spec = SyntheticSpec {
            sentences: 60,
            planted: vec![Planted::Unary {
                id: "C1".into(),
                pos: "NOUN".into(),
                ratio: 0.9,
                rate: 0.35,
            }],
            corruption: Some(Corruption {
                pos: "NOUN".into(),
                side: Side::Right,
                bias: 3.0,
            }),
            ..SyntheticSpec::default()
        };
        fs::write(self.path("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
        let out = ok(&[
            "synth",
            "--spec",
            p(&self.path("spec.json")),
            "--conllu",
            p(&self.path("gold.conllu")),
            "--scores",
            p(&self.path("scores.jsonl")),
            "--constraints",
            p(&self.path("c.json")),
        ]);
        assert!(out.contains("true_ratios"));
    }
}

fn uas_of(stdout: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    v["uas"].as_f64().unwrap()
}

#[test]
fn baseline_decode_and_evaluate() {
    let ws = Workspace::new();
    ws.synth();
    ok(&[
        "decode",
        "--conllu",
        p(&ws.path("gold.conllu")),
        "--scores",
        p(&ws.path("scores.jsonl")),
        "--out",
        p(&ws.path("out.conllu")),
    ]);
    let pred = read_conllu(fs::File::open(ws.path("out.conllu")).map(std::io::BufReader::new).unwrap()).unwrap();
    let gold = read_conllu(fs::File::open(ws.path("gold.conllu")).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(pred.len(), gold.len());
    let trees: Vec<_> = pred.iter().map(|s| s.gold_tree().unwrap()).collect();
    let expected = cip::eval::uas(&trees, &gold).unwrap();

    let stdout = ok(&["evaluate", "--pred", p(&ws.path("out.conllu")), "--gold", p(&ws.path("gold.conllu"))]);
    assert_eq!(uas_of(&stdout), expected);
}

#[test]
fn lr_and_pr_write_traces_and_reports() {
    let ws = Workspace::new();
    ws.synth();
    let mut baseline_uas = None;
    for method in ["baseline", "lr", "pr"] {
        let out = ws.path(&format!("{method}.conllu"));
        let trace = ws.path(&format!("{method}.csv"));
        let report = ws.path(&format!("{method}.json"));
        ok(&[
            "decode",
            "--method",
            method,
            "--conllu",
            p(&ws.path("gold.conllu")),
            "--scores",
            p(&ws.path("scores.jsonl")),
            "--constraints",
            p(&ws.path("c.json")),
            "--projective",
            "--out",
            p(&out),
            "--trace",
            p(&trace),
            "--report",
            p(&report),
            "--seed",
            "4",
        ]);
        let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        let row = &rep["constraints"][0];
        assert_eq!(row["id"], "C1");
        for key in ["r", "theta", "ratio_baseline", "ratio_final", "satisfied"] {
            assert!(!row[key].is_null(), "{method}: {key}");
        }
        for key in ["uas", "objective", "iterations", "converged"] {
            assert!(!rep["overall"][key].is_null(), "{method}: {key}");
        }
        let uas = rep["overall"]["uas"].as_f64().unwrap();
        match method {
            "baseline" => {
                assert!(!trace.exists());
                baseline_uas = Some(uas);
            }
            "lr" => {
                let csv = fs::read_to_string(&trace).unwrap();
                assert!(csv.starts_with("iter,constraint_id,r_target,r_measured,lambda,alpha,objective\n"));
                assert!(uas >= baseline_uas.unwrap());
            }
            _ => {
                let csv = fs::read_to_string(&trace).unwrap();
                assert!(csv.starts_with("iter,grad_norm,neg_log_Z,C1_upper,C1_lower\n"));
                assert!(uas >= baseline_uas.unwrap());
            }
        }
    }
}

#[test]
fn config_file_is_honoured() {
    let ws = Workspace::new();
    ws.synth();
    fs::write(ws.path("config.json"), r#"{"lr": {"max_iter": 1}, "single_root": true}"#).unwrap();
    ok(&[
        "decode",
        "--method",
        "lr",
        "--conllu",
        p(&ws.path("gold.conllu")),
        "--scores",
        p(&ws.path("scores.jsonl")),
        "--constraints",
        p(&ws.path("c.json")),
        "--config",
        p(&ws.path("config.json")),
        "--out",
        p(&ws.path("out.conllu")),
        "--report",
        p(&ws.path("r.json")),
    ]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(ws.path("r.json")).unwrap()).unwrap();
    assert_eq!(rep["overall"]["iterations"], 1);
    let pred = read_conllu(std::io::BufReader::new(fs::File::open(ws.path("out.conllu")).unwrap())).unwrap();
    assert!(pred.iter().all(|s| s.gold_tree().unwrap().root_children() == 1));
}

#[test]
fn estimate_and_ratio_gap() {
    let ws = Workspace::new();
    ws.synth();
    let stdout = ok(&[
        "estimate-ratios",
        "--conllu",
        p(&ws.path("gold.conllu")),
        "--constraints",
        p(&ws.path("c.json")),
        "--sample-size",
        "30",
        "--seed",
        "1",
        "--out",
        p(&ws.path("est.json")),
    ]);
    let rows: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(rows[0]["count"].as_u64().unwrap() > 0);
    let est = read_constraints(fs::File::open(ws.path("est.json")).unwrap()).unwrap();
    assert_eq!(est[0].theta(), 0.01);
    assert_eq!(est[0].r(), rows[0]["ratio"].as_f64().unwrap());

    let gap = ok(&[
        "ratio-gap",
        "--conllu",
        p(&ws.path("gold.conllu")),
        "--scores",
        p(&ws.path("scores.jsonl")),
        "--constraints",
        p(&ws.path("est.json")),
    ]);
    let v: serde_json::Value = serde_json::from_str(gap.trim()).unwrap();
    assert!(v["ratio_gap"].as_f64().unwrap() > 0.3);
}

#[test]
fn compile_constraints_command() {
    let ws = Workspace::new();
    ok(&[
        "compile-constraints",
        "--wals",
        p(&fixture("wals_subset.csv")),
        "--templates",
        p(&fixture("templates.json")),
        "--training",
        p(&fixture("training_ratios.json")),
        "--lang",
        "tur",
        "--out",
        p(&ws.path("c.json")),
    ]);
    let cs = read_constraints(fs::File::open(ws.path("c.json")).unwrap()).unwrap();
    let ids: Vec<&str> = cs.iter().map(|c| c.id()).collect();
    assert_eq!(ids, ["C1", "C2", "C3"]);
    assert_eq!(cs[1].r(), 0.875);
}

#[test]
fn failures_exit_nonzero() {
    let ws = Workspace::new();
    ws.synth();
    let missing = cip(&[
        "decode",
        "--conllu",
        p(&ws.path("nope.conllu")),
        "--scores",
        p(&ws.path("scores.jsonl")),
        "--out",
        p(&ws.path("out.conllu")),
    ]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.conllu"));

    fs::write(ws.path("bad.jsonl"), "{\"n\":2,\"scores\":[[1,2],[0,3]]}\n").unwrap();
    let malformed = cip(&[
        "decode",
        "--conllu",
        p(&ws.path("gold.conllu")),
        "--scores",
        p(&ws.path("bad.jsonl")),
        "--out",
        p(&ws.path("out.conllu")),
    ]);
    assert!(!malformed.status.success());
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("expected 3 rows, got 2"));
    assert!(!ws.path("out.conllu").exists());

    let no_constraints = cip(&[
        "decode",
        "--method",
        "lr",
        "--conllu",
        p(&ws.path("gold.conllu")),
        "--scores",
        p(&ws.path("scores.jsonl")),
        "--out",
        p(&ws.path("out.conllu")),
    ]);
    assert!(!no_constraints.status.success());
}
