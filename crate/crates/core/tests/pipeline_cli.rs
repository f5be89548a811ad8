use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mna_core::pipeline::{PipelineConfig, Report, RunLog};

const SMALL: &str = r#"
seed = 3
crop_size = 32
k = 3
bootstrap_resamples = 100

[phantom]
n_patients = 8
n_positive = 3
dims = [24, 64, 64]
spacing = [2.0, 1.0, 1.0]
radius_mm = [8.0, 12.0]
"#;

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    (dir, cfg)
}

fn mna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mna")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = mna(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_run_writes_every_stage() {
    let (dir, cfg) = setup();
    let work = dir.path().join("work");
    ok(&["--config", s(&cfg), "--out", s(&work), "run"]);

    let text = fs::read_to_string(&cfg).unwrap();
    let hash = PipelineConfig::from_toml(&text).unwrap().hash();
    for stage in ["phantom", "preprocess", "extract", "select", "train-eval", "export-channels", "report"] {
        let log: RunLog = serde_json::from_slice(&fs::read(work.join(stage).join("run_log.json")).unwrap()).unwrap();
        assert_eq!(log.config_hash, hash, "{stage}");
        assert_eq!(log.master_seed, 3);
        assert!(!work.join(format!(".{stage}.partial")).exists());
    }

    let mut rdr = csv::Reader::from_path(work.join("extract/features.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(header.len(), 3 + 107);
    assert_eq!(&header[0], "patient_id");
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() >= 8);
    for r in &rows {
        assert!(r.iter().skip(3).all(|v| v.parse::<f64>().unwrap().is_finite()));
    }

    let channels = work.join("export-channels/replicate");
    let mut raws = 0;
    for e in fs::read_dir(&channels).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "raw") {
            let b = fs::read(&p).unwrap();
            assert_eq!(b.len(), 3 * 32 * 32);
            let (c0, rest) = b.split_at(32 * 32);
            assert_eq!(&rest[..32 * 32], c0);
            assert_eq!(&rest[32 * 32..], c0);
            raws += 1;
        }
    }
    assert_eq!(raws, rows.len());

    let report: Report = serde_json::from_slice(&fs::read(work.join("report/report.json")).unwrap()).unwrap();
    assert_eq!(report.accuracy_table.len(), 5);
    assert_eq!(report.patients, 8);
    assert_eq!(report.positive_patients, 3);
    let txt = fs::read_to_string(work.join("report/report.txt")).unwrap();
    assert!(txt.contains("Per-model slice accuracy"));
    assert!(txt.contains("ACC+FS"));
}

#[test]
fn staged_invocation_matches_single_run() {
    let (dir, cfg) = setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["--config", s(&cfg), "--out", s(&a), "run"]);
    for stage in ["phantom", "preprocess", "extract", "select", "train-eval", "report"] {
        ok(&["--config", s(&cfg), "--out", s(&b), stage]);
    }
    for f in ["report/report.json", "report/report.txt", "train-eval/outcome.json", "select/folds.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn per_stack_extraction_has_one_row_per_patient() {
    let (dir, cfg) = setup();
    let work = dir.path().join("w");
    for stage in ["phantom", "preprocess"] {
        ok(&["--config", s(&cfg), "--out", s(&work), stage]);
    }
    ok(&["--config", s(&cfg), "--out", s(&work), "extract", "--mode", "per-stack"]);
    let mut rdr = csv::Reader::from_path(work.join("extract/features.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[1].is_empty()));
}

#[test]
fn seed_override_changes_the_cohort() {
    let (dir, cfg) = setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["--config", s(&cfg), "--out", s(&a), "phantom"]);
    ok(&["--config", s(&cfg), "--out", s(&b), "--seed", "4", "phantom"]);
    assert_ne!(
        fs::read(a.join("phantom/P000.raw")).unwrap(),
        fs::read(b.join("phantom/P000.raw")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let (dir, cfg) = setup();
    let empty = dir.path().join("empty");
    let code = |args: &[&str]| mna(args).status.code().unwrap();

    assert_eq!(code(&["--config", s(&cfg), "--out", s(&empty), "report"]), 1);
    assert_eq!(code(&["--config", s(&cfg), "--out", s(&empty), "train-eval"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["train-eval", "--models", "perceptron"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["default-config"]), 0);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nno_such_key = 2\n").unwrap();
    assert_eq!(code(&["--config", s(&bad), "phantom"]), 1);
    fs::write(&bad, "[phantom]\nn_patients = 3\nn_positive = 5\n").unwrap();
    assert_eq!(code(&["--config", s(&bad), "--out", s(&empty), "phantom"]), 1);
    assert_eq!(code(&["--config", s(&dir.path().join("missing.toml")), "phantom"]), 1);
}

#[test]
fn default_config_round_trips() {
    let out = mna(&["default-config"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(PipelineConfig::from_toml(&text).unwrap(), PipelineConfig::default());
}
