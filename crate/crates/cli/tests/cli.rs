use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use turinglab::io::to_json_string;
use turinglab::simulator::RunManifest;
use turinglab::stability::{CriticalParams, StabilityReport, TransitionClass, Verdict};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn turinglab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_turinglab"))
        .args(args)
        .current_dir(dir)
        .env_remove("TURINGLAB_OUT")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_reports_case_b_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("schnak_b.toml");
    let out = turinglab(
        dir.path(),
        &[
            "analyze",
            "--model-file",
            path_str(&model),
            "--du",
            "1",
            "--dv",
            "1",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: StabilityReport =
        turinglab::io::read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.verdict, Verdict::TuringStable);
    assert!((report.d + 2.5833).abs() < 5e-4);
    assert!((report.l + 0.5816).abs() < 5e-4);
}

#[test]
fn critical_reports_double_class() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("schnak_accept.toml");
    let target = dir.path().join("nested/crit.json");
    let out = turinglab(
        dir.path(),
        &[
            "critical",
            "--model-file",
            path_str(&model),
            "--du",
            "1",
            "--out",
            path_str(&target),
        ],
    );
    assert!(out.status.success());
    let c: CriticalParams = turinglab::io::read_json(&target).unwrap();
    assert!((c.dv_star - 23.48).abs() < 0.01);
    assert_eq!(c.transition_class, TransitionClass::Double);
    let text = std::fs::read_to_string(&target).unwrap();
    assert_eq!(to_json_string(&c).unwrap(), text);
}

#[test]
fn hprofile_intercept_is_det() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("schnak_accept.toml");
    let out = turinglab(
        dir.path(),
        &[
            "--quiet",
            "hprofile",
            "--model-file",
            path_str(&model),
            "--du",
            "1",
            "--dv",
            "30",
        ],
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("hprofile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,h"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(row, vec![0.0, 2.25]);
}

#[test]
fn reduce_writes_coefficients_and_psi_table() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("schnak_accept.toml");
    let out = turinglab(
        dir.path(),
        &[
            "reduce",
            "--model-file",
            path_str(&model),
            "--du",
            "1",
            "--interval",
            "5.583686757377047",
            "--at-critical",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        turinglab::io::read_json(&dir.path().join("reduced.json")).unwrap();
    assert_eq!(json["reduced"]["kind"], "scalar-cubic");
    assert_eq!(json["classification"]["transition_type"], "continuous");
    assert_eq!(json["bifurcated"]["branches"].as_array().unwrap().len(), 2);
    let psi = std::fs::read_to_string(dir.path().join("reduced_psi.csv")).unwrap();
    assert!(psi.starts_with("mode_indices,psi1,psi2\n"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_turinglab"))
        .args(["eigen", "--rectangle", "10,5", "--count", "6"])
        .env("TURINGLAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    assert!(csv.contains("0,1,3.9478417604357430e-1,2"));
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = turinglab(
        dir.path(),
        &[
            "analyze",
            "--model-file",
            "missing.toml",
            "--du",
            "1",
            "--dv",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    let out = turinglab(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let model = data("schnak_b.toml");
    let out = turinglab(
        dir.path(),
        &[
            "analyze",
            "--model-file",
            path_str(&model),
            "--du",
            "-1",
            "--dv",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3_with_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blow.json");
    std::fs::write(
        &cfg,
        r#"{
  "model": { "type": "custom", "steady_state": [0.0, 0.0], "jacobian": [5.0, 0.0, 0.0, -1.0] },
  "domain": { "kind": "interval", "s": 1.0, "bc": "neumann" },
  "du": 1.0, "dv": 1.0, "nx": 9, "t_end": 10.0,
  "initial": { "kind": "noise", "epsilon": 1.0 }
}"#,
    )
    .unwrap();
    let out = turinglab(
        dir.path(),
        &["simulate", "--config", "blow.json", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(3));
    let m: RunManifest = turinglab::io::read_json(&dir.path().join("run/run.json")).unwrap();
    assert!(m.partial);
    assert!(dir
        .path()
        .join("run")
        .join(m.snapshots.last().unwrap())
        .exists());
}

#[test]
fn simulate_is_idempotent_and_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data("sim.json");
    for name in ["a", "b"] {
        let out = turinglab(
            dir.path(),
            &[
                "--seed",
                "11",
                "simulate",
                "--config",
                path_str(&cfg),
                "--out",
                name,
            ],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for file in [
        "run.json",
        "diagnostics.csv",
        "snap_0.csv",
        "snap_1.csv",
        "snap_2.csv",
    ] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    let text = std::fs::read_to_string(dir.path().join("a/run.json")).unwrap();
    let m: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(m.seed, 11);
    assert_eq!(to_json_string(&m).unwrap(), text);
    assert_eq!(m.config_hash, m.config.hash());
}

#[test]
fn sweep_flips_once_along_dv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = data("sweep.toml");
    let out = turinglab(
        dir.path(),
        &["--threads", "2", "sweep", "--spec", path_str(&spec)],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let verdicts: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(verdicts.len(), 8);
    assert_eq!(verdicts.windows(2).filter(|w| w[0] != w[1]).count(), 1);
}

#[test]
fn audit_states_both_sets_of_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let out = turinglab(dir.path(), &["audit", "--a", "0.1", "--b", "0.5"]);
    assert!(out.status.success());
    let json: serde_json::Value = turinglab::io::read_json(&dir.path().join("audit.json")).unwrap();
    assert_eq!(json["hypothesis_holds"], false);
    assert!((json["published"]["dv0"].as_f64().unwrap() - 5.1648).abs() < 1e-9);
    assert!((json["bisection_dv0"].as_f64().unwrap() - 4.2514).abs() < 1e-3);
}
