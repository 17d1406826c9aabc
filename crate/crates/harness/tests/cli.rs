//! End-to-end behaviour of the harness: golden tables, reproducibility under
//! different worker counts, and the command-line interface.

use std::path::{Path, PathBuf};
use std::process::Command;

use ssotfs_harness::{load_config, run_experiment, ResultTable};

const GOLDEN: [&str; 4] = ["aoa_demo_small", "det_eval_small", "fer_small", "miss_detection_small"];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// The CSV without the build line, which legitimately varies between builds.
fn comparable(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with("# build=")).map(|l| format!("{l}\n")).collect()
}

#[test]
fn seeded_runs_match_committed_golden_tables() {
    for name in GOLDEN {
        let cfg = load_config(&golden_dir().join(format!("{name}.json")), None, None).unwrap();
        let got = run_experiment(&cfg, Some(2)).unwrap().to_csv_string().unwrap();
        let want = std::fs::read_to_string(golden_dir().join(format!("{name}.csv"))).unwrap();
        assert_eq!(comparable(&got), comparable(&want), "{name}");
    }
}

#[test]
fn worker_count_does_not_change_output() {
    for name in GOLDEN {
        let cfg = load_config(&golden_dir().join(format!("{name}.json")), None, None).unwrap();
        let outputs: Vec<String> =
            [1, 4, 8].iter().map(|&t| run_experiment(&cfg, Some(t)).unwrap().to_csv_string().unwrap()).collect();
        assert_eq!(outputs[0], outputs[1], "{name}: 1 vs 4 workers");
        assert_eq!(outputs[0], outputs[2], "{name}: 1 vs 8 workers");
    }
}

#[test]
fn proportions_lie_in_the_unit_interval() {
    for name in ["fer_small", "miss_detection_small"] {
        let cfg = load_config(&golden_dir().join(format!("{name}.json")), None, None).unwrap();
        let t = run_experiment(&cfg, None).unwrap();
        for r in &t.rows {
            assert!((0.0..=1.0).contains(&r.metric), "{name}: {r:?}");
            assert!(r.ci_half_width > 0.0 && r.ci_half_width <= 0.5, "{name}: {r:?}");
        }
    }
}

#[test]
fn det_eval_reports_three_policies_and_the_bound() {
    let text = r#"{"kind": "det-eval", "seed": 1, "m": 8, "n": 8, "n_bs": 16, "l_max": 2, "k_max": 2,
                   "path_counts": [4], "repeats": [1, 2], "trials": 20}"#;
    let cfg = ssotfs_harness::parse_config(text).unwrap();
    let t = run_experiment(&cfg, None).unwrap();
    let mut labels: Vec<&str> = t.rows.iter().map(|r| r.series.as_str()).collect();
    labels.dedup();
    assert_eq!(
        labels,
        ["P=4/precoded-distinct", "P=4/non-precoded-random", "P=4/non-precoded-distinct-delay", "P=4/bound"]
    );
    for r in t.series("P=4/bound") {
        assert_eq!(r.metric, r.x.powi(4));
    }
}

#[test]
fn aoa_demo_peaks_at_the_true_indices() {
    let text = r#"{"kind": "aoa-demo", "seed": 3, "users": 4, "paths": 2, "snr_db": 5, "n_range": [0, 2, 4],
                  "power_allocation": "maxmin-radar", "trials": 100}"#;
    let cfg = ssotfs_harness::parse_config(text).unwrap();
    let t = run_experiment(&cfg, None).unwrap();
    for w in [0, 2, 4] {
        let truth: Vec<f64> = t.series(&format!("n_range={w}/true")).iter().map(|r| r.x).collect();
        let found: Vec<f64> = t.series(&format!("n_range={w}/detected")).iter().map(|r| r.x).collect();
        assert_eq!(truth.len(), 8);
        assert_eq!(found, truth, "beam width {w}");
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ssotfs"))
}

#[test]
fn cli_run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let meta = dir.path().join("out.json");
    let cfg = golden_dir().join("det_eval_small.json");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--metadata")
        .arg(&meta)
        .args(["--threads", "3"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let want = std::fs::read_to_string(golden_dir().join("det_eval_small.csv")).unwrap();
    assert_eq!(comparable(&csv), comparable(&want));
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&meta).unwrap()).unwrap();
    assert_eq!(side["threads"], 3);
    assert_eq!(side["rows"], ResultTable::from_csv_str(&csv).unwrap().rows.len());
}

#[test]
fn cli_overrides_change_seed_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let cfg = golden_dir().join("det_eval_small.json");
    let status =
        bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).args(["--seed", "99", "--trials", "7"]).status().unwrap();
    assert!(status.success());
    let t = ResultTable::from_csv_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.meta("seed"), Some("99"));
    assert!(t.series("P=2/precoded-distinct").iter().all(|r| r.n_trials == 7));
}

#[test]
fn cli_validate_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = golden_dir().join("fer_small.json");
    let ok = bin().args(["validate", "--config"]).arg(&good).output().unwrap();
    assert!(ok.status.success());
    let resolved: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(resolved["kind"], "fer");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind": "fer", "snr_db": [0]}"#).unwrap();
    let out = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));

    let missing = dir.path().join("nope.json");
    let out = bin().args(["validate", "--config"]).arg(&missing).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));
}

#[test]
fn unwritable_output_names_the_path() {
    let cfg = golden_dir().join("det_eval_small.json");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--out", "/nonexistent-dir/out.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/out.csv"));
}
