use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn roughpath(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughpath"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn report_rows(out: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(out.join("report.csv")).unwrap();
    reader.records().map(Result::unwrap).collect()
}

#[test]
fn signature_of_the_two_segment_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("two_segment.csv");
    let out = roughpath(&["signature", "--path", path.to_str().unwrap(), "--depth", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let level2: Vec<f64> = report_rows(dir.path())
        .iter()
        .filter(|r| &r[3] == "2")
        .map(|r| r[5].parse().unwrap())
        .collect();
    assert_eq!(level2, [0.5, 1.0, 0.0, 0.5]);
    let s = summary(dir.path());
    assert_eq!(s["schema"], 1);
    assert_eq!(s["passed"], true);
    assert_eq!(s["config"]["depth"], 2);
}

#[test]
fn json_and_csv_inputs_agree() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (file, dir) in [("two_segment.csv", &a), ("two_segment.json", &b)] {
        let path = fixture(file);
        let out = roughpath(&["signature", "--path", path.to_str().unwrap(), "--depth", "4"], dir.path());
        assert!(out.status.success());
    }
    let values = |d: &Path| report_rows(d).iter().map(|r| r[5].to_string()).collect::<Vec<_>>();
    assert_eq!(values(a.path()), values(b.path()));
}

#[test]
fn identical_paths_give_zero_lhs() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("two_segment.csv");
    let p = path.to_str().unwrap();
    let out = roughpath(&["verify-theorem", "--x", p, "--y", p, "--pairs", "16", "--levels", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = report_rows(dir.path());
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[7].parse::<f64>().unwrap() == 0.0));
    assert_eq!(summary(dir.path())["params"]["epsilon"], 0.0);
}

#[test]
fn perturbed_pair_passes_in_the_critical_case() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (fixture("two_segment.csv"), fixture("two_segment_perturbed.csv"));
    let args = ["verify-theorem", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--pairs", "16"];
    let out = roughpath(&args, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["case"], "Critical");
    assert!(s["params"]["epsilon"].as_f64().unwrap() > 0.0);
}

#[test]
fn small_beta_is_reported_as_a_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (fixture("two_segment.csv"), fixture("two_segment_perturbed.csv"));
    let args = [
        "verify-theorem",
        "--x",
        x.to_str().unwrap(),
        "--y",
        y.to_str().unwrap(),
        "--pairs",
        "8",
        "--levels",
        "2",
        "--beta",
        "3",
    ];
    let out = roughpath(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(dir.path())["beta_ok"], false);
}

#[test]
fn extend_partition_and_neoclassical_pass() {
    let path = fixture("two_segment_perturbed.csv");
    let p = path.to_str().unwrap();
    for args in [
        vec!["extend", "--path", p, "--depth", "4"],
        vec!["partition", "--path", p, "--order", "5"],
        vec!["neoclassical", "--p", "2.5"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = roughpath(&args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn partition_summary_lists_nested_times() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("two_segment.csv");
    roughpath(&["partition", "--path", path.to_str().unwrap(), "--order", "2"], dir.path());
    let points: Vec<f64> = summary(dir.path())["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(points, [0.0, 0.25, 0.5, 0.75, 1.0]);
}

#[test]
fn cde_compare_on_the_rotation_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixture("rotation_problem.json");
    let out = roughpath(
        &["cde-compare", "--problem", problem.to_str().unwrap(), "--epsilons", "1e-2,1e-3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report_rows(dir.path()).len(), 2);
    assert!(summary(dir.path())["max_series_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn config_file_is_merged_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::copy(fixture("two_segment.csv"), dir.path().join("path.csv")).unwrap();
    std::fs::write(&config, r#"{"path": "path.csv", "depth": 3, "seed": 9}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = roughpath(&["signature", "--config", config.to_str().unwrap(), "--seed", "10"], &out_dir);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out_dir);
    assert_eq!(s["seed"], 10);
    assert_eq!(s["config"]["depth"], 3);
}

#[test]
fn errors_have_distinct_codes_and_one_line_records() {
    let dir = tempfile::tempdir().unwrap();
    let bad_config = dir.path().join("bad.json");
    std::fs::write(&bad_config, r#"{"dept": 3}"#).unwrap();
    let malformed = dir.path().join("bad.csv");
    std::fs::write(&malformed, "time,x1\n0,0\n0,1\n").unwrap();
    let cases: [(Vec<&str>, i32); 4] = [
        (vec!["signature", "--bogus"], 2),
        (vec!["signature", "--config", bad_config.to_str().unwrap()], 2),
        (vec!["signature", "--path", "/does/not/exist.csv"], 3),
        (vec!["signature", "--path", malformed.to_str().unwrap()], 3),
    ];
    for (args, code) in cases {
        let out = roughpath(&args, &dir.path().join("out"));
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
        let record: Value = serde_json::from_str(stderr.trim()).unwrap();
        assert_eq!(record["exit_code"], code);
    }
}

#[test]
fn non_convergence_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("two_segment_perturbed.csv");
    let out = roughpath(&["extend", "--path", path.to_str().unwrap(), "--depth", "5", "--tol", "1e-300"], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let path = fixture("two_segment_perturbed.csv");
    let p = path.to_str().unwrap();
    let args = ["verify-theorem", "--x", p, "--y", p, "--pairs", "8", "--levels", "3"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    roughpath(&args, a.path());
    roughpath(&args, b.path());
    for name in ["report.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}
