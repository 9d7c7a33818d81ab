use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nadim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nadim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    let out = nadim(&all);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Data rows of a CSV artifact as named columns.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# spec="));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = table(path);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("bad error record {text}: {e}"))
}

#[test]
fn spectrum_middle_third_is_flat() {
    let dir = TempDir::new().unwrap();
    run_in(
        dir.path(),
        &["spectrum", "--preset", "middle-third", "--theta-grid", "0.1:1.0:0.1", "--tol", "5e-3"],
    );
    let csv = dir.path().join("spectrum.csv");
    let (header, rows) = table(&csv);
    for name in ["theta", "s_upper", "s_lower", "delta_min", "k_delta_max", "tol"] {
        assert!(header.iter().any(|h| h == name), "missing column {name}");
    }
    assert_eq!(rows.len(), 10);
    let target = 2f64.ln() / 3f64.ln();
    for name in ["s_upper", "s_lower"] {
        for v in column(&csv, name) {
            let s: f64 = v.parse().unwrap();
            assert!((s - target).abs() <= 3.0 * 5e-3, "{name} = {s}");
        }
    }
    assert!(dir.path().join("spectrum.csv.meta.json").exists());
}

#[test]
fn moran_e1_final_value() {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), &["moran", "--preset", "E1", "--k", "2000"]);
    let s = column(&dir.path().join("moran.csv"), "s_k");
    assert_eq!(s.len(), 2000);
    let last: f64 = s.last().unwrap().parse().unwrap();
    assert!((last - 2f64.ln() / 3f64.ln()).abs() < 2e-3, "{last}");
}

#[test]
fn diagnose_e3_averaged_ratio_fails() {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), &["diagnose", "--preset", "E3"]);
    let (header, rows) = table(&dir.path().join("diagnose_summary.csv"));
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let row = rows.iter().find(|r| r[col("condition")] == "averaged-ratio").unwrap();
    let last: f64 = row[col("last")].parse().unwrap();
    assert!((last.abs() - 0.5).abs() < 1e-2, "{last}");
    assert_eq!(row[col("verdict")], "plausibly-fails");
    let b: f64 = column(&dir.path().join("diagnose.csv"), "ratio_b").last().unwrap().parse().unwrap();
    assert!((b.abs() - 0.5).abs() < 1e-2);
}

#[test]
fn duplicate_key_has_its_own_code() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "command = \"jump\"\npreset = \"E1\"\npreset = \"E2\"\n").unwrap();
    let out = nadim(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["code"], "duplicate-key");
    assert_eq!(e["error"]["line"], 3);
}

#[test]
fn theta_zero_points_to_jump() {
    let dir = TempDir::new().unwrap();
    let out = nadim(&[
        "spectrum",
        "--preset",
        "middle-third",
        "--theta-grid",
        "0:1:0.1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["code"], "theta-zero");
    assert!(e["error"]["message"].as_str().unwrap().contains("jump"));
}

#[test]
fn compute_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    let out = nadim(&["realize", "--preset", "geometric-infinite", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "compute");
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["spectrum", "--preset", "block-alternating", "--theta-grid", "0.25,0.5,1", "--depth", "64"];
    run_in(a.path(), &args);
    run_in(b.path(), &args);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn config_file_matches_flags() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run_in(a.path(), &["jump", "--preset", "E1", "--k-max", "400", "--window", "200"]);
    let cfg = b.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "command = \"jump\"\npreset = \"E1\"\nout = {:?}\n[params]\nk_max = 400\nwindow = 200\n",
            b.path().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = nadim(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(a.path().join("jump.csv")).unwrap(),
        fs::read(b.path().join("jump.csv")).unwrap()
    );
}

#[test]
fn spec_file_round_trip_and_errors() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("cantor.toml");
    fs::write(
        &spec,
        "name = \"cantor\"\n[tail]\nrule = \"homogeneous\"\nratio = 0.3333333333333333\nbranches = 2\n",
    )
    .unwrap();
    let out = nadim(&["jump", "--spec", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: f64 = column(&dir.path().join("jump.csv"), "s_lower")[0].parse().unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-4);

    fs::write(&spec, "name = \"x\"\nname = \"y\"\n").unwrap();
    let out = nadim(&["jump", "--spec", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["code"], "spec-duplicate-key");
}

#[test]
fn geometry_and_truncation_artifacts() {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), &["boxdim", "--preset", "middle-third", "--depth", "12"]);
    let slope: f64 = column(&dir.path().join("boxdim.csv"), "slope")[0].parse().unwrap();
    assert!((slope - 2f64.ln() / 3f64.ln()).abs() < 5e-2);
    run_in(dir.path(), &["massdim", "--preset", "middle-third"]);
    for v in column(&dir.path().join("massdim.csv"), "min_exponent") {
        assert!(v.parse::<f64>().unwrap() >= 0.58);
    }
    run_in(dir.path(), &["truncate", "--preset", "geometric-stationary"]);
    for v in column(&dir.path().join("truncate_coverage.csv"), "holds") {
        assert_eq!(v, "true");
    }
    assert!(dir.path().join("truncated.toml").exists());
    let sub = dir.path().join("truncated.toml");
    run_in(dir.path(), &["jump", "--spec", sub.to_str().unwrap(), "--k-max", "400"]);
}

#[test]
fn report_reads_artifacts_only() {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), &["jump", "--preset", "E1"]);
    run_in(dir.path(), &["pressure", "--preset", "E1", "--format", "json-lines", "--k-max", "200"]);
    let out = nadim(&["report", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("## jump.csv"));
    assert!(text.contains("## pressure.jsonl"));
    assert!(!text.contains("WARNING"));
    // Tampering is noticed, not recomputed.
    fs::write(dir.path().join("jump.csv"), "# spec=E1\ns_upper\n1\n").unwrap();
    let text = String::from_utf8(nadim(&["report", dir.path().to_str().unwrap()]).stdout).unwrap();
    assert!(text.contains("WARNING"));
}
