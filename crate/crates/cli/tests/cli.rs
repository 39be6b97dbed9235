use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hsm_core::domain::{io, FarField, Field, Grid, GridSpec, Params};
use hsm_core::manifold::{extremal_field, ExtremalParams};
use serde_json::Value;
use tempfile::TempDir;

fn lab(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsm-lab"))
        .args(args)
        .env("HSM_LAB_OUTPUT_ROOT", root)
        .current_dir(root)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&lab(tmp.path(), &["--help"])), 0);
    assert_eq!(code(&lab(tmp.path(), &["--version"])), 0);
    assert_eq!(code(&lab(tmp.path(), &["spectrum", "--help"])), 0);
}

#[test]
fn usage_errors_exit_64_without_artifacts() {
    let tmp = TempDir::new().unwrap();
    for args in [
        vec!["ineq", "--p", "2.5"],
        vec!["sharpness"],
        vec!["no-such-study"],
        vec!["spectrum", "--nodes", "48by96"],
        vec!["deficit", "--input", "csv:missing.csv"],
        vec!["spectrum", "--count", "2"],
        vec!["ineq", "--id", "theta_bounds", "--p", "2"],
        vec!["ineq", "--id", "ckn", "--ckn", "2,2,1,0.5"],
    ] {
        let out = lab(tmp.path(), &args);
        assert_eq!(code(&out), 64, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0, "no artifacts on usage errors");
}

#[test]
fn extremal_deficit_writes_complete_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = lab(tmp.path(), &["deficit", "--input", "extremal"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("deficit");
    let summary = json(&dir.join("summary.json"));
    assert!(summary["result"]["report"]["deficit"].as_f64().unwrap().abs() <= 1e-8);
    let manifest = json(&dir.join("manifest.json"));
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["grid_resolution"], "48x96");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(dir.join("config.kv").is_file());
}

#[test]
fn stored_config_reproduces_artifacts() {
    let tmp = TempDir::new().unwrap();
    let args = ["ineq", "--id", "fz24", "--samples", "2000", "--seed", "5", "--output-dir", "first"];
    assert_eq!(code(&lab(tmp.path(), &args)), 0);
    let first = tmp.path().join("first");
    let config = fs::read_to_string(first.join("config.kv")).unwrap();
    fs::write(tmp.path().join("again.kv"), config.replace("output_dir = first", "output_dir = second")).unwrap();
    assert_eq!(code(&lab(tmp.path(), &["run", "again.kv"])), 0);
    let second = tmp.path().join("second");
    assert_eq!(
        fs::read(first.join("summary.json")).unwrap(),
        fs::read(second.join("summary.json")).unwrap()
    );
    let m1 = json(&first.join("manifest.json"));
    let m2 = json(&second.join("manifest.json"));
    assert_ne!(m1["config_sha256"], m2["config_sha256"], "output_dir is part of the configuration");
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let tmp = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        let out = lab(tmp.path(), &["sharpness", "--family", "anisotropic", "--i-values", "4,6,8,12,16", "--output-dir", dir]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
    for file in ["curve.csv", "curve.dat", "summary.json"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(file)).unwrap(),
            fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
    let csv = fs::read_to_string(tmp.path().join("a/curve.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("parameter,deficit,rhs"));
    assert_eq!(csv.lines().count(), 6);
}

fn write_perturbed_field(dir: &Path) {
    let grid = std::sync::Arc::new(Grid::new(Params::new(4, 2.0, 3).unwrap(), GridSpec::default()).unwrap());
    let v = extremal_field(&grid, &ExtremalParams::unit(1)).unwrap();
    let bump = Field::from_fn(grid.clone(), FarField::Decaying, |r, z| {
        0.3 * (-(r - 1.0).powi(2) - z[0] * z[0]).exp()
    })
    .unwrap();
    let values: Vec<f64> = v.values().iter().zip(bump.values()).map(|(a, b)| a * (1.0 + b)).collect();
    let u = Field::from_values(grid, values, FarField::Decaying).unwrap();
    io::write_csv(&u, fs::File::create(dir.join("u.csv")).unwrap()).unwrap();
}

#[test]
fn deficit_of_field_file() {
    let tmp = TempDir::new().unwrap();
    write_perturbed_field(tmp.path());
    let out = lab(tmp.path(), &["deficit", "--input", "csv:u.csv"]);
    assert_eq!(code(&out), 0, "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    let delta = json(&tmp.path().join("deficit/summary.json"))["result"]["report"]["deficit"].as_f64().unwrap();
    assert!(delta > 1e-4, "off-manifold field has a positive deficit: {delta}");
    // The same file on another grid is a runtime error, recorded in the manifest.
    let out = lab(tmp.path(), &["deficit", "--input", "csv:u.csv", "--nodes", "40x80", "--output-dir", "other"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&tmp.path().join("other/manifest.json"))["status"], "error");
}

#[test]
fn failed_assertion_exits_two() {
    let tmp = TempDir::new().unwrap();
    // Dilation invariance is not resolved to 1e−7 on the coarse grid.
    let out = lab(tmp.path(), &["invariance", "--nodes", "48x96"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&tmp.path().join("invariance/manifest.json"))["status"], "fail");
}

#[test]
fn output_root_comes_from_environment() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_hsm-lab"))
        .args(["sharp-constant"])
        .env("HSM_LAB_OUTPUT_ROOT", &root)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(root.join("sharp-constant/summary.json").is_file());
}

#[test]
fn print_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let out = lab(tmp.path(), &["spectrum", "--p", "2.5", "--count", "8", "--print-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = hsm_lab::StudyConfig::parse(&text).unwrap();
    assert_eq!(cfg.to_string(), text);
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn empty_batch_passes() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("list.txt"), "# nothing to run\n").unwrap();
    let out = lab(tmp.path(), &["batch", "list.txt"]);
    assert_eq!(code(&out), 0);
    let report = json(&tmp.path().join("batch/batch_summary.json"));
    assert_eq!(report["members"].as_array().unwrap().len(), 0);
}

fn write_config(dir: &Path, name: &str, args: &[&str]) {
    let out = lab(dir, &[args, &["--print-config"]].concat());
    assert_eq!(code(&out), 0);
    fs::write(dir.join(name), out.stdout).unwrap();
}

#[test]
fn batch_rejects_shared_output_dir_before_running() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "a.kv", &["sharp-constant", "--output-dir", "same"]);
    write_config(tmp.path(), "b.kv", &["deficit", "--output-dir", "./same"]);
    fs::write(tmp.path().join("list.txt"), "a.kv\nb.kv\n").unwrap();
    let out = lab(tmp.path(), &["batch", "list.txt"]);
    assert_eq!(code(&out), 64);
    assert!(!tmp.path().join("same").exists());
}

#[test]
fn batch_exit_reflects_worst_member() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "pass.kv", &["sharp-constant"]);
    write_config(tmp.path(), "fail.kv", &["invariance", "--nodes", "48x96"]);
    fs::write(tmp.path().join("list.txt"), "pass.kv\nfail.kv\n").unwrap();
    let out = lab(tmp.path(), &["batch", "list.txt", "--output-dir", "agg"]);
    assert_eq!(code(&out), 2);
    let report = json(&tmp.path().join("agg/batch_summary.json"));
    let statuses: Vec<&str> = report["members"].as_array().unwrap().iter().map(|m| m["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["pass", "fail"]);

    // A runtime error outranks a failure.
    write_perturbed_field(tmp.path());
    write_config(tmp.path(), "error.kv", &["deficit", "--input", "csv:u.csv", "--nodes", "40x80", "--output-dir", "err"]);
    fs::write(tmp.path().join("list2.txt"), "fail.kv\nerror.kv\n").unwrap();
    fs::remove_dir_all(tmp.path().join("invariance")).unwrap();
    let out = lab(tmp.path(), &["batch", "list2.txt", "--output-dir", "agg2"]);
    assert_eq!(code(&out), 1);
}
