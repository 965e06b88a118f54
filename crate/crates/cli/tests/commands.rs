use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tectum(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tectum"));
    cmd.args(args).env_remove("TECTUM_OUT").env_remove("SOURCE_DATE_EPOCH");
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.output().unwrap()
}

fn csv_column(path: &Path, column: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn derive_params_writes_params_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = tectum(&["derive-params", "--stage", "e2e4"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("cfl_margin_interphase"), "{stdout}");
    let params: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e2e4_params.json")).unwrap()).unwrap();
    assert!(params.is_object());

    let manifest = fs::read_to_string(dir.path().join("e2e4_derive-params_manifest.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(value["command"], "derive-params");
    assert!(value["timestamp"].is_null());
    // Key order is part of the format.
    let tool = manifest.find("\"tool\"").unwrap();
    let command = manifest.find("\"command\"").unwrap();
    let outputs = manifest.find("\"outputs\"").unwrap();
    assert!(tool < command && command < outputs);
}

#[test]
fn out_defaults_to_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_tectum"))
        .args(["derive-params", "--stage", "e4e6"])
        .env("TECTUM_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("e4e6_params.json").is_file());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["derive-params", "--stage", "e9e12"][..],
        &["derive-params", "--stage", "/no/such/stage.json"],
        &["reduced", "--stage", "e2e4", "--diffusion-mode", "guess"],
        &["converge", "--levels", "1"],
        &["simulate", "--stage", "e2e4", "--q", "sometimes"],
        &["frobnicate"],
    ] {
        let out = tectum(args, Some(dir.path()));
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_stage_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let stage = dir.path().join("stage.json");
    fs::write(&stage, "{ not json").unwrap();
    let out = tectum(&["derive-params", "--stage", stage.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cpr.csv");
    fs::write(&input, "window,mitotic,total\n1,2,x\n").unwrap();
    let out = tectum(&["reduced", "--stage", "e2e4", "--input", input.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reduced_writes_profiles_and_comparisons() {
    let dir = tempfile::tempdir().unwrap();
    let out = tectum(&["reduced", "--stage", "e2e4"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = fs::read_to_string(dir.path().join("e2e4_profile.csv")).unwrap();
    assert!(profile.starts_with("section,value\n"));
    assert_eq!(profile.lines().count(), 97);
    let comparison = fs::read_to_string(dir.path().join("e2e4_anchors_vs_table2_model.csv")).unwrap();
    assert!(comparison.starts_with("section,model,reference,delta\n"));
    let svg = fs::read_to_string(dir.path().join("e2e4_profile.svg")).unwrap();
    assert!(svg.contains("version=\"1.1\""));
    assert!(svg.contains("width=\"800\"") && svg.contains("height=\"400\""));
}

#[test]
fn constant_record_gives_constant_profile() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    let mut text = String::from("window,mitotic,total\n");
    for w in 1..=16 {
        text.push_str(&format!("{w},2,42\n"));
    }
    fs::write(&input, text).unwrap();
    let out = tectum(&["reduced", "--stage", "e2e4", "--input", input.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let values = csv_column(&dir.path().join("e2e4_profile.csv"), 1);
    assert_eq!(values.len(), 96);
    assert!(values.iter().all(|&v| v == values[0]), "{values:?}");
}

#[test]
fn simulate_differentiation_switch() {
    let dir = tempfile::tempdir().unwrap();
    let none = dir.path().join("none");
    let all = dir.path().join("all");
    assert_eq!(tectum(&["simulate", "--stage", "e2e4", "--q", "const:0"], Some(&none)).status.code(), Some(0));
    assert_eq!(tectum(&["simulate", "--stage", "e2e4", "--q", "const:1"], Some(&all)).status.code(), Some(0));

    let n3_none = csv_column(&none.join("e2e4_postmitotic.csv"), 1);
    let n3_all = csv_column(&all.join("e2e4_postmitotic.csv"), 1);
    assert!(n3_none.iter().all(|&v| v == 0.0));
    assert!(n3_all.iter().all(|&v| v > 0.0));

    // Cells in the proliferative pool never decrease without differentiation.
    let cells = csv_column(&none.join("e2e4_totals.csv"), 4);
    assert_eq!(cells.len(), 289);
    assert!(cells.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-5)));
}

#[test]
fn simulate_reads_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.csv");
    let mut text = String::from("section,q\n");
    for j in 1..=16 {
        text.push_str(&format!("{j},{}\n", if j <= 8 { 0.0 } else { 1.0 }));
    }
    fs::write(&q, text).unwrap();
    let spec = format!("csv:{}", q.display());
    let out = tectum(&["simulate", "--stage", "e2e4", "--q", &spec], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let n3 = csv_column(&dir.path().join("e2e4_postmitotic.csv"), 1);
    assert_eq!(n3[0], 0.0);
    assert!(n3[15] > 0.0);
}

#[test]
fn converge_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = tectum(&["converge", "--levels", "3"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,dt,da,dx,max_error"));
    let errors: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn repeat_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert_eq!(tectum(&["reduced", "--stage", "e4e6"], Some(dir)).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}
