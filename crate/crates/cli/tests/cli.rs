use std::path::Path;
use std::process::{Command, Output};

fn gstore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gstore")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn constants_for_brownian_motion() {
    let out = gstore(&["constants", "--model", "fbm", "--hurst", "0.5", "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let get = |k: &str| v[k].as_f64().unwrap();
    assert!((get("tauStar") - 1.0).abs() < 1e-12);
    assert!((get("A") - 2.0).abs() < 1e-12);
    assert!((get("B") - 0.5).abs() < 1e-12);
    assert!((get("gamma") - 2.0).abs() < 1e-12);
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(gstore(&["--help"]).status.code(), Some(0));
    assert_eq!(gstore(&["constants", "--model", "fbm", "--hurst", "1.5", "--c", "1"]).status.code(), Some(2));
    assert_eq!(gstore(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(gstore(&["constants", "--model", "fbm", "--hurst", "0.5"]).status.code(), Some(2));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, "c = 1.0\nhurts = 0.5\n").unwrap();
    let out = gstore(&["constants", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&p, "c = 2.0\n[model]\nkind = \"fbm\"\nhurst = 0.5\n").unwrap();
    // the flag overrides the file
    let out = gstore(&["constants", "--config", p.to_str().unwrap(), "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["tauStar"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn pending_pickands_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = gstore(&["criterion", "--model", "fbm", "--hurst", "0.7", "--c", "1", "--p", "1", "--output-dir", d]);
    assert_eq!(out.status.code(), Some(1));
    let diag: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "pending");
}

#[test]
fn criterion_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = gstore(&[
        "criterion", "--model", "fbm", "--hurst", "0.5", "--c", "1", "--p", "-1,0,1", "--output-dir", d, "--emit", "plot-data",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for ext in ["json", "csv", "dat"] {
        assert!(dir.path().join(format!("criterion.{ext}")).exists(), "{ext}");
    }
}

#[test]
fn sample_writes_binary_paths() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["sample", "--model", "fbm", "--hurst", "0.7", "--c", "1", "--horizon", "10", "--step", "0.5", "--format", "gsp1"];
    let out = gstore(&[&args[..], &["--output-dir", d, "--seed", "4"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(dir.path().join("path.gsp1")).unwrap();
    let (grid, values) = gstore::io::decode_gsp1(&bytes).unwrap();
    assert_eq!(values.len(), 21);
    assert_eq!(grid.step, 0.5);
    assert_eq!(values[0], 0.0);
}

const SUITE: &str = r#"
schema_version = 1
seed = 11
output_dir = "out"
c = 1.0
emit_plot_data = true

[model]
kind = "fbm"
hurst = 0.5

[[jobs]]
kind = "constants"
name = "k"

[[jobs]]
kind = "psi"
name = "psi"
u = [0.5, 1.0]
replicas = 200
"#;

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn suite_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("suite.toml");
    std::fs::write(&file, SUITE).unwrap();
    let f = file.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path, workers: &str| {
        let o = gstore(&["suite", f, "--output-dir", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&a, "1");
    let first = read_all(&a);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["k.csv", "k.json", "manifest.json", "psi.csv", "psi.dat", "psi.json"]);
    let again = run(&a, "1");
    assert!(String::from_utf8_lossy(&again.stdout).contains("psi: reused"));
    assert_eq!(read_all(&a), first);
    run(&b, "3");
    assert_eq!(read_all(&b), first);
}

#[test]
fn empty_suite_has_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("suite.toml");
    let text = SUITE.split("[[jobs]]").next().unwrap();
    std::fs::write(&file, text).unwrap();
    let o = gstore(&["suite", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["jobs"].as_array().unwrap().len(), 0);
    assert_eq!(m["complete"], true);
}
