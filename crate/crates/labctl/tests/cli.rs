use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use labctl::output::OutputDir;
use serde_json::Value;

fn auxlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auxlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

const LINEAR: &str = r#"
reduction = "sum"

[model]
model = "linear"
input_dim = 1
output_dim = 1

[loss]
loss = "squared"

[data]
fixture = "squared-one-sample"

[optimizer]
max_iter = 2000
grad_tol = 1e-8

[optimizer.method]
method = "gd"
lr = 0.1

[monitor.action]
action = "off"

[seeds]
count = 3

[point]
theta = [0.0, 2.0]
b = [0.3]
w = [0.0]
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn examples_and_unknown_names() {
    let tmp = tempfile::tempdir().unwrap();
    let all = auxlab(&["example", "all"], tmp.path());
    assert_eq!(code(&all), 0);
    assert_eq!(stdout_json(&all)["reports"].as_array().unwrap().len(), 5);
    assert_eq!(code(&auxlab(&["example", "nonexistent"], tmp.path())), 4);
    let one = auxlab(&["example", "squared-two-sample", "--eps", "0.25"], tmp.path());
    let v = stdout_json(&one)["reports"][0]["rows"][0]["general"].as_f64().unwrap();
    assert!((v - 1.0369700).abs() < 1e-6);
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = write(tmp.path(), "zero.toml", &format!("lambda = 0\n{LINEAR}"));
    let o = auxlab(&["train", "--config", &zero], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
    let typo = write(tmp.path(), "typo.toml", &format!("lamda = 0.1\n{LINEAR}"));
    assert_eq!(code(&auxlab(&["train", "--config", &typo], tmp.path())), 2);
    assert_eq!(code(&auxlab(&["train"], tmp.path())), 2);
    let ok = write(tmp.path(), "ok.toml", LINEAR);
    let o = Command::new(env!("CARGO_BIN_EXE_auxlab"))
        .args(["verify", "grad", "--config", &ok])
        .current_dir(tmp.path())
        .env("AUXLAB_CLAMP", "-3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_data_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = LINEAR.replace("fixture = \"squared-one-sample\"", "path = \"absent.csv\"");
    let name = write(tmp.path(), "data.toml", &cfg);
    assert_eq!(code(&auxlab(&["train", "--config", &name], tmp.path())), 3);
    let unknown = LINEAR.replace("squared-one-sample", "no-such-set");
    let name = write(tmp.path(), "unknown.toml", &unknown);
    assert_eq!(code(&auxlab(&["train", "--config", &name], tmp.path())), 4);
}

#[test]
fn verify_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "lin.toml", LINEAR);
    assert_eq!(code(&auxlab(&["verify", "grad", "--config", &cfg], tmp.path())), 0);
    let pgb = auxlab(&["verify", "pgb", "--config", &cfg, "--out", "v"], tmp.path());
    assert_eq!(code(&pgb), 1);
    assert!(String::from_utf8_lossy(&pgb.stdout).contains("REFUTED"));
    assert!(OutputDir::latest(&tmp.path().join("v"))
        .unwrap()
        .join("verdicts.json")
        .exists());
    assert_eq!(
        code(&auxlab(&["verify", "realizable", "--config", &cfg], tmp.path())),
        1
    );
    let f = auxlab(&["verify", "factorization", "--config", &cfg, "--out", "f"], tmp.path());
    assert_eq!(code(&f), 0);
}

#[test]
fn train_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "lin.toml", LINEAR);
    let a = auxlab(&["--jobs", "1", "train", "--config", &cfg, "--out", "runs"], tmp.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let first = OutputDir::latest(&tmp.path().join("runs")).unwrap();
    let b = auxlab(&["train", "--config", &cfg, "--out", "runs"], tmp.path());
    assert_eq!(code(&b), 0);
    let second = OutputDir::latest(&tmp.path().join("runs")).unwrap();
    assert_ne!(first, second);
    for f in [
        "runs.jsonl",
        "summary.json",
        "histogram.csv",
        "config.toml",
        "trajectories/augmented-1.csv",
    ] {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
    let runs = fs::read_to_string(first.join("runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 9);

    // the saved config reproduces the run
    let saved = first.join("config.toml");
    let c = auxlab(
        &["train", "--config", saved.to_str().unwrap(), "--out", "again"],
        tmp.path(),
    );
    assert_eq!(code(&c), 0);
    let third = OutputDir::latest(&tmp.path().join("again")).unwrap();
    assert_eq!(
        fs::read(first.join("runs.jsonl")).unwrap(),
        fs::read(third.join("runs.jsonl")).unwrap()
    );

    let params = first.join("runs.jsonl");
    let v = auxlab(
        &[
            "verify",
            "stationary-a",
            "--config",
            &cfg,
            "--params",
            params.to_str().unwrap(),
            "--variant",
            "augmented",
        ],
        tmp.path(),
    );
    assert_eq!(stdout_json(&v)["verdicts"].as_array().unwrap().len(), 3);
}

#[test]
fn frozen_basin_triggers_the_monitor() {
    let tmp = tempfile::tempdir().unwrap();
    let theta = auxlab::fixtures::shallow_critical_point();
    let cfg = format!(
        r#"
lambda = 0.1
reduction = "sum"

[model]
model = "shifted_bump_curve"

[loss]
loss = "smoothed_hinge"
p = 3

[data]
fixture = "zero-jacobian"

[optimizer]
max_iter = 20000
grad_tol = 0.0

[optimizer.method]
method = "gd"
lr = 0.3

[monitor]
threshold = 7.0

[monitor.action]
action = "restart"
max_restarts = 2

[seeds]
count = 2

[experiment]
variants = ["augmented_monitor"]
frozen_theta = [{theta:?}, 0.0]
"#
    );
    let name = write(tmp.path(), "frozen.toml", &cfg);
    let o = auxlab(&["train", "--config", &name, "--out", "runs"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = OutputDir::latest(&tmp.path().join("runs")).unwrap();
    let events: usize = fs::read_to_string(dir.join("runs.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["events"]
                .as_array()
                .unwrap()
                .len()
        })
        .sum();
    assert!(events >= 1);
}

#[test]
fn default_landscape() {
    let tmp = tempfile::tempdir().unwrap();
    let o = auxlab(&["landscape", "--out", "land"], tmp.path());
    assert_eq!(code(&o), 0);
    let dir = OutputDir::latest(&tmp.path().join("land")).unwrap();
    let csv = fs::read_to_string(dir.join("landscape.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,b,value"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 40_000);
    let cell = rows
        .iter()
        .find(|r| (r[0] - 0.8).abs() < 1e-12 && r[1].abs() < 1e-12)
        .unwrap();
    assert!(cell[2] <= 1e-6);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["failures"], 0);
}
