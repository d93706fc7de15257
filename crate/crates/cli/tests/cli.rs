//! End-to-end runs of the `hfm` binary.

use std::path::Path;
use std::process::{Command, Output};

fn hfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_then_uvalue() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("steady.csv");
    let o = hfm(&["simulate", "--wall", "single_layer", "--scenario", "steady", "--seed", "0", "-o", path(&csv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("577 samples"), "{}", stdout(&o));

    let o = hfm(&["uvalue", path(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("U: 0.5988"), "{text}");
    assert!(text.contains("stability: stable"), "{text}");
}

#[test]
fn train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sin.csv");
    assert!(hfm(&["simulate", "--wall", "reference_wall", "--scenario", "sinusoidal", "-o", path(&csv)])
        .status
        .success());
    let config = write_config(dir.path(), "[training]\nmax_epochs = 20\n");
    let ckpt = dir.path().join("run.json");
    let o = hfm(&[
        "train", path(&csv), "--arch", "gru4", "--split", "1/2", "--seed", "3", "-o", path(&ckpt), "--config", &config,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("20 epochs"), "{}", stdout(&o));

    let plot = dir.path().join("pred.csv");
    let o = hfm(&["predict", path(&ckpt), path(&csv), "-o", path(&plot)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<csv::StringRecord> = csv::Reader::from_path(&plot).unwrap().records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 490);
    assert_eq!(rows.iter().position(|r| &r[4] == "1"), Some(245));
    assert!(dir.path().join("pred_scatter.csv").exists());
}

#[test]
fn grid_writes_report_directory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sin.csv");
    assert!(hfm(&["simulate", "--wall", "reference_wall", "--scenario", "sinusoidal", "-o", path(&csv)])
        .status
        .success());
    let config = write_config(dir.path(), "[training]\nmax_epochs = 10\ncell_activation = \"tanh\"\n");
    let out = dir.path().join("report");
    let o = hfm(&[
        "grid", path(&csv), "--seeds", "0,1", "--archs", "mlp3,lstm4", "--splits", "1/4,2/3", "--workers", "2",
        "--config", &config, "-o", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("LSTM4"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    assert!(out.join("report.txt").exists());
    assert!(out.join("plots/MLP3_1-4_seed1.csv").exists());
    assert!(out.join("plots/LSTM4_2-3_seed0_scatter.csv").exists());
    assert!(out.join("extrapolation/LSTM4_1-4_seed0.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hfm(&["--help"]).status.code(), Some(0));
    assert_eq!(hfm(&["uvalue", path(&dir.path().join("missing.csv"))]).status.code(), Some(3));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "timestamp,t_internal_c,t_external_c\n2019-02-22T14:00:00Z,20,0\n").unwrap();
    assert_eq!(hfm(&["uvalue", path(&bad)]).status.code(), Some(1));

    let csv = dir.path().join("sin.csv");
    assert!(hfm(&["simulate", "--wall", "reference_wall", "--scenario", "sinusoidal", "-o", path(&csv)])
        .status
        .success());
    let ckpt = dir.path().join("x.json");
    let unknown = hfm(&["train", path(&csv), "--arch", "cnn3", "--split", "1/2", "-o", path(&ckpt)]);
    assert_eq!(unknown.status.code(), Some(1));

    let config = write_config(
        dir.path(),
        "[training]\nmax_epochs = 5\n[training.optimizer]\nkind = \"sgd\"\nlearning_rate = 1e200\n",
    );
    let diverged = hfm(&[
        "train", path(&csv), "--arch", "mlp3", "--split", "1/2", "-o", path(&ckpt), "--config", &config,
    ]);
    assert_eq!(diverged.status.code(), Some(2), "{}", String::from_utf8_lossy(&diverged.stderr));
}
