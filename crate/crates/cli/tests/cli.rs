use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcr")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, "[topology]\nusers = 4\nservers = 2\n[experiment]\nseeds = [1, 2]\n").unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_tables_traces_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = tcr(&[
        "--config",
        &cfg,
        "--algo",
        "dashf,gucaa",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        "--plot",
        "convergence",
        "--plot",
        "sweep",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("dashf") && stdout.contains("gucaa"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 4);
    assert!(out.join("summary.csv").exists());
    assert_eq!(fs::read_dir(out.join("traces")).unwrap().count(), 4);
    for f in ["convergence.csv", "convergence.svg", "sweep.csv", "sweep.svg"] {
        assert!(out.join("plots").join(f).exists(), "{f}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = tcr(&["--config", &cfg, "--algo", "gucaa", "--seed", "3..5,9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 4);
}

#[test]
fn missing_config_file_exits_2() {
    let o = tcr(&["--config", "/nonexistent/tcr.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/tcr.toml"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[system]\nomega_t = 0.7\nomega_e = 0.7\n").unwrap();
    let o = tcr(&["--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_algorithm_exits_2() {
    let o = tcr(&["--algo", "simplex"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("simplex"));
}

#[test]
fn unknown_plot_kind_exits_2_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = tcr(&["--plot", "pie", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_plot_filter_exits_2() {
    let o = tcr(&["--plot", "sweep", "--plot-filter", "nobody"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let cfg = small_config(dir.path());
    let o = tcr(&["--config", &cfg, "--algo", "gucaa", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_seed_and_worker_flags_exit_2() {
    assert_eq!(tcr(&["--seed", "5..1"]).status.code(), Some(2));
    assert_eq!(tcr(&["--workers", "0"]).status.code(), Some(2));
    assert_eq!(tcr(&["--sweep", "gravity"]).status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let o = tcr(&["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("--plot-filter"));
}
