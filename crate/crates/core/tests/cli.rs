// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of the `quenchctl` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_SCALING: &str = r#"
experiment = "scaling"

[model]
family = "tfim"
n = 20

[protocol]
families = ["invariant", "faquad", "linear"]
g0 = 10.0
g1 = 0.0

[sweep]
tau_over_qsl_range = { from = 2.0, to = 6.0, count = 5 }
"#;

fn quenchctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quenchctl"))
        .args(args)
        .env("QUENCHCTL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, toml: &str, out: &str) -> Output {
    let config = dir.join("experiment.toml");
    fs::write(&config, toml).unwrap();
    let out_dir = dir.join(out);
    quenchctl(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run_config(tmp.path(), SMALL_SCALING, out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap())
            .unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|f| f["path"] == "quench.csv"));
    for f in outputs {
        let name = f["path"].as_str().unwrap();
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
    let other: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("b/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config_hash"], other["config_hash"]);
    assert_eq!(manifest["outputs"], other["outputs"]);
}

#[test]
fn odd_chain_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(
        tmp.path(),
        &SMALL_SCALING.replace("n = 20", "n = 21"),
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("model.n") && err.contains("even"), "{err}");
    assert!(!tmp.path().join("out/quench.csv").exists());
}

#[test]
fn every_config_problem_is_reported_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SMALL_SCALING
        .replace("n = 20", "n = 21")
        .replace("g1 = 0.0", "g1 = 10.0");
    let o = run_config(tmp.path(), &bad, "out");
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("model.n") && err.contains("protocol.g1"),
        "{err}"
    );
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(
        tmp.path(),
        &SMALL_SCALING.replace("n = 20", "n = 20\nsites = 4"),
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sites"));
}

#[test]
fn infeasible_duration_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let short = SMALL_SCALING.replace("from = 2.0", "from = 0.1");
    let o = run_config(tmp.path(), &short, "out");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tau_min"), "{}", stderr(&o));
}

#[test]
fn slopes_command_fits_each_series() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), SMALL_SCALING, "run")
        .status
        .success());
    let csv = tmp.path().join("run/quench.csv");
    let plots = tmp.path().join("plots");
    let o = quenchctl(&[
        "slopes",
        csv.to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(plots.join("quench.slopes.txt")).unwrap();
    for family in ["invariant", "faquad", "linear"] {
        assert!(report.contains(family), "{report}");
    }
}

#[test]
fn slopes_on_a_missing_file_is_an_io_error() {
    let o = quenchctl(&["slopes", "/nonexistent/quench.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn presets_are_listed_and_printable() {
    let o = quenchctl(&["preset", "list"]);
    assert!(o.status.success());
    let listing = String::from_utf8(o.stdout).unwrap();
    for name in ["fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig3b", "fig4"] {
        assert!(listing.contains(name), "{listing}");
    }
    let printed = quenchctl(&["preset", "fig2b", "--print"]);
    assert!(String::from_utf8(printed.stdout)
        .unwrap()
        .contains("experiment = \"disorder\""));
    assert_eq!(quenchctl(&["preset", "nope"]).status.code(), Some(2));
}

#[test]
fn landau_zener_preset_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig4");
    let o = quenchctl(&["preset", "fig4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("quench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 8);
    assert!(out.join("manifest.json").exists() && out.join("config.toml").exists());
}
