//! End-to-end checks of the `copronet` binary: subcommands, overrides,
//! exit codes, and output layout.

use std::fs;
use std::path::Path;
use std::process::Command;

fn copronet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_copronet"))
}

const SMALL: [&str; 4] = [
    "n_operators=5",
    "n_coprocessors=5",
    "periods=4",
    "tasks_per_period=10",
];

fn small_run_args(out: &Path) -> Vec<String> {
    let mut args = vec!["run".to_string()];
    for ov in SMALL {
        args.push("--override".into());
        args.push(ov.into());
    }
    args.push("--out".into());
    args.push(out.display().to_string());
    args
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = copronet().args(small_run_args(&out)).status().unwrap();
    assert!(status.success());
    for file in ["metrics.csv", "edges.csv", "summary.json"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let text = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(text.starts_with("period,metric,id,value\n"));
    let frames = text.lines().filter(|l| l.contains(",active_operators,")).count();
    assert_eq!(frames, 4);
}

#[test]
fn missing_config_file_exits_nonzero_and_names_path() {
    let output = copronet()
        .args(["run", "--config", "/no/such/config.toml"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/no/such/config.toml"), "stderr: {stderr}");
}

#[test]
fn bad_config_value_exits_one() {
    let output = copronet()
        .args(["run", "--override", "periods=0"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unknown_config_key_exits_one() {
    let output = copronet()
        .args(["run", "--override", "no_such=1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn sweep_single_cell_matches_run_reshaped() {
    let dir = tempfile::tempdir().unwrap();
    let run_out = dir.path().join("run");
    let sweep_out = dir.path().join("sweep");

    let mut args = small_run_args(&run_out);
    args.extend(["--override".into(), "slash_factor=0.1".into()]);
    args.extend(["--seed".into(), "9".into()]);
    assert!(copronet().args(&args).status().unwrap().success());

    let mut args: Vec<String> = vec!["sweep".into()];
    for ov in SMALL {
        args.push("--override".into());
        args.push(ov.into());
    }
    args.extend([
        "--slash-factors".into(),
        "0.1".into(),
        "--seeds".into(),
        "9".into(),
        "--out".into(),
        sweep_out.display().to_string(),
    ]);
    assert!(copronet().args(&args).status().unwrap().success());

    let run_rows: Vec<String> = fs::read_to_string(run_out.join("metrics.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    let sweep_rows: Vec<String> = fs::read_to_string(sweep_out.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            // strip the "s,seed," prefix
            l.splitn(3, ',').nth(2).unwrap().to_string()
        })
        .collect();
    assert_eq!(run_rows, sweep_rows);
}

#[test]
fn sweep_default_factors_cover_all_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let mut args: Vec<String> = vec!["sweep".into()];
    for ov in SMALL {
        args.push("--override".into());
        args.push(ov.into());
    }
    args.extend([
        "--seeds".into(),
        "1,2".into(),
        "--jobs".into(),
        "2".into(),
        "--out".into(),
        out.display().to_string(),
    ]);
    assert!(copronet().args(&args).status().unwrap().success());
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 5 * 2);
}

#[test]
fn curve_defaults_sample_continuously() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let status = copronet()
        .args(["curve", "--samples", "201", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 201);
    // Lipschitz-style scan: adjacent samples never jump more than the
    // steepest branch slope allows (plus slack for the junctions).
    let step = 1.0 / 200.0;
    let lipschitz = 30.0; // conservative bound for the default parameters
    for w in values.windows(2) {
        assert!(
            (w[1] - w[0]).abs() <= lipschitz * step,
            "jump {} too large",
            (w[1] - w[0]).abs()
        );
    }
}

#[test]
fn curve_calibration_failure_exits_two() {
    let output = copronet()
        .args(["curve", "--params", "e=-10.0", "--out", "/tmp/unused-curve.csv"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("calibration"), "stderr: {stderr}");
}

#[test]
fn seed_flag_beats_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let mut args = small_run_args(&out_a);
    args.extend(["--seed".into(), "777".into()]);
    assert!(copronet().args(&args).status().unwrap().success());
    let mut args = small_run_args(&out_b);
    args.extend(["--override".into(), "rng_seed=1".into(), "--seed".into(), "777".into()]);
    assert!(copronet().args(&args).status().unwrap().success());
    assert_eq!(
        fs::read(out_a.join("metrics.csv")).unwrap(),
        fs::read(out_b.join("metrics.csv")).unwrap()
    );
}
