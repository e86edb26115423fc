//! Command-line entry points: `run`, `sweep`, and `curve`.
//!
//! Exit codes: 0 success, 1 config error, 2 runtime error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::SimulationConfig;
use crate::curve::{calibrate, load_curve, CurveParams};
use crate::engine::run_simulation;
use crate::metrics::{
    export_csv, export_edges_csv, export_summary_json, export_sweep_csv, fmt_value, run_sweep,
    summarize,
};
use crate::{Error, Result};

/// The sweep values of the slashing experiment.
pub const DEFAULT_SLASH_FACTORS: [f64; 5] = [0.01, 0.03, 0.1, 0.2, 0.5];

#[derive(Parser, Debug)]
#[command(name = "copronet", version, about = "Operator/coprocessor delegation network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override config values by dotted path, e.g. --override gas.beta=0.9.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SimulationConfig> {
        match &self.config {
            Some(path) => SimulationConfig::load(path, &self.overrides),
            None => SimulationConfig::from_overrides(&self.overrides),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one simulation and export metrics CSV, edge list, and summary JSON.
    Run {
        #[command(flatten)]
        config: ConfigArgs,

        /// RNG seed; takes precedence over the config file.
        #[arg(long)]
        seed: Option<u64>,

        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep the slash factor over paired seeds and export a long-format table.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,

        /// Comma-separated slash factors.
        #[arg(long = "slash-factors", value_delimiter = ',')]
        slash_factors: Vec<f64>,

        /// Comma-separated seeds.
        #[arg(long = "seeds", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
        seeds: Vec<u64>,

        /// Parallel sweep cells; defaults to the rayon global pool size.
        #[arg(long)]
        jobs: Option<usize>,

        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Calibrate the incentive load curve and sample it to CSV.
    Curve {
        /// Curve parameter overrides, e.g. --params a=1.2 --params b=0.25.
        #[arg(long = "params", value_name = "KEY=VALUE")]
        params: Vec<String>,

        /// Number of evenly spaced samples over [0, 1].
        #[arg(long, default_value_t = 101)]
        samples: u32,

        /// Output CSV file.
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
    },
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, &out),
        Command::Sweep {
            config,
            slash_factors,
            seeds,
            jobs,
            out,
        } => cmd_sweep(&config, &slash_factors, &seeds, jobs, &out),
        Command::Curve {
            params,
            samples,
            out,
        } => cmd_curve(&params, samples, &out),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_run(args: &ConfigArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut config = args.load()?;
    if let Some(seed) = seed {
        config.rng_seed = seed;
    }
    let frames = run_simulation(config)?;
    ensure_dir(out)?;
    export_csv(&frames, &out.join("metrics.csv"))?;
    export_edges_csv(&frames, &out.join("edges.csv"))?;
    let summary = summarize(config.slash_factor, config.rng_seed, &frames);
    export_summary_json(&[summary], &out.join("summary.json"))?;
    Ok(())
}

pub fn cmd_sweep(
    args: &ConfigArgs,
    slash_factors: &[f64],
    seeds: &[u64],
    jobs: Option<usize>,
    out: &Path,
) -> Result<()> {
    let config = args.load()?;
    let factors: Vec<f64> = if slash_factors.is_empty() {
        DEFAULT_SLASH_FACTORS.to_vec()
    } else {
        slash_factors.to_vec()
    };
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let cells = match jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Numeric(e.to_string()))?
            .install(|| run_sweep(&config, &factors, seeds)),
        None => run_sweep(&config, &factors, seeds),
    }?;
    ensure_dir(out)?;
    export_sweep_csv(&cells, &out.join("sweep.csv"))?;
    let summaries: Vec<_> = cells
        .iter()
        .map(|c| summarize(c.slash_factor, c.seed, &c.frames))
        .collect();
    export_summary_json(&summaries, &out.join("summary.json"))?;
    Ok(())
}

pub fn cmd_curve(params: &[String], samples: u32, out: &Path) -> Result<()> {
    if samples < 2 {
        return Err(Error::Config("curve sampling needs at least 2 points".into()));
    }
    let mut value =
        toml::Value::try_from(CurveParams::default()).map_err(|e| Error::Config(e.to_string()))?;
    for spec in params {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--params '{spec}' is not key=value")))?;
        let table = value.as_table_mut().expect("curve params serialize to a table");
        if !table.contains_key(key) {
            return Err(Error::Config(format!("unknown curve parameter '{key}'")));
        }
        let parsed: f64 = raw
            .parse()
            .map_err(|_| Error::Config(format!("curve parameter '{key}' wants a number")))?;
        table.insert(key.to_string(), toml::Value::Float(parsed));
    }
    let raw_params: CurveParams = value.try_into().map_err(|e| Error::Config(e.to_string()))?;
    let calibrated = calibrate(&raw_params)?;

    let mut rows = String::from("x,value\n");
    for k in 0..samples {
        let x = f64::from(k) / f64::from(samples - 1);
        rows.push_str(&format!("{},{}\n", fmt_value(x), fmt_value(load_curve(x, &calibrated)?)));
    }
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    fs::write(out, rows).map_err(|e| Error::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_sampling_two_points() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("curve.csv");
        cmd_curve(&[], 2, &out).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with(&format!("{},", fmt_value(0.0))));
        assert!(lines[2].starts_with(&format!("{},", fmt_value(1.0))));
    }

    #[test]
    fn curve_value_at_b_is_a_minus_c() {
        let p = CurveParams::default();
        assert!((load_curve(p.b, &p).unwrap() - (p.a - p.c)).abs() < 1e-9);
    }

    #[test]
    fn curve_rejects_discontinuous_params() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("curve.csv");
        let err = cmd_curve(&["e=-10.0".into()], 10, &out).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn curve_rejects_unknown_param() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_curve(&["zz=1".into()], 10, &dir.path().join("c.csv")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn run_respects_period_override_and_seed_flag() {
        let dir = tempfile::tempdir().unwrap();
        let args = ConfigArgs {
            config: None,
            overrides: vec![
                "periods=3".into(),
                "tasks_per_period=5".into(),
                "n_operators=3".into(),
                "n_coprocessors=3".into(),
            ],
        };
        cmd_run(&args, Some(123), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let frames = text
            .lines()
            .filter(|l| l.contains(",active_operators,"))
            .count();
        assert_eq!(frames, 3);
        let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(summary.contains("\"seed\": 123"));
    }

    #[test]
    fn flag_overrides_beat_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("cfg.toml");
        fs::write(&cfg_path, "periods = 50\n").unwrap();
        let args = ConfigArgs {
            config: Some(cfg_path),
            overrides: vec!["periods=2".into()],
        };
        let cfg = args.load().unwrap();
        assert_eq!(cfg.periods, 2);
    }

    #[test]
    fn missing_config_is_a_config_style_io_error() {
        let args = ConfigArgs {
            config: Some(PathBuf::from("/definitely/not/here.toml")),
            overrides: vec![],
        };
        let err = args.load().unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.toml"));
    }
}
