//! Metric capture and export: per-period frames, Spearman rank
//! correlation, the slashing-factor sweep, and deterministic long-format
//! CSV / JSON summary files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::SimulationConfig;
use crate::engine::run_simulation;
use crate::{Error, Result};

/// Per-period snapshot backing every exported figure.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsFrame {
    pub period: u32,
    pub active_operators: u32,
    pub cumulative_reward_total: f64,
    pub cumulative_slash_total: f64,
    pub per_operator_reward: Vec<f64>,
    pub per_coprocessor_load: Vec<f64>,
    pub per_coprocessor_reward: Vec<f64>,
    pub per_coprocessor_reputation: Vec<f64>,
    /// Sparse (operator_id, coprocessor_id) -> delegated-task count.
    pub assignment_counts: Vec<((u64, u64), u64)>,
}

/// One cell of a sweep: the full frame series for a (slash factor, seed) pair.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub slash_factor: f64,
    pub seed: u64,
    pub frames: Vec<MetricsFrame>,
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "spearman inputs differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "spearman needs at least two observations".into(),
        ));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mean) * (b - mean);
        dx += (a - mean) * (a - mean);
        dy += (b - mean) * (b - mean);
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(Error::InvalidArgument(
            "spearman undefined for a constant input".into(),
        ));
    }
    Ok(num / (dx * dy).sqrt())
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("no NaN in metric data"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Run one simulation per (slash factor, seed) pair. Cells execute in
/// parallel; the returned order is deterministic (factors outer, seeds
/// inner).
pub fn run_sweep(
    base: &SimulationConfig,
    s_values: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepCell>> {
    if s_values.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one slash factor and one seed".into(),
        ));
    }
    let cells: Vec<(f64, u64)> = s_values
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    cells
        .into_par_iter()
        .map(|(slash_factor, seed)| {
            let config = SimulationConfig {
                slash_factor,
                rng_seed: seed,
                ..*base
            };
            let frames = run_simulation(config).map_err(|e| {
                Error::Numeric(format!("sweep cell (s={slash_factor}, seed={seed}): {e}"))
            })?;
            Ok(SweepCell {
                slash_factor,
                seed,
                frames,
            })
        })
        .collect()
}

/// 12-significant-digit float serialization: exact enough to round-trip
/// at test tolerance, short enough to keep sweep files manageable.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_frame_rows(w: &mut impl Write, prefix: &str, frame: &MetricsFrame) -> std::io::Result<()> {
    let p = frame.period;
    writeln!(w, "{prefix}{p},active_operators,,{}", frame.active_operators)?;
    writeln!(
        w,
        "{prefix}{p},cumulative_reward_total,,{}",
        fmt_value(frame.cumulative_reward_total)
    )?;
    writeln!(
        w,
        "{prefix}{p},cumulative_slash_total,,{}",
        fmt_value(frame.cumulative_slash_total)
    )?;
    for (id, v) in frame.per_operator_reward.iter().enumerate() {
        writeln!(w, "{prefix}{p},operator_reward,{id},{}", fmt_value(*v))?;
    }
    for (id, v) in frame.per_coprocessor_load.iter().enumerate() {
        writeln!(w, "{prefix}{p},coprocessor_load,{id},{}", fmt_value(*v))?;
    }
    for (id, v) in frame.per_coprocessor_reward.iter().enumerate() {
        writeln!(w, "{prefix}{p},coprocessor_reward,{id},{}", fmt_value(*v))?;
    }
    for (id, v) in frame.per_coprocessor_reputation.iter().enumerate() {
        writeln!(
            w,
            "{prefix}{p},coprocessor_reputation,{id},{}",
            fmt_value(*v)
        )?;
    }
    Ok(())
}

/// Long-format per-run CSV: period,metric,id,value.
pub fn export_csv(frames: &[MetricsFrame], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "period,metric,id,value")?;
        for frame in frames {
            write_frame_rows(&mut w, "", frame)?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

/// Assignment counts as an edge list: period,operator_id,coprocessor_id,count.
pub fn export_edges_csv(frames: &[MetricsFrame], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "period,operator_id,coprocessor_id,count")?;
        for frame in frames {
            for ((op, co), n) in &frame.assignment_counts {
                writeln!(w, "{},{op},{co},{n}", frame.period)?;
            }
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

/// Long-format sweep table: s,seed,period,metric,id,value.
pub fn export_sweep_csv(cells: &[SweepCell], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "s,seed,period,metric,id,value")?;
        for cell in cells {
            let prefix = format!("{},{},", fmt_value(cell.slash_factor), cell.seed);
            for frame in &cell.frames {
                write_frame_rows(&mut w, &prefix, frame)?;
            }
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

/// Summary statistics mirrored as JSON next to each CSV export.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunSummary {
    pub slash_factor: f64,
    pub seed: u64,
    pub total_reward: f64,
    pub final_active_operators: u32,
    /// Spearman between final coprocessor reputation and cumulative
    /// reward; None when degenerate (e.g. no coprocessor ever rewarded).
    pub reputation_reward_spearman: Option<f64>,
}

pub fn summarize(slash_factor: f64, seed: u64, frames: &[MetricsFrame]) -> RunSummary {
    let last = frames.last();
    RunSummary {
        slash_factor,
        seed,
        total_reward: last.map_or(0.0, |f| f.cumulative_reward_total),
        final_active_operators: last.map_or(0, |f| f.active_operators),
        reputation_reward_spearman: last.and_then(|f| {
            spearman(&f.per_coprocessor_reputation, &f.per_coprocessor_reward).ok()
        }),
    }
}

pub fn export_summary_json(summaries: &[RunSummary], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summaries)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
