//! Result tables: per-run rows, per-point summaries and run traces.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Algorithm, RunRecord, SweepPoint};
use crate::error::Result;

pub const RESULTS_HEADER: [&str; 12] = [
    "sweep_index",
    "sweep_value",
    "x",
    "algorithm",
    "seed",
    "tcr",
    "t_total_s",
    "e_total_j",
    "v_trust",
    "outer_iterations",
    "converged",
    "wall_s",
];

pub const SUMMARY_HEADER: [&str; 8] =
    ["sweep_index", "sweep_value", "x", "algorithm", "runs", "tcr_median", "tcr_q25", "tcr_q75"];

/// Quantile with linear interpolation between order statistics
/// (`h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub point_index: usize,
    pub point: SweepPoint,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// TCR median and quartiles per (sweep point, algorithm), in record order.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Algorithm)> = records.iter().map(|r| (r.row.point_index, r.row.algorithm)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(pi, alg)| {
            let group: Vec<&RunRecord> =
                records.iter().filter(|r| r.row.point_index == pi && r.row.algorithm == alg).collect();
            let mut v: Vec<f64> = group.iter().map(|r| r.row.tcr).collect();
            v.sort_by(f64::total_cmp);
            SummaryRow {
                point_index: pi,
                point: group[0].row.point,
                algorithm: alg,
                runs: v.len(),
                median: quantile(&v, 0.5),
                q25: quantile(&v, 0.25),
                q75: quantile(&v, 0.75),
            }
        })
        .collect()
}

/// Writes `results.csv`, `summary.csv` and, with `traces`, one file per run
/// under `traces/`. Returns the paths written.
pub fn write_outputs(records: &[RunRecord], dir: &Path, traces: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        let row = &r.row;
        w.write_record([
            row.point_index.to_string(),
            row.point.label(),
            row.point.x().to_string(),
            row.algorithm.to_string(),
            row.seed.to_string(),
            row.tcr.to_string(),
            row.t_total.to_string(),
            row.e_total.to_string(),
            row.v_trust.to_string(),
            row.outer_iterations.to_string(),
            row.converged.to_string(),
            row.wall_s.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(SUMMARY_HEADER)?;
    for s in summarize(records) {
        w.write_record([
            s.point_index.to_string(),
            s.point.label(),
            s.point.x().to_string(),
            s.algorithm.to_string(),
            s.runs.to_string(),
            s.median.to_string(),
            s.q25.to_string(),
            s.q75.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    if traces {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir)?;
        for r in records {
            let name = format!("{}_p{}_s{}.csv", r.row.algorithm, r.row.point_index, r.row.seed);
            let path = tdir.join(name);
            fs::write(&path, r.trace.to_csv())?;
            written.push(path);
        }
    }
    Ok(written)
}
