//! Plot data files and a minimal SVG line chart.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::output::{quantile, summarize};
use super::RunRecord;
use crate::error::{Result, TcrError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// TCR against the sweep value, one series per algorithm.
    Sweep,
    /// Ratio estimate against outer iteration, one series per sweep point.
    Convergence,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Sweep => "sweep",
            PlotKind::Convergence => "convergence",
        }
    }
}

impl FromStr for PlotKind {
    type Err = TcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(PlotKind::Sweep),
            "convergence" => Ok(PlotKind::Convergence),
            other => Err(TcrError::InvalidConfig(format!("unknown plot kind {other:?}"))),
        }
    }
}

/// `(x, median, q25, q75)` points of one line.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

fn sweep_series(records: &[RunRecord]) -> Vec<PlotSeries> {
    let mut out: Vec<PlotSeries> = Vec::new();
    for s in summarize(records) {
        let name = s.algorithm.to_string();
        let pt = (s.point.x(), s.median, s.q25, s.q75);
        match out.iter_mut().find(|p| p.name == name) {
            Some(p) => p.points.push(pt),
            None => out.push(PlotSeries { name, points: vec![pt] }),
        }
    }
    out
}

fn convergence_series(records: &[RunRecord]) -> Vec<PlotSeries> {
    let mut keys: Vec<(usize, String)> =
        records.iter().map(|r| (r.row.point_index, format!("{} {}", r.row.algorithm, r.row.point.label()))).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(pi, name)| {
            let runs: Vec<Vec<f64>> = records
                .iter()
                .filter(|r| r.row.point_index == pi && format!("{} {}", r.row.algorithm, r.row.point.label()) == name)
                .map(|r| r.trace.y_sequence())
                .collect();
            let len = runs.iter().map(Vec::len).max().unwrap_or(0);
            let points = (0..len)
                .map(|k| {
                    // Finished runs hold their last value.
                    let mut v: Vec<f64> = runs.iter().map(|r| r[k.min(r.len() - 1)]).collect();
                    v.sort_by(f64::total_cmp);
                    (k as f64, quantile(&v, 0.5), quantile(&v, 0.25), quantile(&v, 0.75))
                })
                .collect();
            PlotSeries { name, points }
        })
        .collect()
}

/// Writes `<kind>.csv` and `<kind>.svg` for the records whose algorithm
/// name equals `filter` (all records when `None`).
pub fn emit_plot_data(records: &[RunRecord], kind: PlotKind, filter: Option<&str>, dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(TcrError::InvalidConfig("no runs to plot".into()));
    }
    let selected: Vec<RunRecord> = records
        .iter()
        .filter(|r| filter.map_or(true, |f| r.row.algorithm.name().eq_ignore_ascii_case(f)))
        .cloned()
        .collect();
    if selected.is_empty() {
        return Err(TcrError::InvalidConfig(format!("plot filter {:?} matches no runs", filter.unwrap_or_default())));
    }
    let (series, x_label, y_label) = match kind {
        PlotKind::Sweep => (sweep_series(&selected), "sweep value", "TCR"),
        PlotKind::Convergence => (convergence_series(&selected), "outer iteration", "y"),
    };
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", kind.name()));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["series", "x", "median", "q25", "q75"])?;
    for s in &series {
        for &(x, m, lo, hi) in &s.points {
            w.write_record([s.name.clone(), x.to_string(), m.to_string(), lo.to_string(), hi.to_string()])?;
        }
    }
    w.flush()?;
    let svg_path = dir.join(format!("{}.svg", kind.name()));
    fs::write(&svg_path, render_svg(&series, kind.name(), x_label, y_label))?;
    Ok(vec![csv_path, svg_path])
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of the medians with quartile whiskers. Output depends only on
/// the input values.
pub fn render_svg(series: &[PlotSeries], title: &str, x_label: &str, y_label: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, _, lo, hi) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(lo);
        y1 = y1.max(hi);
    }
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, left + pw / 2.0);
    let _ =
        writeln!(s, r#"<path d="M{left:.2},{top:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#, top + ph, left + pw);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            sx(fx),
            top + ph + 15.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            left - 5.0,
            sy(fy) + 3.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{x_label}</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, m, _, _)| format!("{:.2},{:.2}", sx(x), sy(m))).collect();
        let _ =
            writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        for &(x, m, lo, hi) in &ser.points {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                sx(x),
                sy(lo),
                sx(x),
                sy(hi)
            );
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(m));
        }
        let ly = top + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            w - right + 10.0,
            w - right + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            w - right + 35.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
