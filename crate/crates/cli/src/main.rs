//! `tcr`: runs seeded experiments and writes result tables and plot data.
//!
//! Exit status: 0 on success, 2 for bad input (config, flags, output
//! directory), 3 when a solver fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tcr_core::harness::{
    emit_plot_data, run_experiment, summarize, write_outputs, Algorithm, ExperimentConfig, PlotKind, SweepKind,
};
use tcr_core::TcrError;

#[derive(Debug, Parser)]
#[command(name = "tcr", version, about = "Trust-cost ratio experiments over seeds and parameter sweeps")]
struct Args {
    /// TOML config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds, e.g. `1,2,3` or `1..5` (inclusive).
    #[arg(long, value_parser = parse_seeds)]
    seed: Option<Seeds>,
    /// Algorithm name, comma list, or `all`.
    #[arg(long)]
    algo: Option<String>,
    /// none, bandwidth, frequency, weights or topology (default values).
    #[arg(long)]
    sweep: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Write one iteration trace per run.
    #[arg(long)]
    trace: bool,
    /// Plot data to emit after the runs: sweep or convergence. Repeatable.
    #[arg(long)]
    plot: Vec<String>,
    /// Restrict plots to one algorithm.
    #[arg(long)]
    plot_filter: Option<String>,
}

#[derive(Debug, Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(text: &str) -> Result<Seeds, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?;
            if b < a {
                return Err(format!("empty seed range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?);
        }
    }
    Ok(Seeds(out))
}

fn build_config(args: &Args) -> Result<ExperimentConfig, TcrError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| TcrError::from(e).context(format!("reading {}", path.display())))?;
            ExperimentConfig::from_toml_str(&text).map_err(|e| e.context(format!("in {}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &args.seed {
        cfg.seeds = s.0.clone();
    }
    if let Some(a) = &args.algo {
        cfg.algorithms = Algorithm::parse_selector(a)?;
    }
    if let Some(s) = &args.sweep {
        cfg.set_sweep(s.parse::<SweepKind>()?);
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.trace |= args.trace;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), TcrError> {
    let cfg = build_config(args)?;
    let kinds: Vec<PlotKind> = args.plot.iter().map(|k| k.parse()).collect::<Result<_, _>>()?;
    if let Some(f) = &args.plot_filter {
        f.parse::<Algorithm>()?;
    }
    // Fail on an unwritable directory before spending time on the runs.
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| TcrError::from(e).context(format!("creating {}", cfg.out_dir.display())))?;

    let records = run_experiment(&cfg)?;
    write_outputs(&records, &cfg.out_dir, cfg.trace)?;
    for kind in kinds {
        emit_plot_data(&records, kind, args.plot_filter.as_deref(), &cfg.out_dir.join("plots"))?;
    }

    println!("{:<12} {:<6} {:>5} {:>14} {:>14} {:>14}", "point", "algo", "runs", "tcr_median", "tcr_q25", "tcr_q75");
    for s in summarize(&records) {
        println!(
            "{:<12} {:<6} {:>5} {:>14.6} {:>14.6} {:>14.6}",
            s.point.label(),
            s.algorithm,
            s.runs,
            s.median,
            s.q25,
            s.q75
        );
    }
    println!("wrote {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("1,2,3").unwrap().0, vec![1, 2, 3]);
        assert_eq!(parse_seeds("1..5").unwrap().0, vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("2..3, 9").unwrap().0, vec![2, 3, 9]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
