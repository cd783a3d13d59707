use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use precqaoa_cli::config::{extract_overrides, ConfigError, ExperimentConfig};
use precqaoa_cli::fit::{run_fit, FitKind, FitOptions, XVariable};
use precqaoa_cli::output::{meta_path, write_csv, write_json, write_meta, Metadata};
use precqaoa_cli::{bound_run, digitize, optimal, sweep, ExitStatus};

/// Precision-error experiments for QAOA circuits.
///
/// Any config field can be overridden by a flag named after its dotted
/// path, e.g. `--noise.sigma 0.05,0.1` or `--realizations=200`.
#[derive(Parser)]
#[command(name = "precqaoa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noise-averaged objective per (n, p, sigma, eta) cell.
    Sweep(RunArgs),
    /// Measured deviation, cumulant estimate and bounds per cell.
    Bounds(RunArgs),
    /// Digitized against analog circuits over bit counts.
    Digitize(RunArgs),
    /// Fit a scaling law to a sweep or digitization CSV.
    Fit(FitArgs),
    /// Dump the Ising-ring optimizer result.
    OptimalAngles(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to a fixed name inside the config's `outputs`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV.
    csv: PathBuf,
    #[arg(long, value_enum)]
    kind: FitKind,
    #[arg(long, value_enum)]
    x: Option<XVariable>,
    #[arg(long)]
    window_min: Option<f64>,
    #[arg(long)]
    window_max: Option<f64>,
    /// Constant saturation level.
    #[arg(long)]
    saturation: Option<f64>,
    /// Sigma whose p* rows give the per-size saturation level.
    #[arg(long)]
    saturation_sigma: Option<f64>,
    /// Restrict to these sizes.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Use every p, not only the p* rows.
    #[arg(long)]
    all_p: bool,
    #[arg(long)]
    y_max: Option<f64>,
    /// Per size, stop at the first minimum of the decay (coherent revivals).
    #[arg(long)]
    initial_decay: bool,
    /// JSON output; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let (args, overrides) = extract_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    match run(cli, &overrides) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<ConfigError>().is_some() {
                ExitStatus::Config
            } else {
                ExitStatus::Failure
            };
            ExitCode::from(code as u8)
        }
    }
}

fn load(args: &RunArgs, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(&args.config, overrides)?;
    if cfg.workers > 0 {
        // Only fails when a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    Ok(cfg)
}

fn finish(path: &Path, mut meta: Metadata, rows: usize, skipped: usize, violations: Vec<String>, warnings: Vec<String>) -> Result<ExitStatus> {
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for v in &violations {
        eprintln!("violation: {v}");
    }
    meta.rows = rows;
    meta.skipped = skipped;
    let status = ExitStatus::of_run(rows, skipped, violations.len());
    meta.violations = violations;
    meta.warnings = warnings;
    write_meta(path, &meta)?;
    eprintln!("wrote {} ({} rows, {} skipped) and {}", path.display(), rows, skipped, meta_path(path).display());
    Ok(status)
}

fn run(cli: Cli, overrides: &[(String, String)]) -> Result<ExitStatus> {
    match cli.command {
        Command::Sweep(a) => {
            let cfg = load(&a, overrides)?;
            let path = a.output.clone().unwrap_or_else(|| cfg.output_path("sweep.csv"));
            let out = sweep::run_sweep(&cfg);
            write_csv(&path, &out.rows)?;
            let skipped = out.rows.iter().filter(|r| r.is_skipped()).count();
            finish(&path, Metadata::new("sweep", &cfg), out.rows.len(), skipped, out.violations, out.warnings)
        }
        Command::Bounds(a) => {
            let cfg = load(&a, overrides)?;
            let path = a.output.clone().unwrap_or_else(|| cfg.output_path("bounds.csv"));
            let out = bound_run::run_bounds(&cfg);
            write_csv(&path, &out.run.rows)?;
            let mut reports = path.as_os_str().to_owned();
            reports.push(".reports.json");
            write_json(Path::new(&reports), &out.reports)?;
            let skipped = out.run.rows.iter().filter(|r| r.is_skipped()).count();
            let run = out.run;
            finish(&path, Metadata::new("bounds", &cfg), run.rows.len(), skipped, run.violations, run.warnings)
        }
        Command::Digitize(a) => {
            let cfg = load(&a, overrides)?;
            let path = a.output.clone().unwrap_or_else(|| cfg.output_path("digitization.csv"));
            let out = digitize::run_digitization(&cfg)?;
            write_csv(&path, &out.rows)?;
            let skipped = out.rows.iter().filter(|r| r.is_skipped()).count();
            finish(&path, Metadata::new("digitize", &cfg), out.rows.len(), skipped, out.violations, out.warnings)
        }
        Command::OptimalAngles(a) => {
            let cfg = load(&a, overrides)?;
            let path = a.output.clone().unwrap_or_else(|| cfg.output_path("optimal_angles.json"));
            let out = optimal::run_optimal_angles(&cfg)?;
            write_json(&path, &out.rows)?;
            let skipped = out.rows.iter().filter(|r| !r.skipped_reason.is_empty()).count();
            finish(&path, Metadata::new("optimal-angles", &cfg), out.rows.len(), skipped, out.violations, out.warnings)
        }
        Command::Fit(f) => {
            let opts = FitOptions {
                x: f.x,
                window_min: f.window_min,
                window_max: f.window_max,
                saturation: f.saturation,
                saturation_sigma: f.saturation_sigma,
                n: f.n,
                p_star_only: f.all_p.then_some(false),
                y_max: f.y_max,
                initial_decay: f.initial_decay,
            };
            let report = run_fit(&f.csv, f.kind, &opts)?;
            match &f.output {
                Some(p) => write_json(p, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            Ok(if report.fit.is_none() {
                ExitStatus::SkipOnly
            } else {
                ExitStatus::Success
            })
        }
    }
}
