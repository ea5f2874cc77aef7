//! `fluidtag`: joint design of self-tuning UHF RFID sensor antennas with
//! microfluidic channels.
//!
//! Subcommands wire the library end to end: score one candidate
//! (`evaluate`), search the joint parameter space (`optimize`), sweep the
//! sensor response over fill (`sweep`), fit trend lines (`fit`), estimate
//! reading range (`range`), and join simulated against measured metrics
//! (`compare`).
//!
//! Exit codes: 0 success, 1 error, 2 gated/infeasible/empty result.

mod config;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fluidtag_core::analysis::{breakdown_metrics, compare, fit_cubic, reading_range, sweep};
use fluidtag_core::fitness::FitnessBreakdown;
use fluidtag_core::geometry::ParameterVector;
use fluidtag_core::optimizer::{optimize, run_round, EvalContext, SearchResult};
use fluidtag_core::report::{
    fmt_sig, read_metrics_csv, read_xy_csv, to_json_pretty, write_breakdown_csv,
    write_comparison_csv, write_grid_csv, write_metrics_csv, write_sweep_csv, SearchSummary,
};

use crate::config::{load_config, LoadedConfig};

#[derive(Parser)]
#[command(
    name = "fluidtag",
    version,
    about = "Joint antenna-microfluidic design toolkit"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for report files (default: config output_dir, then `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Cap the evaluation thread pool (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GeometryArgs {
    /// Gamma-match side parallel to the IC (mm).
    #[arg(long)]
    a1: f64,
    /// Gamma-match side perpendicular to the IC (mm).
    #[arg(long)]
    a2: f64,
    /// Microfluidic channel width (mm).
    #[arg(long)]
    c2: f64,
}

impl GeometryArgs {
    fn vector(&self) -> ParameterVector {
        ParameterVector::new(self.a1, self.a2, self.c2)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score one candidate geometry and print its breakdown row.
    #[command(allow_negative_numbers = true)]
    Evaluate(GeometryArgs),
    /// Run the two-step hierarchical grid search and export the audit trail.
    Optimize,
    /// Sweep the sensor response over the fill range.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Number of fill points, endpoints included.
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Fit a cubic trend line to two columns of a CSV file.
    Fit {
        /// Input CSV with a header row.
        input: PathBuf,
        /// Column holding the abscissa.
        #[arg(long, default_value = "fill")]
        x_col: String,
        /// Column holding the ordinate.
        #[arg(long, default_value = "delta_code")]
        y_col: String,
    },
    /// Estimate the free-space reading range from a realized gain.
    #[command(allow_negative_numbers = true)]
    Range {
        /// Realized gain of the tag (dBi).
        #[arg(long)]
        gain_dbi: f64,
        /// Reader EIRP (W).
        #[arg(long, default_value_t = 1.0)]
        eirp_w: f64,
        /// Chip read sensitivity (dBm); no default on purpose.
        #[arg(long)]
        sens_dbm: f64,
        /// Reader-tag polarization loss factor.
        #[arg(long, default_value_t = 0.5)]
        pol_loss: f64,
    },
    /// Join simulated and measured metric files and recompute differences.
    Compare {
        /// Simulated metrics CSV (`metric,value[,spread]`).
        #[arg(long)]
        sim: PathBuf,
        /// Measured metrics CSV (`metric,value[,spread]`).
        #[arg(long)]
        meas: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure thread pool")?;
    }

    match &cli.command {
        Command::Evaluate(geometry) => cmd_evaluate(&cli, geometry.vector()),
        Command::Optimize => cmd_optimize(&cli),
        Command::Sweep { geometry, points } => cmd_sweep(&cli, geometry.vector(), *points),
        Command::Fit {
            input,
            x_col,
            y_col,
        } => cmd_fit(&cli, input, x_col, y_col),
        Command::Range {
            gain_dbi,
            eirp_w,
            sens_dbm,
            pol_loss,
        } => cmd_range(&cli, *gain_dbi, *eirp_w, *sens_dbm, *pol_loss),
        Command::Compare { sim, meas } => cmd_compare(&cli, sim, meas),
    }
}

fn require_config(cli: &Cli) -> Result<LoadedConfig> {
    let path = cli
        .config
        .as_deref()
        .context("this command needs --config <PATH>")?;
    load_config(path)
}

fn out_dir(cli: &Cli, loaded: Option<&LoadedConfig>) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| loaded.and_then(|l| l.config.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn eval_context(loaded: &LoadedConfig) -> EvalContext<'_> {
    EvalContext {
        provider: loaded.provider.as_ref(),
        fixed: loaded.config.fixed_geometry,
        fluid: loaded.config.fluid,
        profile: loaded.config.ic,
        frequency_hz: loaded.config.frequency_hz,
    }
}

fn point_str(v: &ParameterVector) -> String {
    format!("({}, {}, {})", fmt_sig(v.a1), fmt_sig(v.a2), fmt_sig(v.c2))
}

/// Console row rounded to eyeball-comparison precision (two decimals for the
/// fitness terms, one for sensitivity and gains).
fn print_breakdown(point: &ParameterVector, b: &FitnessBreakdown) {
    println!(
        "{:<16} {:>5} {:>5} {:>5} {:>5} {:>5} {:>7} {:>8} {:>9} {:>9} {:>8}",
        "geometry_mm",
        "F",
        "f1",
        "f2",
        "f3",
        "s_u",
        "s_u-s_l",
        "S_1/mg",
        "Gt0_dBi",
        "GtF_dBi",
        "dGt_dB"
    );
    println!(
        "{:<16} {:>5.2} {:>5.2} {:>5.2} {:>5.2} {:>5} {:>7} {:>8.1} {:>9.1} {:>9.1} {:>8.1}",
        point_str(point),
        b.fitness,
        b.f1,
        b.f2,
        b.f3,
        b.code_empty,
        b.code_span(),
        b.sensitivity,
        b.gain_empty_dbi,
        b.gain_full_dbi,
        b.delta_gain_db(),
    );
}

fn cmd_evaluate(cli: &Cli, v: ParameterVector) -> Result<ExitCode> {
    let loaded = require_config(cli)?;
    let dir = out_dir(cli, Some(&loaded))?;
    let ctx = eval_context(&loaded);

    // A single-point round reuses the search scoring path: pinned
    // normalizers reproduce externally normalized rows, otherwise the point
    // normalizes itself.
    let round = run_round(
        &ctx,
        1,
        vec![v],
        &loaded.config.weights,
        &loaded.config.gates,
        &loaded.norm_policy,
        None,
    )?;
    let outcome = &round.outcomes[0];
    let breakdown = match (&outcome.breakdown, &outcome.error) {
        (Some(b), _) => *b,
        (None, err) => anyhow::bail!("{}", err.as_deref().unwrap_or("evaluation failed")),
    };

    print_breakdown(&v, &breakdown);

    let csv = dir.join("breakdown.csv");
    write_breakdown_csv(File::create(&csv)?, &v, &breakdown)?;
    let metrics = dir.join("metrics.csv");
    write_metrics_csv(File::create(&metrics)?, &breakdown_metrics(&breakdown))?;
    eprintln!("wrote {} and {}", csv.display(), metrics.display());

    Ok(if breakdown.fitness > 0.0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_optimize(cli: &Cli) -> Result<ExitCode> {
    let loaded = require_config(cli)?;
    let dir = out_dir(cli, Some(&loaded))?;
    let ctx = eval_context(&loaded);

    let result = optimize(
        &ctx,
        &loaded.grid_spec,
        &loaded.config.weights,
        &loaded.config.gates,
        &loaded.norm_policy,
    )?;

    write_search_reports(&dir, &loaded, &result)?;

    for round in &result.rounds {
        let status = match &round.incumbent {
            Some(inc) => format!(
                "incumbent {} fitness {}",
                point_str(&inc.point),
                fmt_sig(inc.breakdown.fitness)
            ),
            None => "no incumbent (all points gated or failed)".to_string(),
        };
        println!(
            "round {}: {} points, {}",
            round.round,
            round.outcomes.len(),
            status
        );
    }
    match &result.incumbent {
        Some(best) => {
            println!(
                "best: {} fitness {} (round {})",
                point_str(&best.point),
                fmt_sig(best.breakdown.fitness),
                best.from_round
            );
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("best: none");
            Ok(ExitCode::from(2))
        }
    }
}

fn write_search_reports(dir: &Path, loaded: &LoadedConfig, result: &SearchResult) -> Result<()> {
    for round in &result.rounds {
        let path = dir.join(format!("grid_round{}.csv", round.round));
        write_grid_csv(File::create(&path)?, &round.outcomes)?;
    }
    let summary = SearchSummary::new(
        result,
        loaded.config.frequency_hz,
        loaded.config.materials,
        loaded.config.weights,
        loaded.config.gates,
        loaded.grid_spec,
        loaded.norm_policy,
    );
    fs::write(dir.join("summary.json"), to_json_pretty(&summary))?;
    eprintln!("wrote search reports to {}", dir.display());
    Ok(())
}

fn cmd_sweep(cli: &Cli, v: ParameterVector, points: usize) -> Result<ExitCode> {
    let loaded = require_config(cli)?;
    let dir = out_dir(cli, Some(&loaded))?;

    let curve = sweep(
        loaded.provider.as_ref(),
        &v,
        &loaded.config.fixed_geometry,
        &loaded.config.fluid,
        &loaded.config.ic,
        loaded.config.frequency_hz,
        points,
    )?;
    let path = dir.join("sweep.csv");
    write_sweep_csv(File::create(&path)?, &curve)?;
    println!(
        "wrote {} fill points to {}",
        curve.points.len(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(cli: &Cli, input: &Path, x_col: &str, y_col: &str) -> Result<ExitCode> {
    let points = read_xy_csv(
        BufReader::new(
            File::open(input).with_context(|| format!("cannot open {}", input.display()))?,
        ),
        &input.display().to_string(),
        x_col,
        y_col,
    )?;
    let fit = fit_cubic(&points)?;

    let dir = out_dir(cli, None)?;
    let path = dir.join("fit.json");
    fs::write(&path, to_json_pretty(&fit))?;

    let [c0, c1, c2, c3] = fit.coefficients;
    println!(
        "cubic fit: y = {} + {} x + {} x^2 + {} x^3",
        fmt_sig(c0),
        fmt_sig(c1),
        fmt_sig(c2),
        fmt_sig(c3)
    );
    println!("r_squared = {}", fmt_sig(fit.r_squared));
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_range(
    cli: &Cli,
    gain_dbi: f64,
    eirp_w: f64,
    sens_dbm: f64,
    pol_loss: f64,
) -> Result<ExitCode> {
    // Frequency comes from the config when one is given; the default UHF
    // channel otherwise.
    let frequency_hz = match &cli.config {
        Some(path) => load_config(path)?.config.frequency_hz,
        None => fluidtag_core::em::DEFAULT_FREQUENCY_HZ,
    };
    let range_m = reading_range(gain_dbi, eirp_w, frequency_hz, sens_dbm, pol_loss)?;
    println!("range_m = {}", fmt_sig(range_m));
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(cli: &Cli, sim: &Path, meas: &Path) -> Result<ExitCode> {
    let read = |path: &Path| -> Result<_> {
        Ok(read_metrics_csv(
            BufReader::new(
                File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
            ),
            &path.display().to_string(),
        )?)
    };
    let simulated = read(sim)?;
    let measured = read(meas)?;
    let rows = compare(&simulated, &measured);

    let dir = out_dir(cli, None)?;
    let path = dir.join("comparison.csv");
    write_comparison_csv(File::create(&path)?, &rows)?;

    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_else(|| "-".to_string());
    println!(
        "{:<22} {:>12} {:>10} {:>12} {:>12}",
        "metric", "measured", "spread", "simulated", "diff"
    );
    for r in &rows {
        println!(
            "{:<22} {:>12} {:>10} {:>12} {:>12}",
            r.metric,
            opt(r.measured),
            opt(r.spread),
            opt(r.simulated),
            opt(r.difference)
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}
