//! Command-line driver for the latent-threshold correlation toolkit.
//!
//! Every run is reproducible from its output alone: each output begins with
//! `#` comment lines carrying the tool version, the fully resolved
//! configuration as JSON, and the seed. Data goes to `--out` or standard
//! output; diagnostics go to standard error. Exit codes: 0 success, 1 usage
//! or input error, 2 numeric failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use latent_corr::dist::{check_regularity, moment_check, RegularityOptions};
use latent_corr::error::{CoreError, Result};
use latent_corr::estimators::{
    binary_mle, hidden_pairs, trinary_moment, ustat_common_corr, EstimateRecord, SearchSpec,
};
use latent_corr::experiments::{
    curve_experiment, kl_curve, loglog_slope, mc_error_sweep, with_workers, CaseId, CaseSpec,
    ExperimentConfig, MCResult,
};
use latent_corr::likelihood::CurveKind;
use latent_corr::model::{
    discretize_binary, discretize_trinary, simulate_latent, write_binary_csv, write_trinary_csv,
};
use latent_corr::stocks::{
    daily_estimates, ingest_prices, log_returns, qq_data, rolling_standardize, synthetic_panel,
    write_daily_csv, write_qq_csv, StandardizedPanel, DAILY_TAU, DAILY_TAU1, DAILY_TAU2,
};
use latent_corr::StandardizedDistribution;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "latent-corr",
    version,
    about = "Likelihood analysis and estimation for the latent-threshold common-correlation model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file (keys: case, n_list, reps, seed, grid, output_path);
    /// explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for replication-parallel experiments (default: the
    /// LATENT_CORR_WORKERS environment variable, then all cores). Never
    /// changes results, only wall time.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one latent sample and its discretized sequence as CSV.
    Simulate(SimulateArgs),
    /// Normalized log-likelihood curves: per seed, averaged, and limiting.
    LoglikCurve(LoglikCurveArgs),
    /// Scaled likelihood curves: per seed, averaged, and limiting.
    ScaledLikCurve(CurveCmdArgs),
    /// Estimate the common correlation on one simulated sample.
    Estimate(EstimateArgs),
    /// Mean absolute error of the trinary estimator across sample sizes.
    McSweep(McArgs),
    /// Log-log OLS slope of an error-sweep CSV (file or piped standard input).
    Slope(SlopeArgs),
    /// KL divergence between two correlation values across sample sizes.
    KlCurve(KlArgs),
    /// Price-panel pipeline: ingest, per-date estimates, Q-Q export.
    Stocks(StocksArgs),
    /// Moment and smoothness report for the distribution toolkit.
    CheckDist(CheckDistArgs),
}

/// Distribution family selector for custom settings.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Family {
    Normal,
    Logistic,
    Laplace,
    Gumbel,
    ScaledT,
}

impl Family {
    fn to_dist(self, df: f64) -> Result<StandardizedDistribution> {
        Ok(match self {
            Family::Normal => StandardizedDistribution::StdNormal,
            Family::Logistic => StandardizedDistribution::Logistic,
            Family::Laplace => StandardizedDistribution::Laplace,
            Family::Gumbel => StandardizedDistribution::Gumbel,
            Family::ScaledT => StandardizedDistribution::scaled_t(df)?,
        })
    }
}

/// Model-setting flags shared by the simulation-driven subcommands.
#[derive(Args, Debug, Clone)]
struct CaseArgs {
    /// Benchmark preset 1, 2 or 3 (default 1); its distributions win over
    /// --noise/--factor with a warning.
    #[arg(long)]
    case: Option<u8>,

    /// Noise family for a custom setting.
    #[arg(long, value_enum)]
    noise: Option<Family>,

    /// Factor family for a custom setting.
    #[arg(long, value_enum)]
    factor: Option<Family>,

    /// Degrees of freedom whenever a scaled-t family is selected.
    #[arg(long, default_value_t = 5.0)]
    df: f64,

    /// True correlation used for simulation.
    #[arg(long)]
    a_star: Option<f64>,

    /// Binary threshold.
    #[arg(long)]
    tau: Option<f64>,

    /// Lower trinary threshold.
    #[arg(long)]
    tau1: Option<f64>,

    /// Upper trinary threshold.
    #[arg(long)]
    tau2: Option<f64>,
}

impl CaseArgs {
    fn resolve(&self, file_case: Option<u8>) -> Result<CaseSpec> {
        let case_index = self.case.or(file_case);
        let mut spec = match case_index {
            Some(i) => {
                if self.noise.is_some() || self.factor.is_some() {
                    eprintln!("warning: --case {i} preset overrides --noise/--factor");
                }
                CaseSpec::preset(CaseId::from_index(i)?)
            }
            None if self.noise.is_some() || self.factor.is_some() => {
                let mut s = CaseSpec::preset(CaseId::Case1);
                s.case_id = None;
                if let Some(f) = self.noise {
                    s.noise = f.to_dist(self.df)?;
                }
                if let Some(f) = self.factor {
                    s.factor = f.to_dist(self.df)?;
                }
                s
            }
            None => CaseSpec::preset(CaseId::Case1),
        };
        if let Some(v) = self.a_star {
            spec.a_star = v;
        }
        if let Some(v) = self.tau {
            spec.tau = v;
        }
        if let Some(v) = self.tau1 {
            spec.tau1 = v;
        }
        if let Some(v) = self.tau2 {
            spec.tau2 = v;
        }
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Sample size.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Master seed (default 1, or the config file's seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Emit the binary discretization (the default).
    #[arg(long, conflicts_with = "trinary")]
    binary: bool,
    /// Emit the trinary discretization instead.
    #[arg(long)]
    trinary: bool,
    /// Condition on this factor value instead of drawing one.
    #[arg(long)]
    fixed_y: Option<f64>,
}

#[derive(Args, Debug)]
struct CurveCmdArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Sample size per curve.
    #[arg(long)]
    n: Option<usize>,
    /// Number of replication curves.
    #[arg(long)]
    curves: Option<usize>,
    /// Master seed (default 1, or the config file's seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Smallest grid correlation.
    #[arg(long)]
    grid_min: Option<f64>,
    /// Largest grid correlation.
    #[arg(long)]
    grid_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args, Debug)]
struct LoglikCurveArgs {
    #[command(flatten)]
    curve: CurveCmdArgs,
    /// Report base-10 logarithms instead of natural ones.
    #[arg(long)]
    log10: bool,
}

/// Which estimator to run.
#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodFlag {
    Trinary,
    Mle,
    HiddenPairs,
    Ustat,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Estimator to run on the simulated sample.
    #[arg(long, value_enum)]
    method: MethodFlag,
    /// Sample size (default 1000).
    #[arg(long)]
    n: Option<usize>,
    /// Master seed (default 1, or the config file's seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Comma-separated sample sizes, e.g. 1000,2000.
    #[arg(long)]
    ns: Option<String>,
    /// Replications per sample size.
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed (default 1, or the config file's seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SlopeArgs {
    /// Error-sweep CSV to read (default: standard input).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KlArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// First correlation value.
    #[arg(long)]
    a1: f64,
    /// Second correlation value.
    #[arg(long)]
    a2: f64,
    /// Comma-separated sample sizes.
    #[arg(long, conflicts_with = "n")]
    ns: Option<String>,
    /// Single sample size shorthand.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct StocksArgs {
    #[command(subcommand)]
    cmd: StocksCmd,
}

#[derive(Subcommand, Debug)]
enum StocksCmd {
    /// Pivot a long-format price CSV into a close-price panel.
    Ingest(StocksIngestArgs),
    /// Per-date ustat / trinary / binary-MLE estimates.
    Estimate(StocksEstimateArgs),
    /// Q-Q pairs of one date's standardized cross-section.
    Qq(StocksQqArgs),
}

/// Where a standardized panel comes from: a price CSV run through returns
/// and rolling standardization, or a synthetic single-factor panel.
#[derive(Args, Debug)]
struct PanelSource {
    /// Long-format price CSV (date,open,high,low,close,volume,Name).
    #[arg(long, required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Generate a synthetic standardized panel instead of reading prices.
    #[arg(long)]
    synthetic: bool,
    /// Synthetic panel: series per day.
    #[arg(long, default_value_t = 63)]
    m: usize,
    /// Synthetic panel: number of days.
    #[arg(long, default_value_t = 100)]
    days: usize,
    /// Synthetic panel: true correlation.
    #[arg(long, default_value_t = 0.5)]
    a_star: f64,
    /// Synthetic panel seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trailing standardization window for price data.
    #[arg(long, default_value_t = 100)]
    window: usize,
}

impl PanelSource {
    fn standardized(&self, file_seed: Option<u64>) -> Result<(StandardizedPanel, serde_json::Value)> {
        if self.synthetic {
            let seed = self.seed.or(file_seed).unwrap_or(1);
            let sp = synthetic_panel(self.m, self.days, self.a_star, seed)?;
            let resolved = json!({
                "source": "synthetic",
                "m": self.m,
                "days": self.days,
                "a_star": self.a_star,
                "seed": seed,
            });
            Ok((sp, resolved))
        } else {
            let path = self
                .input
                .as_ref()
                .ok_or_else(|| CoreError::domain("--input or --synthetic required".to_string()))?;
            let (panel, report) = ingest_prices(path)?;
            eprintln!(
                "ingested {} rows: {} dates x {} tickers ({} duplicate overwrites, {} nonpositive closes masked)",
                report.rows_read,
                panel.dates().len(),
                panel.tickers().len(),
                report.duplicate_overwrites,
                report.nonpositive_rejected
            );
            let sp = rolling_standardize(&log_returns(&panel)?, self.window)?;
            if sp.zero_std_masked > 0 {
                eprintln!("masked {} zero-deviation windows", sp.zero_std_masked);
            }
            let resolved = json!({
                "source": "prices",
                "input": path.display().to_string(),
                "window": self.window,
            });
            Ok((sp, resolved))
        }
    }
}

#[derive(Args, Debug)]
struct StocksIngestArgs {
    /// Long-format price CSV.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct StocksEstimateArgs {
    #[command(flatten)]
    source: PanelSource,
    /// Binary threshold on standardized returns.
    #[arg(long, default_value_t = DAILY_TAU)]
    tau: f64,
    /// Lower trinary threshold.
    #[arg(long, default_value_t = DAILY_TAU1)]
    tau1: f64,
    /// Upper trinary threshold.
    #[arg(long, default_value_t = DAILY_TAU2)]
    tau2: f64,
}

#[derive(Args, Debug)]
struct StocksQqArgs {
    #[command(flatten)]
    source: PanelSource,
    /// Date to export (default: the last date in the panel).
    #[arg(long)]
    date: Option<String>,
}

#[derive(Args, Debug)]
struct CheckDistArgs {
    /// Family to check (default: all five).
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Degrees of freedom for the scaled-t family.
    #[arg(long, default_value_t = 5.0)]
    df: f64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                CoreError::Numeric(_) => 2,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => ExperimentConfig::from_json(&std::fs::read_to_string(p)?),
    }
}

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("LATENT_CORR_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|e| CoreError::domain(format!("LATENT_CORR_WORKERS=`{v}`: {e}"))),
        Err(_) => Ok(None),
    }
}

fn open_out(
    flag: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> Result<Box<dyn Write>> {
    let path = flag
        .clone()
        .or_else(|| config.output_path.as_ref().map(PathBuf::from));
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// The reproducibility banner every output starts with.
fn write_banner(
    w: &mut dyn Write,
    resolved: &serde_json::Value,
    seed: Option<u64>,
) -> Result<()> {
    writeln!(w, "# latent-corr {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# config: {resolved}")?;
    match seed {
        Some(s) => writeln!(w, "# seed: {s}")?,
        None => writeln!(w, "# seed: none")?,
    }
    Ok(())
}

fn parse_ns(text: &str) -> Result<Vec<usize>> {
    let ns: Vec<usize> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| CoreError::domain(format!("bad sample size `{s}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if ns.is_empty() {
        return Err(CoreError::domain("empty sample-size list".to_string()));
    }
    Ok(ns)
}

fn linspace(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 1 {
        return Err(CoreError::domain("grid needs at least one point".to_string()));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    if !(lo < hi) {
        return Err(CoreError::domain(format!(
            "grid bounds must increase, got [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + step * i as f64).collect())
}

fn resolve_grid(args: &CurveCmdArgs, config: &ExperimentConfig) -> Result<Vec<f64>> {
    if args.grid_min.is_some() || args.grid_max.is_some() || args.grid_points.is_some() {
        return linspace(
            args.grid_min.unwrap_or(0.05),
            args.grid_max.unwrap_or(0.95),
            args.grid_points.unwrap_or(19),
        );
    }
    if let Some(grid) = &config.grid {
        return Ok(grid.clone());
    }
    linspace(0.05, 0.95, 19)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.config)?;
    let workers = resolve_workers(cli.workers)?;
    let mut out = open_out(&cli.out, &config)?;

    match &cli.command {
        Command::Simulate(a) => {
            let case = a.case.resolve(config.case)?;
            let seed = a.seed.or(config.seed).unwrap_or(1);
            let trinary = a.trinary;
            let cfg = if trinary {
                case.trinary_config()?
            } else {
                case.binary_config()?
            };
            let latent = simulate_latent(&cfg, a.n, seed, a.fixed_y)?;
            let resolved = json!({
                "subcommand": "simulate",
                "case": case,
                "n": a.n,
                "seed": seed,
                "mode": if trinary { "trinary" } else { "binary" },
                "fixed_y": a.fixed_y,
            });
            write_banner(&mut *out, &resolved, Some(seed))?;
            if trinary {
                let s = discretize_trinary(&latent, case.tau1, case.tau2)?;
                write_trinary_csv(&mut *out, &latent, &s)?;
            } else {
                let s = discretize_binary(&latent, case.tau);
                write_binary_csv(&mut *out, &latent, &s)?;
            }
        }

        Command::LoglikCurve(a) => {
            run_curves(&a.curve, &config, workers, &mut *out, CurveKind::LogLik, a.log10)?;
        }

        Command::ScaledLikCurve(a) => {
            run_curves(a, &config, workers, &mut *out, CurveKind::ScaledLik, false)?;
        }

        Command::Estimate(a) => {
            let case = a.case.resolve(config.case)?;
            let n = a.n.unwrap_or(1000);
            let seed = a.seed.or(config.seed).unwrap_or(1);
            let method = a.method;
            let record: EstimateRecord = {
                let cfg = match method {
                    MethodFlag::Trinary => case.trinary_config()?,
                    _ => case.binary_config()?,
                };
                let latent = simulate_latent(&cfg, n, seed, None)?;
                match method {
                    MethodFlag::Trinary => {
                        let s = discretize_trinary(&latent, case.tau1, case.tau2)?;
                        trinary_moment(&s, case.tau1, case.tau2, &case.noise)?
                    }
                    MethodFlag::Mle => {
                        let s = discretize_binary(&latent, case.tau);
                        with_workers(workers, || binary_mle(&s, &cfg, &SearchSpec::default()))??
                    }
                    MethodFlag::HiddenPairs => hidden_pairs(&latent)?,
                    MethodFlag::Ustat => ustat_common_corr(&latent.x)?,
                }
            };
            let resolved = json!({
                "subcommand": "estimate",
                "case": case,
                "method": format!("{method:?}").to_lowercase(),
                "n": n,
                "seed": seed,
                "workers": workers,
            });
            write_banner(&mut *out, &resolved, Some(seed))?;
            writeln!(out, "{}", EstimateRecord::CSV_HEADER)?;
            writeln!(out, "{}", record.csv_row())?;
        }

        Command::McSweep(a) => {
            let case = a.case.resolve(config.case)?;
            let ns = match &a.ns {
                Some(text) => parse_ns(text)?,
                None => config
                    .n_list
                    .clone()
                    .unwrap_or_else(|| vec![1000, 1500, 2000, 2500, 3000]),
            };
            let reps = a.reps.or(config.reps).unwrap_or(2000);
            let seed = a.seed.or(config.seed).unwrap_or(1);
            let result = with_workers(workers, || mc_error_sweep(&case, &ns, reps, seed))??;
            let resolved = json!({
                "subcommand": "mc-sweep",
                "case": case,
                "ns": ns,
                "reps": reps,
                "seed": seed,
                "workers": workers,
            });
            write_banner(&mut *out, &resolved, Some(seed))?;
            result.write_csv(&mut *out)?;
        }

        Command::Slope(a) => {
            let text = match &a.input {
                Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)?,
                _ => std::io::read_to_string(std::io::stdin())?,
            };
            let result = MCResult::from_csv(&text)?;
            let slope = loglog_slope(&result)?;
            let resolved = json!({
                "subcommand": "slope",
                "input": a.input.as_ref().map(|p| p.display().to_string()),
                "rows": result.rows.len(),
            });
            write_banner(&mut *out, &resolved, None)?;
            writeln!(out, "slope")?;
            writeln!(out, "{slope:.17e}")?;
        }

        Command::KlCurve(a) => {
            let case = a.case.resolve(config.case)?;
            let ns = match (&a.ns, a.n) {
                (_, Some(n)) => vec![n],
                (Some(text), None) => parse_ns(text)?,
                (None, None) => config.n_list.clone().unwrap_or_else(|| vec![100, 1000]),
            };
            let rows = with_workers(workers, || kl_curve(&case, a.a1, a.a2, &ns))??;
            let resolved = json!({
                "subcommand": "kl-curve",
                "case": case,
                "a1": a.a1,
                "a2": a.a2,
                "ns": ns,
                "workers": workers,
            });
            write_banner(&mut *out, &resolved, None)?;
            latent_corr::experiments::write_kl_csv(&rows, &mut *out)?;
        }

        Command::Stocks(stocks) => match &stocks.cmd {
            StocksCmd::Ingest(a) => {
                let (panel, report) = ingest_prices(&a.input)?;
                eprintln!(
                    "ingested {} rows ({} duplicate overwrites, {} nonpositive closes masked)",
                    report.rows_read, report.duplicate_overwrites, report.nonpositive_rejected
                );
                let resolved = json!({
                    "subcommand": "stocks ingest",
                    "input": a.input.display().to_string(),
                    "dates": panel.dates().len(),
                    "tickers": panel.tickers().len(),
                });
                write_banner(&mut *out, &resolved, None)?;
                write!(out, "date")?;
                for t in panel.tickers() {
                    write!(out, ",{t}")?;
                }
                writeln!(out)?;
                for (d, row) in panel.dates().iter().zip(panel.close()) {
                    write!(out, "{d}")?;
                    for c in row {
                        match c {
                            Some(v) => write!(out, ",{v}")?,
                            None => write!(out, ",")?,
                        }
                    }
                    writeln!(out)?;
                }
            }
            StocksCmd::Estimate(a) => {
                let (sp, source) = a.source.standardized(config.seed)?;
                let rows = with_workers(workers, || {
                    daily_estimates(&sp, a.tau, a.tau1, a.tau2, &SearchSpec::default())
                })??;
                let resolved = json!({
                    "subcommand": "stocks estimate",
                    "source": source,
                    "tau": a.tau,
                    "tau1": a.tau1,
                    "tau2": a.tau2,
                    "workers": workers,
                });
                write_banner(&mut *out, &resolved, a.source.seed)?;
                write_daily_csv(&rows, &mut *out)?;
            }
            StocksCmd::Qq(a) => {
                let (sp, source) = a.source.standardized(config.seed)?;
                let idx = match &a.date {
                    None => sp.dates().len() - 1,
                    Some(text) => {
                        let date = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d")
                            .map_err(|e| CoreError::domain(format!("bad --date `{text}`: {e}")))?;
                        sp.find_date(date).ok_or_else(|| {
                            CoreError::domain(format!("date {date} not in the panel"))
                        })?
                    }
                };
                let row = sp.complete_row(idx).ok_or_else(|| {
                    CoreError::domain(format!(
                        "cross-section at {} has masked cells",
                        sp.dates()[idx]
                    ))
                })?;
                let pairs = qq_data(&row)?;
                let resolved = json!({
                    "subcommand": "stocks qq",
                    "source": source,
                    "date": sp.dates()[idx].to_string(),
                    "m": row.len(),
                });
                write_banner(&mut *out, &resolved, a.source.seed)?;
                write_qq_csv(&pairs, &mut *out)?;
            }
        },

        Command::CheckDist(a) => {
            let families: Vec<StandardizedDistribution> = match a.family {
                Some(f) => vec![f.to_dist(a.df)?],
                None => vec![
                    StandardizedDistribution::StdNormal,
                    StandardizedDistribution::Logistic,
                    StandardizedDistribution::Laplace,
                    StandardizedDistribution::Gumbel,
                    StandardizedDistribution::scaled_t(a.df)?,
                ],
            };
            let resolved = json!({
                "subcommand": "check-dist",
                "families": families.iter().map(|d| d.family_name()).collect::<Vec<_>>(),
                "df": a.df,
            });
            write_banner(&mut *out, &resolved, None)?;
            writeln!(
                out,
                "family,mass,mean,variance,max_cdf_roundtrip,max_quantile_roundtrip,\
                 max_abs_pdf_deriv,max_abs_d3_ln_cdf,max_abs_d3_ln_sf,tail_ratio_proxy,flagged"
            )?;
            let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
            for d in families {
                let m = moment_check(&d)?;
                let r = check_regularity(&d, &d, &grid, &RegularityOptions::default())?;
                writeln!(
                    out,
                    "{},{:.3e},{:.3e},{:.10},{:.3e},{:.3e},{:.6e},{:.6e},{:.6e},{:.6e},{}",
                    d.family_name(),
                    m.mass - 1.0,
                    m.mean,
                    m.variance,
                    m.max_cdf_roundtrip,
                    m.max_quantile_roundtrip,
                    r.max_abs_pdf_deriv,
                    r.max_abs_d3_ln_cdf,
                    r.max_abs_d3_ln_sf,
                    r.c_ratio_proxy,
                    r.flagged,
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn run_curves(
    a: &CurveCmdArgs,
    config: &ExperimentConfig,
    workers: Option<usize>,
    out: &mut dyn Write,
    kind: CurveKind,
    log10: bool,
) -> Result<()> {
    let case = a.case.resolve(config.case)?;
    let n = a.n.unwrap_or(1000);
    let curves = a.curves.unwrap_or(10);
    let seed = a.seed.or(config.seed).unwrap_or(1);
    let grid = resolve_grid(a, config)?;
    let mut set = with_workers(workers, || {
        curve_experiment(&case, kind, n, curves, &grid, seed)
    })??;
    if log10 {
        let conv = |v: f64| v / std::f64::consts::LN_10;
        set.per_seed = set.per_seed.iter().map(|c| c.map_values(conv)).collect();
        set.averaged = set.averaged.map_values(conv);
        set.limiting = set.limiting.map_values(conv);
    }
    let resolved = json!({
        "subcommand": match kind {
            CurveKind::LogLik => "loglik-curve",
            CurveKind::ScaledLik => "scaled-lik-curve",
            CurveKind::Limit => unreachable!(),
        },
        "case": case,
        "n": n,
        "curves": curves,
        "seed": seed,
        "grid": {"min": grid.first(), "max": grid.last(), "points": grid.len()},
        "log10": log10,
        "workers": workers,
    });
    write_banner(out, &resolved, Some(seed))?;
    set.write_csv(out)?;
    Ok(())
}
