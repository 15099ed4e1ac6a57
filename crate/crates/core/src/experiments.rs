//! Seeded Monte Carlo harness: likelihood-curve ensembles, error sweeps for
//! the moment estimator, convergence-rate slopes, KL growth tables, and the
//! MLE-versus-trinary RMSE contrast. Everything is driven by one master seed
//! and per-replication substreams, so results are independent of worker
//! count and scheduling order, and every output is plot-ready CSV.

use crate::dist::StandardizedDistribution;
use crate::error::{CoreError, Result};
use crate::estimators::{binary_mle, trinary_moment, SearchSpec};
use crate::likelihood::{
    kl_divergence, normalized_loglik_curve, prop1_limit, prop2_limit, scaled_lik_curve, Curve,
    CurveKind, CurveMeta,
};
use crate::model::{discretize_binary, discretize_trinary, simulate_latent, ModelConfig};
use crate::rng::substream_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

/// Number of factor quantiles used to average a conditional limit over the
/// factor law. Deterministic quantile-grid averaging, not Monte Carlo: the
/// limiting curve carries no simulation noise of its own.
const FACTOR_QUANTILE_POINTS: usize = 10_000;

/// The three benchmark model settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
}

impl CaseId {
    pub fn label(&self) -> &'static str {
        match self {
            CaseId::Case1 => "case1",
            CaseId::Case2 => "case2",
            CaseId::Case3 => "case3",
        }
    }

    /// Numeric form used by flags and config files (1, 2, 3).
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(CaseId::Case1),
            2 => Ok(CaseId::Case2),
            3 => Ok(CaseId::Case3),
            other => Err(CoreError::domain(format!(
                "unknown case {other}; expected 1, 2 or 3"
            ))),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A full benchmark setting: distributions, true correlation and thresholds.
///
/// The three presets share a* = 0.5, binary threshold 0 and trinary
/// thresholds (-1, 1); they differ in the distribution pair:
/// case 1 normal/normal, case 2 logistic noise with normal factor, case 3
/// laplace noise with scaled-t(5) factor. Any field may be overridden for
/// custom runs, which then carry no `case_id`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub case_id: Option<CaseId>,
    pub noise: StandardizedDistribution,
    pub factor: StandardizedDistribution,
    pub a_star: f64,
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl CaseSpec {
    pub fn preset(id: CaseId) -> Self {
        let (noise, factor) = match id {
            CaseId::Case1 => (
                StandardizedDistribution::StdNormal,
                StandardizedDistribution::StdNormal,
            ),
            CaseId::Case2 => (
                StandardizedDistribution::Logistic,
                StandardizedDistribution::StdNormal,
            ),
            CaseId::Case3 => (
                StandardizedDistribution::Laplace,
                StandardizedDistribution::ScaledT { df: 5.0 },
            ),
        };
        CaseSpec {
            case_id: Some(id),
            noise,
            factor,
            a_star: 0.5,
            tau: 0.0,
            tau1: -1.0,
            tau2: 1.0,
        }
    }

    /// Name used in output files: `case1`/`case2`/`case3`, or `custom`.
    pub fn label(&self) -> &'static str {
        self.case_id.map(|id| id.label()).unwrap_or("custom")
    }

    pub fn binary_config(&self) -> Result<ModelConfig> {
        ModelConfig::binary(self.a_star, self.tau, self.noise, self.factor)
    }

    pub fn trinary_config(&self) -> Result<ModelConfig> {
        ModelConfig::trinary(self.a_star, self.tau1, self.tau2, self.noise, self.factor)
    }
}

/// Factor quantiles at plotting positions (j - 0.5)/m — the deterministic
/// stand-in for "average over the factor law".
fn factor_quantile_grid(factor: &StandardizedDistribution, m: usize) -> Result<Vec<f64>> {
    (1..=m)
        .map(|j| factor.quantile((j as f64 - 0.5) / m as f64))
        .collect()
}

/// A replication ensemble of likelihood curves plus its two summaries.
#[derive(Clone, Debug)]
pub struct CurveSet {
    /// One curve per replication; `meta.seed` holds the substream seed.
    pub per_seed: Vec<Curve>,
    /// The factor draw behind each replication, aligned with `per_seed`.
    pub ys: Vec<f64>,
    /// Pointwise mean of the per-seed curves (no seed in its meta).
    pub averaged: Curve,
    /// Conditional limit averaged over the factor law on a quantile grid.
    pub limiting: Curve,
}

impl CurveSet {
    /// All curves stacked under one header: per-seed rows carry their
    /// substream seed, the averaged and limiting rows an empty seed field
    /// (the `kind` column separates those two).
    pub fn write_csv(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "{}", Curve::CSV_HEADER)?;
        for c in &self.per_seed {
            c.write_rows(w)?;
        }
        self.averaged.write_rows(w)?;
        self.limiting.write_rows(w)?;
        Ok(())
    }
}

/// Simulate `n_curves` binary samples of size `n` under `case` (substream
/// seeds off `seed`) and evaluate either the normalized log-likelihood or
/// the scaled likelihood on `grid`, together with the replication average
/// and the factor-averaged limiting curve.
pub fn curve_experiment(
    case: &CaseSpec,
    kind: CurveKind,
    n: usize,
    n_curves: usize,
    grid: &[f64],
    seed: u64,
) -> Result<CurveSet> {
    if n_curves == 0 {
        return Err(CoreError::domain("need at least one curve".to_string()));
    }
    if grid.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(CoreError::domain(
            "curve grid must lie inside (0,1)".to_string(),
        ));
    }
    let cfg = case.binary_config()?;

    let mut per_seed = Vec::with_capacity(n_curves);
    let mut ys = Vec::with_capacity(n_curves);
    for r in 0..n_curves {
        let s = substream_seed(seed, r as u64);
        let latent = simulate_latent(&cfg, n, s, None)?;
        let sample = discretize_binary(&latent, case.tau);
        let mut curve = match kind {
            CurveKind::LogLik => normalized_loglik_curve(&sample, &cfg, grid)?,
            CurveKind::ScaledLik => scaled_lik_curve(&sample, &cfg, grid)?,
            CurveKind::Limit => {
                return Err(CoreError::domain(
                    "per-seed curves must be log-lik or scaled-lik".to_string(),
                ))
            }
        };
        curve.meta.seed = Some(s);
        per_seed.push(curve);
        ys.push(latent.y);
    }

    let averaged_values: Vec<f64> = (0..grid.len())
        .map(|i| per_seed.iter().map(|c| c.values()[i]).sum::<f64>() / n_curves as f64)
        .collect();
    let averaged = Curve::new(
        grid.to_vec(),
        averaged_values,
        CurveMeta {
            kind,
            n,
            seed: None,
        },
    )?;

    let quantiles = factor_quantile_grid(&case.factor, FACTOR_QUANTILE_POINTS)?;
    let limiting_values: Vec<f64> = match kind {
        CurveKind::LogLik => {
            // The first-order limit does not depend on a: one average,
            // repeated across the grid.
            let mut sum = 0.0;
            for &y in &quantiles {
                sum += prop1_limit(case.a_star, y, case.tau, &case.noise)?;
            }
            vec![sum / quantiles.len() as f64; grid.len()]
        }
        CurveKind::ScaledLik => grid
            .iter()
            .map(|&a| {
                let mut sum = 0.0;
                for &y in &quantiles {
                    sum += prop2_limit(a, case.a_star, y, case.tau, n, &case.noise, &case.factor)?;
                }
                Ok(sum / quantiles.len() as f64)
            })
            .collect::<Result<_>>()?,
        CurveKind::Limit => unreachable!(),
    };
    let limiting = Curve::new(
        grid.to_vec(),
        limiting_values,
        CurveMeta {
            kind: CurveKind::Limit,
            n,
            seed: None,
        },
    )?;

    Ok(CurveSet {
        per_seed,
        ys,
        averaged,
        limiting,
    })
}

/// One sample-size row of a Monte Carlo error sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCRow {
    pub case: String,
    pub n: usize,
    pub reps: usize,
    pub mean_abs_err: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Mean absolute errors of the trinary moment estimator across sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub rows: Vec<MCRow>,
}

impl MCResult {
    pub fn write_csv(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "case,n,reps,mean_abs_err,stderr,seed")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.17e},{:.17e},{}",
                r.case, r.n, r.reps, r.mean_abs_err, r.stderr, r.seed
            )?;
        }
        Ok(())
    }

    /// Parse rows from the CSV written by [`MCResult::write_csv`]; `#`
    /// comment lines and the header are skipped.
    pub fn from_csv(text: &str) -> Result<MCResult> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("case,") {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 6 {
                return Err(CoreError::format(format!(
                    "expected 6 comma-separated fields, got {}: {line}",
                    parts.len()
                )));
            }
            let parse_f = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| CoreError::format(format!("bad number {s}: {e}")))
            };
            let parse_u = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|e| CoreError::format(format!("bad count {s}: {e}")))
            };
            rows.push(MCRow {
                case: parts[0].to_string(),
                n: parse_u(parts[1])?,
                reps: parse_u(parts[2])?,
                mean_abs_err: parse_f(parts[3])?,
                stderr: parse_f(parts[4])?,
                seed: parts[5]
                    .parse::<u64>()
                    .map_err(|e| CoreError::format(format!("bad seed {}: {e}", parts[5])))?,
            });
        }
        if rows.is_empty() {
            return Err(CoreError::format("no data rows found".to_string()));
        }
        Ok(MCResult { rows })
    }
}

/// Mean and standard error of a replication vector, reduced in replication
/// order (worker-count independent by construction).
fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Mean absolute error of the trinary moment estimator at each sample size.
///
/// Replication r of sample size n runs on the doubly-derived substream
/// `substream_seed(substream_seed(seed, n), r)`, so every (n, r) cell is
/// reproducible in isolation. Replications run in parallel; the reduction
/// happens serially in replication order.
pub fn mc_error_sweep(case: &CaseSpec, ns: &[usize], reps: usize, seed: u64) -> Result<MCResult> {
    if reps < 2 {
        return Err(CoreError::domain(format!(
            "need at least 2 replications, got {reps}"
        )));
    }
    if ns.is_empty() {
        return Err(CoreError::domain("no sample sizes given".to_string()));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 4) {
        return Err(CoreError::domain(format!(
            "sample sizes must be at least 4, got {n}"
        )));
    }
    let cfg = case.trinary_config()?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let seed_n = substream_seed(seed, n as u64);
        let errs: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let latent = simulate_latent(&cfg, n, substream_seed(seed_n, r as u64), None)?;
                let sample = discretize_trinary(&latent, case.tau1, case.tau2)?;
                let rec = trinary_moment(&sample, case.tau1, case.tau2, &case.noise)?;
                Ok((rec.a_hat - case.a_star).abs())
            })
            .collect::<Result<_>>()?;
        let (mean_abs_err, stderr) = mean_and_stderr(&errs);
        rows.push(MCRow {
            case: case.label().to_string(),
            n,
            reps,
            mean_abs_err,
            stderr,
            seed,
        });
    }
    Ok(MCResult { rows })
}

/// OLS slope of log(mean_abs_err) on log(n): the empirical convergence rate.
pub fn loglog_slope(result: &MCResult) -> Result<f64> {
    let mut pts = Vec::with_capacity(result.rows.len());
    for r in &result.rows {
        if !(r.mean_abs_err > 0.0) {
            return Err(CoreError::domain(format!(
                "log-log regression needs positive errors, got {} at n={}",
                r.mean_abs_err, r.n
            )));
        }
        pts.push(((r.n as f64).ln(), r.mean_abs_err.ln()));
    }
    let mut distinct: Vec<usize> = result.rows.iter().map(|r| r.n).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(CoreError::domain(
            "need at least 2 distinct sample sizes".to_string(),
        ));
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy = pts
        .iter()
        .map(|p| (p.0 - xbar) * (p.1 - ybar))
        .sum::<f64>();
    let sxx = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum::<f64>();
    Ok(sxy / sxx)
}

/// One row of a KL growth table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRow {
    pub n: usize,
    pub a1: f64,
    pub a2: f64,
    pub kl: f64,
}

/// KL divergence between the binary-sample laws at `a1` and `a2` for each
/// sample size. Equal correlations are allowed and give exactly zero.
pub fn kl_curve(case: &CaseSpec, a1: f64, a2: f64, ns: &[usize]) -> Result<Vec<KlRow>> {
    for (name, a) in [("a1", a1), ("a2", a2)] {
        if !(a > 0.0 && a < 1.0) {
            return Err(CoreError::domain(format!(
                "{name} must lie in (0,1), got {a}"
            )));
        }
    }
    if ns.is_empty() {
        return Err(CoreError::domain("no sample sizes given".to_string()));
    }
    let cfg = case.binary_config()?;
    ns.iter()
        .map(|&n| {
            let kl = kl_divergence(a1, a2, n, &cfg)?;
            Ok(KlRow { n, a1, a2, kl })
        })
        .collect()
}

/// CSV for a KL growth table: columns (n, a1, a2, kl).
pub fn write_kl_csv(rows: &[KlRow], w: &mut dyn Write) -> Result<()> {
    writeln!(w, "n,a1,a2,kl")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.17e}", r.n, r.a1, r.a2, r.kl)?;
    }
    Ok(())
}

/// One sample-size row of the MLE-versus-trinary RMSE contrast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub case: String,
    pub n: usize,
    pub reps: usize,
    pub rmse_mle: f64,
    pub rmse_trinary: f64,
    pub seed: u64,
}

/// RMSE of the binary maximum-likelihood estimator and of the trinary
/// moment estimator on paired samples (each replication discretizes one
/// latent sample both ways). The headline contrast: trinary RMSE falls like
/// n^{-1/2}; binary-MLE RMSE does not fall.
pub fn rmse_sweep(
    case: &CaseSpec,
    ns: &[usize],
    reps: usize,
    seed: u64,
    search: &SearchSpec,
) -> Result<Vec<RmseRow>> {
    if reps < 2 {
        return Err(CoreError::domain(format!(
            "need at least 2 replications, got {reps}"
        )));
    }
    let bin_cfg = case.binary_config()?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let seed_n = substream_seed(seed, n as u64);
        let sq: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64)> {
                let latent = simulate_latent(&bin_cfg, n, substream_seed(seed_n, r as u64), None)?;
                let bin = discretize_binary(&latent, case.tau);
                let tri = discretize_trinary(&latent, case.tau1, case.tau2)?;
                let mle = binary_mle(&bin, &bin_cfg, search)?.a_hat;
                let mom = trinary_moment(&tri, case.tau1, case.tau2, &case.noise)?.a_hat;
                let (de, te) = (mle - case.a_star, mom - case.a_star);
                Ok((de * de, te * te))
            })
            .collect::<Result<_>>()?;
        let rmse_mle = (sq.iter().map(|p| p.0).sum::<f64>() / reps as f64).sqrt();
        let rmse_trinary = (sq.iter().map(|p| p.1).sum::<f64>() / reps as f64).sqrt();
        rows.push(RmseRow {
            case: case.label().to_string(),
            n,
            reps,
            rmse_mle,
            rmse_trinary,
            seed,
        });
    }
    Ok(rows)
}

/// CSV for the RMSE contrast: columns (case, n, reps, rmse_mle,
/// rmse_trinary, seed).
pub fn write_rmse_csv(rows: &[RmseRow], w: &mut dyn Write) -> Result<()> {
    writeln!(w, "case,n,reps,rmse_mle,rmse_trinary,seed")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.17e},{:.17e},{}",
            r.case, r.n, r.reps, r.rmse_mle, r.rmse_trinary, r.seed
        )?;
    }
    Ok(())
}

/// Keys accepted in a JSON experiment config; command-line flags override
/// any that are present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub case: Option<u8>,
    pub n_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| CoreError::format(format!("experiment config: {e}")))
    }
}

/// Canonical output file name: `<experiment>_<case>_<seed>.csv`.
pub fn output_name(experiment: &str, case_label: &str, seed: u64) -> String {
    format!("{experiment}_{case_label}_{seed}.csv")
}

/// Run `f` on a dedicated pool of `workers` threads (`None` uses the global
/// default). Results must not depend on the choice — replication substreams
/// and ordered reduction guarantee that, and tests assert it.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CoreError::domain(
            "worker count must be at least 1".to_string(),
        )),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CoreError::numeric(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
