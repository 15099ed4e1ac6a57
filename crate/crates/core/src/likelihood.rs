//! Marginal likelihood of the binary sequence in the correlation parameter.
//!
//! Integrating the shared factor out of the conditional Bernoulli likelihood
//! gives, after the substitution z = (factor value) - tau/sqrt(a),
//!
//! ```text
//! L_n(a) = \int exp(n F_n(z)) gamma(z + tau/sqrt(a)) dz,
//! F_n(z) = abar log(1 - G(-c_a z)) + (1 - abar) log G(-c_a z),
//! c_a    = sqrt(a / (1 - a)),
//! ```
//!
//! an integrand that is exponentially peaked in n. This module owns:
//!
//! * [`LikelihoodContext`] — the Laplace objects of that integrand: the
//!   interior maximizer z*, the entropy-form value F_n(z*), the closed-form
//!   curvature F_n''(z*), and analytic F_n / F_n' / F_n'' evaluators;
//! * [`log_likelihood`] — log L_n(a) via adaptive log-domain quadrature
//!   centered at z*, with the exact independent-observations value at a = 0;
//! * the two large-n limiting formulas: [`prop1_limit`] (the a-free limit of
//!   n^{-1} log L_n, which makes the normalized curve flat) and
//!   [`prop2_limit`] (the O(n^{-1/2}) limit of the entropy-scaled
//!   likelihood, which still varies with a);
//! * the exact law of the sufficient statistic (sum of the bits) and the
//!   Kullback-Leibler divergence between two correlation values
//!   ([`exchangeable_outcome_logprobs`], [`kl_divergence`]);
//! * [`Curve`] — the plot-ready (grid, values) carrier all drivers emit.

use crate::dist::StandardizedDistribution;
use crate::error::{CoreError, Result};
use crate::model::{BinarySample, ModelConfig};
use crate::quad::log_integral_peaked;
use crate::special::{ln_binomial, logsumexp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Laplace-analysis objects of the likelihood integrand for one (a, abar).
///
/// Requires interior values: a in (0,1) and abar in (0,1). The degenerate
/// frequencies abar in {0,1} have no interior maximizer (the integrand is
/// monotone) and are handled separately by [`log_likelihood`].
#[derive(Clone, Copy, Debug)]
pub struct LikelihoodContext {
    pub a: f64,
    pub abar: f64,
    /// c_a = sqrt(a/(1-a)).
    pub c_a: f64,
    /// Interior maximizer z* = -sqrt((1-a)/a) * G^{-1}(1-abar) of F_n.
    pub z_star: f64,
    /// F_n(z*) = abar*log(abar) + (1-abar)*log(1-abar).
    pub fn_at_zstar: f64,
    /// F_n''(z*) = -c_a^2 * p(G^{-1}(1-abar))^2 / (abar*(1-abar)) < 0.
    pub fn2_at_zstar: f64,
    noise: StandardizedDistribution,
}

impl LikelihoodContext {
    pub fn new(a: f64, abar: f64, noise: StandardizedDistribution) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(CoreError::domain(format!(
                "correlation must lie in (0,1), got {a}"
            )));
        }
        if !(abar > 0.0 && abar < 1.0) {
            return Err(CoreError::domain(format!(
                "degenerate frequency abar={abar}; the maximizer is at infinity"
            )));
        }
        noise.validate()?;
        let c_a = (a / (1.0 - a)).sqrt();
        let w_star = noise.quantile_raw(1.0 - abar);
        let z_star = -w_star / c_a;
        let p_star = noise.pdf_raw(w_star);
        let fn_at_zstar = abar * abar.ln() + (1.0 - abar) * (1.0 - abar).ln();
        let fn2_at_zstar = -c_a * c_a * p_star * p_star / (abar * (1.0 - abar));
        Ok(LikelihoodContext {
            a,
            abar,
            c_a,
            z_star,
            fn_at_zstar,
            fn2_at_zstar,
            noise,
        })
    }

    /// F_n(z) = abar*log(1 - G(-c_a z)) + (1-abar)*log G(-c_a z).
    pub fn fn_value(&self, z: f64) -> f64 {
        let w = -self.c_a * z;
        self.abar * self.noise.ln_sf(w) + (1.0 - self.abar) * self.noise.ln_cdf(w)
    }

    /// F_n'(z) = c_a * p(w) * [abar/(1-G(w)) - (1-abar)/G(w)], w = -c_a z.
    ///
    /// The density-over-probability ratios are formed in the log domain so
    /// the tails (where both factors underflow) stay finite.
    pub fn fn_d1(&self, z: f64) -> f64 {
        let w = -self.c_a * z;
        let lp = self.noise.ln_pdf(w);
        let hazard_up = (lp - self.noise.ln_sf(w)).exp(); // p/(1-G)
        let hazard_lo = (lp - self.noise.ln_cdf(w)).exp(); // p/G
        self.c_a * (self.abar * hazard_up - (1.0 - self.abar) * hazard_lo)
    }

    /// F_n''(z) = -c_a^2 { p'(w)[abar/(1-G) - (1-abar)/G]
    ///                     + p(w)^2 [abar/(1-G)^2 + (1-abar)/G^2] }.
    pub fn fn_d2(&self, z: f64) -> f64 {
        let w = -self.c_a * z;
        let lp = self.noise.ln_pdf(w);
        let hazard_up = (lp - self.noise.ln_sf(w)).exp();
        let hazard_lo = (lp - self.noise.ln_cdf(w)).exp();
        let balance = self.abar * hazard_up - (1.0 - self.abar) * hazard_lo;
        let spread = self.abar * hazard_up * hazard_up
            + (1.0 - self.abar) * hazard_lo * hazard_lo;
        // p'(w) * [..] written as score(w) * (p * [..]) to survive p
        // underflowing in the far tails.
        -self.c_a * self.c_a * (self.noise.score(w) * balance + spread)
    }
}

/// Result of one likelihood evaluation.
#[derive(Clone, Copy, Debug)]
pub struct LogLikEval {
    /// log L_n(a), natural log.
    pub log_lik: f64,
    /// True when the sample frequency is 0 or 1, where the Laplace analysis
    /// does not apply (the integrand maximum sits at infinity) and the value
    /// was obtained by the generic widening quadrature instead.
    pub degenerate_abar: bool,
}

/// log L_n(a) for a binary sample under a binary-threshold config.
///
/// a = 0 is the exact independent-observations limit; a in (0,1) is the
/// factor integral; a >= 1 (c_a unbounded) is a domain error.
pub fn log_likelihood(a: f64, sample: &BinarySample, cfg: &ModelConfig) -> Result<LogLikEval> {
    cfg.validate()?;
    let tau = cfg.binary_tau()?;
    log_likelihood_counts(a, sample.n(), sample.ones(), tau, cfg.noise, cfg.factor)
}

/// Count-level core: the likelihood depends on the bits only through
/// (n, number of ones) by exchangeability.
fn log_likelihood_counts(
    a: f64,
    n: usize,
    ones: usize,
    tau: f64,
    noise: StandardizedDistribution,
    factor: StandardizedDistribution,
) -> Result<LogLikEval> {
    if !(0.0..1.0).contains(&a) {
        return Err(CoreError::domain(format!(
            "correlation must lie in [0,1), got {a}"
        )));
    }
    if n == 0 {
        return Err(CoreError::domain("empty sample".to_string()));
    }
    let nf = n as f64;
    let abar = ones as f64 / nf;
    let degenerate = ones == 0 || ones == n;

    if a == 0.0 {
        // Independent observations: L = (1-G(tau))^{n*abar} G(tau)^{n*(1-abar)}.
        let log_lik = nf * (abar * noise.ln_sf(tau) + (1.0 - abar) * noise.ln_cdf(tau));
        return Ok(LogLikEval {
            log_lik,
            degenerate_abar: degenerate,
        });
    }

    let c_a = (a / (1.0 - a)).sqrt();
    let shift = tau / a.sqrt();

    // Non-smooth points of the integrand in z: factor kinks live at
    // z + shift = k, noise kinks at -c_a z = k.
    let mut breaks: Vec<f64> = Vec::new();
    breaks.extend(factor.density_kinks().iter().map(|k| k - shift));
    breaks.extend(noise.density_kinks().iter().map(|k| -k / c_a));

    if degenerate {
        // F_n is monotone; the product with the factor density peaks where
        // the factor's bulk meets the survival/cdf shoulder. Start the scan
        // at the factor bulk with a generous scale and let the engine widen.
        let log_f = |z: f64| {
            let w = -c_a * z;
            let fnv = if ones == 0 {
                noise.ln_cdf(w)
            } else {
                noise.ln_sf(w)
            };
            nf * fnv + factor.ln_pdf(z + shift)
        };
        let log_lik = log_integral_peaked(-shift, (1.0 / c_a).max(1.0), &breaks, log_f)?;
        return Ok(LogLikEval {
            log_lik,
            degenerate_abar: true,
        });
    }

    let ctx = LikelihoodContext::new(a, abar, noise)?;
    let scale = (-nf * ctx.fn2_at_zstar).sqrt().recip();
    let log_f = |z: f64| nf * ctx.fn_value(z) + factor.ln_pdf(z + shift);
    let log_lik = log_integral_peaked(ctx.z_star, scale, &breaks, log_f)?;
    Ok(LogLikEval {
        log_lik,
        degenerate_abar: false,
    })
}

/// n^{-1} log L_n over a grid of correlation values.
pub fn normalized_loglik_curve(
    sample: &BinarySample,
    cfg: &ModelConfig,
    grid: &[f64],
) -> Result<Curve> {
    cfg.validate()?;
    let tau = cfg.binary_tau()?;
    let nf = sample.n() as f64;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&a| {
            log_likelihood_counts(a, sample.n(), sample.ones(), tau, cfg.noise, cfg.factor)
                .map(|e| e.log_lik / nf)
        })
        .collect::<Result<_>>()?;
    Curve::new(
        grid.to_vec(),
        values,
        CurveMeta {
            kind: CurveKind::LogLik,
            n: sample.n(),
            seed: None,
        },
    )
}

/// The a-free limit of n^{-1} log L_n conditional on a factor value y:
/// q log q + (1-q) log(1-q) with q = 1 - G((tau - sqrt(a*) y)/sqrt(1-a*)).
pub fn prop1_limit(
    a_star: f64,
    y: f64,
    tau: f64,
    noise: &StandardizedDistribution,
) -> Result<f64> {
    if !(a_star > 0.0 && a_star < 1.0) {
        return Err(CoreError::domain(format!(
            "a_star must lie in (0,1), got {a_star}"
        )));
    }
    noise.validate()?;
    let c = (tau - a_star.sqrt() * y) / (1.0 - a_star).sqrt();
    let q = noise.sf(c);
    Ok(q * q.ln() + (1.0 - q) * (1.0 - q).ln())
}

/// L_n(a) * exp(-n [abar log abar + (1-abar) log(1-abar)]): the likelihood
/// with its entropy-rate peak factor removed, which stays O(n^{-1/2}).
pub fn scaled_likelihood(a: f64, sample: &BinarySample, cfg: &ModelConfig) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(CoreError::domain(format!(
            "scaled likelihood needs a in (0,1), got {a}"
        )));
    }
    let abar = sample.abar();
    if !(abar > 0.0 && abar < 1.0) {
        return Err(CoreError::domain(format!(
            "scaled likelihood undefined at degenerate frequency {abar}"
        )));
    }
    let eval = log_likelihood(a, sample, cfg)?;
    let nf = sample.n() as f64;
    let entropy_peak = nf * (abar * abar.ln() + (1.0 - abar) * (1.0 - abar).ln());
    Ok((eval.log_lik - entropy_peak).exp())
}

/// Scaled-likelihood values over a grid of correlation values.
pub fn scaled_lik_curve(sample: &BinarySample, cfg: &ModelConfig, grid: &[f64]) -> Result<Curve> {
    cfg.validate()?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&a| scaled_likelihood(a, sample, cfg))
        .collect::<Result<_>>()?;
    Curve::new(
        grid.to_vec(),
        values,
        CurveMeta {
            kind: CurveKind::ScaledLik,
            n: sample.n(),
            seed: None,
        },
    )
}

/// The limiting value of [`scaled_likelihood`] conditional on a factor value
/// y, to O(n^{-1}):
///
/// ```text
/// sqrt((1-a)/a) * gamma(z*(c) + tau/sqrt(a))
///              * sqrt(2 pi (1-G(c)) G(c) / (n p(c)^2)),
/// c = (tau - sqrt(a*) y)/sqrt(1-a*),   z*(c) = -c sqrt((1-a)/a).
/// ```
pub fn prop2_limit(
    a: f64,
    a_star: f64,
    y: f64,
    tau: f64,
    n: usize,
    noise: &StandardizedDistribution,
    factor: &StandardizedDistribution,
) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) || !(a_star > 0.0 && a_star < 1.0) {
        return Err(CoreError::domain(format!(
            "correlations must lie in (0,1), got a={a}, a_star={a_star}"
        )));
    }
    if n == 0 {
        return Err(CoreError::domain("n must be at least 1".to_string()));
    }
    noise.validate()?;
    factor.validate()?;
    let c = (tau - a_star.sqrt() * y) / (1.0 - a_star).sqrt();
    let inv_c_a = ((1.0 - a) / a).sqrt();
    let z_star = -c * inv_c_a;
    let g = noise.cdf_raw(c);
    let sf = noise.sf(c);
    let p = noise.pdf_raw(c);
    let gamma_at = factor.pdf_raw(z_star + tau / a.sqrt());
    Ok(inv_c_a * gamma_at * (2.0 * std::f64::consts::PI * sf * g / (n as f64 * p * p)).sqrt())
}

/// log q_k for k = 0..n, where q_k is the probability of any one fixed
/// binary sequence with k ones. The sufficient-statistic law is then
/// P(sum = k) = C(n,k) q_k, and sum_k C(n,k) q_k = 1.
pub fn exchangeable_outcome_logprobs(a: f64, n: usize, cfg: &ModelConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let tau = cfg.binary_tau()?;
    if n == 0 {
        return Err(CoreError::domain("n must be at least 1".to_string()));
    }
    (0..=n)
        .into_par_iter()
        .map(|k| {
            log_likelihood_counts(a, n, k, tau, cfg.noise, cfg.factor).map(|e| e.log_lik)
        })
        .collect()
}

/// Kullback-Leibler divergence between the binary-observation laws at a1 and
/// a2: sum_k C(n,k) q_k(a1) [log q_k(a1) - log q_k(a2)].
///
/// Both outcome laws are renormalized (they sum to one up to quadrature
/// error), which keeps the Gibbs inequality exact: the result is >= 0 by
/// construction, and 0 when a1 = a2.
pub fn kl_divergence(a1: f64, a2: f64, n: usize, cfg: &ModelConfig) -> Result<f64> {
    let lq1 = exchangeable_outcome_logprobs(a1, n, cfg)?;
    let lq2 = exchangeable_outcome_logprobs(a2, n, cfg)?;
    let n_u64 = n as u64;
    let lp1: Vec<f64> = lq1
        .iter()
        .enumerate()
        .map(|(k, &lq)| ln_binomial(n_u64, k as u64) + lq)
        .collect();
    let lp2: Vec<f64> = lq2
        .iter()
        .enumerate()
        .map(|(k, &lq)| ln_binomial(n_u64, k as u64) + lq)
        .collect();
    let z1 = logsumexp(&lp1);
    let z2 = logsumexp(&lp2);
    let kl = lp1
        .iter()
        .zip(&lp2)
        .map(|(&l1, &l2)| (l1 - z1).exp() * ((l1 - z1) - (l2 - z2)))
        .sum::<f64>();
    // Gibbs guarantees nonnegativity of the exact sum; clamp the sub-epsilon
    // negative dust that float summation can leave at a1 == a2.
    Ok(kl.max(0.0))
}

/// Which quantity a [`Curve`] carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    #[serde(rename = "log-lik")]
    LogLik,
    #[serde(rename = "scaled-lik")]
    ScaledLik,
    #[serde(rename = "limit")]
    Limit,
}

impl CurveKind {
    pub fn label(&self) -> &'static str {
        match self {
            CurveKind::LogLik => "log-lik",
            CurveKind::ScaledLik => "scaled-lik",
            CurveKind::Limit => "limit",
        }
    }
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Labels attached to a curve: what it is, the sample size behind it, and
/// the seed that produced the sample (absent for limit curves and averaged
/// curves).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub kind: CurveKind,
    pub n: usize,
    pub seed: Option<u64>,
}

/// A function of the correlation parameter sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    grid: Vec<f64>,
    values: Vec<f64>,
    pub meta: CurveMeta,
}

impl Curve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(CoreError::domain(format!(
                "curve grid/value length mismatch: {} vs {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.is_empty() {
            return Err(CoreError::domain("empty curve grid".to_string()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoreError::domain(
                "curve grid must be strictly increasing".to_string(),
            ));
        }
        Ok(Curve { grid, values, meta })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// A copy with every value passed through `f` (e.g. unit conversion);
    /// the grid and labels are untouched.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Curve {
        Curve {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            meta: self.meta,
        }
    }

    /// Largest value minus smallest value: the flatness diagnostic.
    pub fn value_span(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// The CSV column header shared by every curve row.
    pub const CSV_HEADER: &'static str = "a,value,kind,n,seed";

    /// CSV rows (a, value, kind, n, seed); the seed field is empty for
    /// curves not tied to one sample.
    pub fn write_csv(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        self.write_rows(w)
    }

    /// Data rows only, for files that stack several curves under one header.
    pub fn write_rows(&self, w: &mut dyn Write) -> Result<()> {
        let seed = self
            .meta
            .seed
            .map(|s| s.to_string())
            .unwrap_or_default();
        for (a, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{a},{v:.17e},{},{},{seed}", self.meta.kind, self.meta.n)?;
        }
        Ok(())
    }
}
