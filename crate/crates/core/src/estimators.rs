//! Estimators of the common correlation.
//!
//! Four routes to a-hat, with very different statistical behavior:
//!
//! * [`trinary_moment`] — the moment estimator from three-interval
//!   frequencies; root-n consistent.
//! * [`binary_mle`] — grid-plus-golden-section maximizer of the binary
//!   marginal likelihood; does not concentrate (the normalized likelihood is
//!   asymptotically flat in a), kept as the comparison baseline.
//! * [`hidden_pairs`] — disjoint-pairs squared-difference estimator on the
//!   latent values themselves (an oracle that sees the hidden sequence).
//! * [`ustat_common_corr`] — all-pairs U-statistic on an observed real
//!   cross-section; the reference estimator for the stocks pipeline.

use crate::error::{CoreError, Result};
use crate::likelihood::log_likelihood;
use crate::model::{BinarySample, LatentSample, ModelConfig, TrinarySample};
use crate::dist::StandardizedDistribution;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Which estimator produced a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    TrinaryMoment,
    BinaryMle,
    HiddenPairs,
    UStatistic,
}

impl EstimatorMethod {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorMethod::TrinaryMoment => "trinary_moment",
            EstimatorMethod::BinaryMle => "binary_mle",
            EstimatorMethod::HiddenPairs => "hidden_pairs",
            EstimatorMethod::UStatistic => "u_statistic",
        }
    }
}

impl fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One estimation outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRecord {
    pub method: EstimatorMethod,
    pub a_hat: f64,
    pub n: usize,
    /// Set when the estimator hit a boundary case (empty interval frequency,
    /// degenerate binary frequency); the value is then a convention, not an
    /// interior estimate.
    pub degenerate: bool,
    pub diagnostics: BTreeMap<String, String>,
}

impl EstimateRecord {
    /// The CSV column header matching [`EstimateRecord::csv_row`].
    pub const CSV_HEADER: &'static str = "method,a_hat,n,degenerate,note";

    /// CSV row (method, a_hat, n, degenerate, note); diagnostics joined as
    /// `key=value` pairs separated by `;`.
    pub fn csv_row(&self) -> String {
        let note = self
            .diagnostics
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{:.17e},{},{},{note}",
            self.method, self.a_hat, self.n, self.degenerate
        )
    }
}

/// The two-frequency map behind the trinary moment estimator:
/// H(u, v) = 1 - [(tau1-tau2)/(G^{-1}(u) - G^{-1}(1-v))]^2 on the admissible
/// set {0 < u < 1, 0 < v < 1, u + v != 1}, and 1 outside it.
///
/// At the population frequencies u = G((tau1-sqrt(a*)y)/sqrt(1-a*)),
/// v = 1 - G((tau2-sqrt(a*)y)/sqrt(1-a*)) it returns a* exactly, for every
/// factor value y.
fn h_map(
    u: f64,
    v: f64,
    tau1: f64,
    tau2: f64,
    g: &StandardizedDistribution,
) -> Result<(f64, bool)> {
    let admissible = u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0 && u + v != 1.0;
    if !admissible {
        return Ok((1.0, true));
    }
    let lo = g.quantile(u)?;
    let hi = g.quantile(1.0 - v)?;
    let ratio = (tau1 - tau2) / (lo - hi);
    Ok((1.0 - ratio * ratio, false))
}

/// Moment estimator from the outer-interval frequencies of a trinary sample.
///
/// a-hat = 1 - [(tau1-tau2)/(G^{-1}(abar1) - G^{-1}(1-abar3))]^2 when both
/// outer frequencies are interior and abar2 > 0; any empty interval zeroes
/// the bracket, giving a-hat = 1 with the degenerate flag set.
pub fn trinary_moment(
    sample: &TrinarySample,
    tau1: f64,
    tau2: f64,
    g: &StandardizedDistribution,
) -> Result<EstimateRecord> {
    if !(tau1 < tau2) {
        return Err(CoreError::domain(format!(
            "trinary thresholds need tau1 < tau2, got {tau1}, {tau2}"
        )));
    }
    let [u, _, v] = sample.freqs();
    trinary_moment_from_freqs(u, v, sample.n(), tau1, tau2, g)
}

/// Count-free core of [`trinary_moment`], usable with population
/// frequencies. `abar1` is the mass at or below tau1, `abar3` the mass above
/// tau2; the middle frequency is implied.
pub fn trinary_moment_from_freqs(
    abar1: f64,
    abar3: f64,
    n: usize,
    tau1: f64,
    tau2: f64,
    g: &StandardizedDistribution,
) -> Result<EstimateRecord> {
    if !(tau1 < tau2) {
        return Err(CoreError::domain(format!(
            "trinary thresholds need tau1 < tau2, got {tau1}, {tau2}"
        )));
    }
    if !(0.0..=1.0).contains(&abar1) || !(0.0..=1.0).contains(&abar3) || abar1 + abar3 > 1.0 {
        return Err(CoreError::domain(format!(
            "invalid interval frequencies ({abar1}, {abar3})"
        )));
    }
    g.validate()?;
    let (a_hat, degenerate) = h_map(abar1, abar3, tau1, tau2, g)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("abar1".to_string(), format!("{abar1:.6}"));
    diagnostics.insert("abar3".to_string(), format!("{abar3:.6}"));
    if degenerate {
        diagnostics.insert("boundary".to_string(), "empty_interval".to_string());
    }
    Ok(EstimateRecord {
        method: EstimatorMethod::TrinaryMoment,
        a_hat,
        n,
        degenerate,
        diagnostics,
    })
}

/// Search protocol for the binary maximum-likelihood estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: usize,
    pub tol: f64,
}

impl Default for SearchSpec {
    /// 191 coarse points on [0.005, 0.955] (the near-flat likelihood defeats
    /// derivative-based search), then golden-section refinement to 1e-6.
    fn default() -> Self {
        SearchSpec {
            lo: 0.005,
            hi: 0.955,
            coarse_points: 191,
            tol: 1e-6,
        }
    }
}

impl SearchSpec {
    fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi < 1.0 - 1e-3 + 1e-12) {
            return Err(CoreError::domain(format!(
                "search interval [{}, {}] must sit inside (0, 0.999]",
                self.lo, self.hi
            )));
        }
        if self.coarse_points < 3 {
            return Err(CoreError::domain(
                "need at least 3 coarse grid points".to_string(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(CoreError::domain("tolerance must be positive".to_string()));
        }
        Ok(())
    }
}

/// Maximum-likelihood estimate of the correlation from a binary sample:
/// coarse-grid argmax of log L_n followed by golden-section refinement.
///
/// A degenerate sample frequency (all zeros or all ones) still produces a
/// record — the likelihood remains well defined — but it is flagged and the
/// note records the boundary. Diagnostics always include the coarse-grid
/// flatness (max - min of n^{-1} log L_n), the headline evidence that this
/// estimator cannot concentrate.
pub fn binary_mle(
    sample: &BinarySample,
    cfg: &ModelConfig,
    search: &SearchSpec,
) -> Result<EstimateRecord> {
    search.validate()?;
    cfg.validate()?;
    let eval = |a: f64| -> Result<f64> { Ok(log_likelihood(a, sample, cfg)?.log_lik) };

    let m = search.coarse_points;
    let step = (search.hi - search.lo) / (m - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut lo_val = f64::INFINITY;
    let mut grid_vals = Vec::with_capacity(m);
    for i in 0..m {
        let a = search.lo + step * i as f64;
        let v = eval(a)?;
        grid_vals.push(v);
        if v > best.1 {
            best = (i, v);
        }
        lo_val = lo_val.min(v);
    }
    let flatness = (best.1 - lo_val) / sample.n() as f64;

    // Golden-section on the bracket around the coarse argmax.
    let mut a_lo = search.lo + step * best.0.saturating_sub(1) as f64;
    let mut a_hi = (search.lo + step * (best.0 + 1) as f64).min(search.hi);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = a_hi - INV_PHI * (a_hi - a_lo);
    let mut x2 = a_lo + INV_PHI * (a_hi - a_lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while a_hi - a_lo > search.tol {
        if f1 < f2 {
            a_lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = a_lo + INV_PHI * (a_hi - a_lo);
            f2 = eval(x2)?;
        } else {
            a_hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = a_hi - INV_PHI * (a_hi - a_lo);
            f1 = eval(x1)?;
        }
    }
    let a_hat = 0.5 * (a_lo + a_hi);
    let degenerate = sample.ones() == 0 || sample.ones() == sample.n();

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("flatness".to_string(), format!("{flatness:.6e}"));
    diagnostics.insert(
        "grid".to_string(),
        format!("[{},{}]x{}", search.lo, search.hi, m),
    );
    if degenerate {
        diagnostics.insert("boundary".to_string(), "degenerate_frequency".to_string());
    }
    Ok(EstimateRecord {
        method: EstimatorMethod::BinaryMle,
        a_hat,
        n: sample.n(),
        degenerate,
        diagnostics,
    })
}

/// Disjoint-pairs estimator on the latent sequence:
/// a-hat = 1 - n^{-1} sum_{i=1}^{floor(n/2)} (x_{2i-1} - x_{2i})^2.
///
/// Unbiased for even n since E (X_{2i-1} - X_{2i})^2 = 2(1 - a*); no
/// clipping is applied, so values outside (0,1) are possible and meaningful.
pub fn hidden_pairs(latent: &LatentSample) -> Result<EstimateRecord> {
    let n = latent.n();
    if n < 2 {
        return Err(CoreError::domain(format!(
            "need at least one pair, got n={n}"
        )));
    }
    let mut sum = 0.0;
    for i in 0..n / 2 {
        let d = latent.x[2 * i] - latent.x[2 * i + 1];
        sum += d * d;
    }
    Ok(EstimateRecord {
        method: EstimatorMethod::HiddenPairs,
        a_hat: 1.0 - sum / n as f64,
        n,
        degenerate: false,
        diagnostics: BTreeMap::new(),
    })
}

/// All-pairs U-statistic on a real cross-section:
/// a-hat = 1 - [2 C(m,2)]^{-1} sum_{i<j} (x_i - x_j)^2, computed in O(m)
/// through sum_{i<j}(x_i-x_j)^2 = m*sum(x^2) - (sum x)^2.
pub fn ustat_common_corr(x: &[f64]) -> Result<EstimateRecord> {
    let m = x.len();
    if m < 2 {
        return Err(CoreError::domain(format!(
            "need at least two values, got m={m}"
        )));
    }
    let mf = m as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for &v in x {
        s += v;
        s2 += v * v;
    }
    let pair_sum = mf * s2 - s * s; // sum over ordered pairs of (xi-xj)^2 / ... exactly sum_{i<j}
    let a_hat = 1.0 - pair_sum / (mf * (mf - 1.0));
    Ok(EstimateRecord {
        method: EstimatorMethod::UStatistic,
        a_hat,
        n: m,
        degenerate: false,
        diagnostics: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{discretize_binary, simulate_latent};
    use crate::rng::{substream_seed, UniformStream};
    use StandardizedDistribution::*;

    #[test]
    fn trinary_hand_value() {
        // Normal G, tau1=-1, tau2=1, frequencies Phi(-2) and 1-Phi(2):
        // quantile gap is (-2) - 2 = -4, so a-hat = 1 - (2/4)^2 = 0.75.
        let u = StdNormal.cdf(-2.0).unwrap();
        let v = StdNormal.sf(2.0);
        let rec = trinary_moment_from_freqs(u, v, 100, -1.0, 1.0, &StdNormal).unwrap();
        assert!((rec.a_hat - 0.75).abs() < 1e-12, "{}", rec.a_hat);
        assert!(!rec.degenerate);
    }

    #[test]
    fn trinary_plugin_identity_recovers_a_star() {
        // Population interval frequencies conditional on any factor value
        // must map back to a* exactly.
        for g in [StdNormal, Logistic, Laplace, ScaledT { df: 5.0 }] {
            for &(a_star, y) in &[(0.3, 0.0), (0.5, 1.2), (0.75, -0.4), (0.9, 2.0)] {
                let (t1, t2) = (-1.0, 1.0);
                let root = (1.0 - a_star as f64).sqrt();
                let u = g.cdf((t1 - (a_star as f64).sqrt() * y) / root).unwrap();
                let v = g.sf((t2 - (a_star as f64).sqrt() * y) / root);
                let rec = trinary_moment_from_freqs(u, v, 10, t1, t2, &g).unwrap();
                assert!(
                    (rec.a_hat - a_star).abs() < 1e-10,
                    "{g} a*={a_star} y={y}: {}",
                    rec.a_hat
                );
            }
        }
    }

    #[test]
    fn trinary_degenerate_frequencies_give_one() {
        // Empty first interval.
        let s = TrinarySample::from_cats(vec![2, 3, 3, 2]).unwrap();
        let rec = trinary_moment(&s, -1.0, 1.0, &StdNormal).unwrap();
        assert_eq!(rec.a_hat, 1.0);
        assert!(rec.degenerate);
        // Empty middle interval (u + v = 1).
        let s = TrinarySample::from_cats(vec![1, 3, 1, 3]).unwrap();
        let rec = trinary_moment(&s, -1.0, 1.0, &StdNormal).unwrap();
        assert_eq!(rec.a_hat, 1.0);
        assert!(rec.degenerate);
        // All mass in one interval.
        let s = TrinarySample::from_cats(vec![1, 1, 1]).unwrap();
        let rec = trinary_moment(&s, -1.0, 1.0, &StdNormal).unwrap();
        assert_eq!(rec.a_hat, 1.0);
        assert!(rec.degenerate);
    }

    #[test]
    fn trinary_depends_only_on_frequencies() {
        let s1 = TrinarySample::from_cats(vec![1, 2, 3, 3, 2, 1, 2, 2]).unwrap();
        let s2 = TrinarySample::from_cats(vec![2, 2, 2, 2, 1, 1, 3, 3]).unwrap();
        let r1 = trinary_moment(&s1, -0.5, 0.5, &StdNormal).unwrap();
        let r2 = trinary_moment(&s2, -0.5, 0.5, &StdNormal).unwrap();
        assert_eq!(r1.a_hat.to_bits(), r2.a_hat.to_bits());
        assert!(r1.a_hat <= 1.0 && r1.a_hat < 1.0);
    }

    #[test]
    fn trinary_never_exceeds_one() {
        let mut stream = UniformStream::new(5);
        for _ in 0..200 {
            let cats: Vec<u8> = (0..30)
                .map(|_| 1 + (stream.next_uniform() * 3.0) as u8)
                .collect();
            let s = TrinarySample::from_cats(cats).unwrap();
            let rec = trinary_moment(&s, -1.0, 1.0, &StdNormal).unwrap();
            assert!(rec.a_hat <= 1.0);
            assert_eq!(rec.a_hat == 1.0, rec.degenerate);
        }
    }

    #[test]
    fn mle_stays_in_interval_and_dominates_grid() {
        let cfg = ModelConfig::binary(0.5, 0.0, StdNormal, StdNormal).unwrap();
        let ls = simulate_latent(&cfg, 400, 21, None).unwrap();
        let bs = discretize_binary(&ls, 0.0);
        let search = SearchSpec::default();
        let rec = binary_mle(&bs, &cfg, &search).unwrap();
        assert!(rec.a_hat >= search.lo && rec.a_hat <= search.hi);
        assert!(!rec.degenerate);
        assert!(rec.diagnostics.contains_key("flatness"));

        let best = log_likelihood(rec.a_hat, &bs, &cfg).unwrap().log_lik;
        for i in 0..20 {
            let a = 0.03 + 0.045 * i as f64;
            let v = log_likelihood(a, &bs, &cfg).unwrap().log_lik;
            assert!(best >= v - 1e-6, "a={a}: {v} beats {best}");
        }
    }

    #[test]
    fn mle_handles_degenerate_frequency_without_error() {
        let cfg = ModelConfig::binary(0.5, 0.0, StdNormal, StdNormal).unwrap();
        let bs = BinarySample::from_counts(24, 24).unwrap();
        let search = SearchSpec {
            coarse_points: 25,
            ..SearchSpec::default()
        };
        let rec = binary_mle(&bs, &cfg, &search).unwrap();
        assert!(rec.degenerate);
        assert!(rec.a_hat >= search.lo && rec.a_hat <= search.hi);
    }

    #[test]
    fn mle_does_not_concentrate() {
        // The flat likelihood leaves the maximizer spread out: across seeded
        // replications the sample standard deviation stays macroscopic.
        let cfg = ModelConfig::binary(0.5, 0.0, StdNormal, StdNormal).unwrap();
        let search = SearchSpec {
            coarse_points: 49, // coarser grid, same interval: speed only
            tol: 1e-4,
            ..SearchSpec::default()
        };
        let reps = 60;
        let mut hats = Vec::with_capacity(reps);
        for r in 0..reps {
            let ls = simulate_latent(&cfg, 1000, substream_seed(31, r as u64), None).unwrap();
            let bs = discretize_binary(&ls, 0.0);
            hats.push(binary_mle(&bs, &cfg, &search).unwrap().a_hat);
        }
        let mean = hats.iter().sum::<f64>() / reps as f64;
        let var = hats.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / (reps - 1) as f64;
        assert!(
            var.sqrt() >= 0.1,
            "MLE should not concentrate: std = {}",
            var.sqrt()
        );
    }

    #[test]
    fn hidden_pairs_hand_values() {
        let constant = LatentSample {
            y: 0.0,
            yi: vec![0.0; 6],
            x: vec![0.7; 6],
        };
        assert_eq!(hidden_pairs(&constant).unwrap().a_hat, 1.0);

        let alternating = LatentSample {
            y: 0.0,
            yi: vec![0.0; 4],
            x: vec![1.0, -1.0, 1.0, -1.0],
        };
        assert_eq!(hidden_pairs(&alternating).unwrap().a_hat, -1.0);

        // Odd n: the last value is left unpaired, denominator stays n.
        let odd = LatentSample {
            y: 0.0,
            yi: vec![0.0; 3],
            x: vec![1.0, -1.0, 9.0],
        };
        assert!((hidden_pairs(&odd).unwrap().a_hat - (1.0 - 4.0 / 3.0)).abs() < 1e-15);

        let single = LatentSample {
            y: 0.0,
            yi: vec![0.0],
            x: vec![1.0],
        };
        assert!(hidden_pairs(&single).is_err());
    }

    #[test]
    fn hidden_pairs_is_unbiased_for_a_star() {
        let a_star = 0.3;
        let cfg = ModelConfig::binary(a_star, 0.0, StdNormal, StdNormal).unwrap();
        let reps = 10_000u64;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for r in 0..reps {
            let ls = simulate_latent(&cfg, 50, substream_seed(88, r), None).unwrap();
            let a = hidden_pairs(&ls).unwrap().a_hat;
            sum += a;
            sumsq += a * a;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let stderr = (var / reps as f64).sqrt();
        assert!(
            (mean - a_star).abs() < 3.0 * stderr,
            "mean {mean} vs {a_star} (3 stderr = {})",
            3.0 * stderr
        );
    }

    #[test]
    fn ustat_hand_values_and_oracle() {
        let constant = vec![2.5; 10];
        assert_eq!(ustat_common_corr(&constant).unwrap().a_hat, 1.0);
        assert_eq!(ustat_common_corr(&[1.0, -1.0]).unwrap().a_hat, -1.0);
        assert!(ustat_common_corr(&[0.0]).is_err());

        // O(m) formula against the brute-force double loop.
        let mut stream = UniformStream::new(63);
        let x: Vec<f64> = (0..63).map(|_| 4.0 * stream.next_uniform() - 2.0).collect();
        let fast = ustat_common_corr(&x).unwrap().a_hat;
        let m = x.len() as f64;
        let mut brute = 0.0;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                brute += (x[i] - x[j]) * (x[i] - x[j]);
            }
        }
        let brute = 1.0 - brute / (m * (m - 1.0));
        assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");
    }

    #[test]
    fn ustat_invariances() {
        let x = [0.3, -1.2, 0.8, 2.1, -0.4];
        let base = ustat_common_corr(&x).unwrap().a_hat;
        let permuted = [2.1, 0.3, -0.4, -1.2, 0.8];
        assert!((ustat_common_corr(&permuted).unwrap().a_hat - base).abs() < 1e-14);
        let shifted: Vec<f64> = x.iter().map(|v| v + 17.5).collect();
        assert!((ustat_common_corr(&shifted).unwrap().a_hat - base).abs() < 1e-9);
    }

    #[test]
    fn record_csv_row_shape() {
        let rec = ustat_common_corr(&[1.0, -1.0]).unwrap();
        let row = rec.csv_row();
        assert!(row.starts_with("u_statistic,"), "{row}");
        assert!(row.contains(",2,false,"), "{row}");
    }
}
