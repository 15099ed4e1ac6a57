//! The latent-threshold model and its seeded simulation.
//!
//! A sequence X_i = sqrt(1-a*) Y_i + sqrt(a*) Y with idiosyncratic noise Y_i
//! (law `noise`) and a shared factor Y (law `factor`) induces a common
//! correlation a* across the X_i. Observations are the discretizations: a
//! binary sequence A_i = 1{X_i > tau}, or a trinary one over the intervals
//! (-inf, tau1], (tau1, tau2], (tau2, inf).
//!
//! Simulation draws by quantile transform from the pinned uniform stream
//! (see [`crate::rng`]); draw order is the factor first (skipped when
//! `fixed_y` is supplied), then the noise terms in index order.

use crate::dist::StandardizedDistribution;
use crate::error::{CoreError, Result};
use crate::rng::UniformStream;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Discretization thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    Binary { tau: f64 },
    Trinary { tau1: f64, tau2: f64 },
}

/// Full model specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Common correlation a* in (0,1).
    pub a_star: f64,
    /// Threshold(s) applied to the latent sequence.
    pub thresholds: Thresholds,
    /// Law of the idiosyncratic noise Y_i (density p, CDF G).
    pub noise: StandardizedDistribution,
    /// Law of the shared factor Y (density gamma).
    pub factor: StandardizedDistribution,
}

impl ModelConfig {
    pub fn binary(
        a_star: f64,
        tau: f64,
        noise: StandardizedDistribution,
        factor: StandardizedDistribution,
    ) -> Result<Self> {
        let cfg = ModelConfig {
            a_star,
            thresholds: Thresholds::Binary { tau },
            noise,
            factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trinary(
        a_star: f64,
        tau1: f64,
        tau2: f64,
        noise: StandardizedDistribution,
        factor: StandardizedDistribution,
    ) -> Result<Self> {
        let cfg = ModelConfig {
            a_star,
            thresholds: Thresholds::Trinary { tau1, tau2 },
            noise,
            factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_star > 0.0 && self.a_star < 1.0) {
            return Err(CoreError::domain(format!(
                "a_star must lie in (0,1), got {}",
                self.a_star
            )));
        }
        match self.thresholds {
            Thresholds::Binary { tau } => {
                if !tau.is_finite() {
                    return Err(CoreError::domain("tau must be finite".to_string()));
                }
            }
            Thresholds::Trinary { tau1, tau2 } => {
                if !(tau1 < tau2) {
                    return Err(CoreError::domain(format!(
                        "trinary thresholds need tau1 < tau2, got {tau1}, {tau2}"
                    )));
                }
            }
        }
        self.noise.validate()?;
        self.factor.validate()
    }

    /// Binary threshold, or a domain error for trinary configs.
    pub fn binary_tau(&self) -> Result<f64> {
        match self.thresholds {
            Thresholds::Binary { tau } => Ok(tau),
            Thresholds::Trinary { .. } => Err(CoreError::domain(
                "operation requires a binary threshold config".to_string(),
            )),
        }
    }

    /// Trinary breakpoints, or a domain error for binary configs.
    pub fn trinary_taus(&self) -> Result<(f64, f64)> {
        match self.thresholds {
            Thresholds::Trinary { tau1, tau2 } => Ok((tau1, tau2)),
            Thresholds::Binary { .. } => Err(CoreError::domain(
                "operation requires trinary thresholds".to_string(),
            )),
        }
    }
}

/// One draw of the latent layer.
#[derive(Clone, Debug)]
pub struct LatentSample {
    /// Shared factor Y.
    pub y: f64,
    /// Idiosyncratic noise Y_i.
    pub yi: Vec<f64>,
    /// Latent sequence X_i = sqrt(1-a*) Y_i + sqrt(a*) Y.
    pub x: Vec<f64>,
}

impl LatentSample {
    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Binarized observation sequence. Counts are the source of truth, so the
/// frequency invariant abar * n == sum(bits) holds exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinarySample {
    bits: Vec<u8>,
    ones: usize,
}

impl BinarySample {
    /// Wrap an explicit 0/1 sequence.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(CoreError::domain("empty bit sequence".to_string()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(CoreError::domain("bits must be 0 or 1".to_string()));
        }
        let ones = bits.iter().map(|&b| b as usize).sum();
        Ok(BinarySample { bits, ones })
    }

    /// Sample with `ones` leading ones and `n - ones` zeros. Exchangeability
    /// makes the arrangement irrelevant to every downstream statistic; this
    /// is the natural carrier for frequency-pinned conditional checks.
    pub fn from_counts(n: usize, ones: usize) -> Result<Self> {
        if n == 0 || ones > n {
            return Err(CoreError::domain(format!(
                "invalid counts: n={n}, ones={ones}"
            )));
        }
        let mut bits = vec![1u8; ones];
        bits.resize(n, 0u8);
        Ok(BinarySample { bits, ones })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Mean of the bits.
    pub fn abar(&self) -> f64 {
        self.ones as f64 / self.n() as f64
    }
}

/// Trinarized observation sequence (categories 1, 2, 3).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrinarySample {
    cats: Vec<u8>,
    counts: [usize; 3],
}

impl TrinarySample {
    pub fn from_cats(cats: Vec<u8>) -> Result<Self> {
        if cats.is_empty() {
            return Err(CoreError::domain("empty category sequence".to_string()));
        }
        let mut counts = [0usize; 3];
        for &c in &cats {
            if !(1..=3).contains(&c) {
                return Err(CoreError::domain("categories must be 1, 2, or 3".to_string()));
            }
            counts[c as usize - 1] += 1;
        }
        Ok(TrinarySample { cats, counts })
    }

    pub fn cats(&self) -> &[u8] {
        &self.cats
    }

    pub fn n(&self) -> usize {
        self.cats.len()
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Interval frequencies (abar1, abar2, abar3).
    pub fn freqs(&self) -> [f64; 3] {
        let n = self.n() as f64;
        [
            self.counts[0] as f64 / n,
            self.counts[1] as f64 / n,
            self.counts[2] as f64 / n,
        ]
    }
}

/// Draw the latent layer: Y from the factor law (or `fixed_y` for
/// conditional runs), then Y_i i.i.d. from the noise law, by quantile
/// transform of the seeded uniform stream. Bit-for-bit deterministic in
/// (cfg, n, seed, fixed_y).
pub fn simulate_latent(
    cfg: &ModelConfig,
    n: usize,
    seed: u64,
    fixed_y: Option<f64>,
) -> Result<LatentSample> {
    cfg.validate()?;
    if n == 0 {
        return Err(CoreError::domain("sample size must be at least 1".to_string()));
    }
    if let Some(y) = fixed_y {
        if !y.is_finite() {
            return Err(CoreError::domain("fixed_y must be finite".to_string()));
        }
    }
    let mut stream = UniformStream::new(seed);
    let y = match fixed_y {
        Some(y) => y,
        None => cfg.factor.quantile_raw(stream.next_uniform()),
    };
    let s_noise = (1.0 - cfg.a_star).sqrt();
    let s_factor = cfg.a_star.sqrt();
    let mut yi = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let e = cfg.noise.quantile_raw(stream.next_uniform());
        yi.push(e);
        x.push(s_noise * e + s_factor * y);
    }
    Ok(LatentSample { y, yi, x })
}

/// A_i = 1{X_i > tau}.
pub fn discretize_binary(ls: &LatentSample, tau: f64) -> BinarySample {
    let bits: Vec<u8> = ls.x.iter().map(|&x| u8::from(x > tau)).collect();
    let ones = bits.iter().map(|&b| b as usize).sum();
    BinarySample { bits, ones }
}

/// Category by interval: (-inf, tau1] -> 1, (tau1, tau2] -> 2, (tau2, inf) -> 3.
pub fn discretize_trinary(ls: &LatentSample, tau1: f64, tau2: f64) -> Result<TrinarySample> {
    if !(tau1 < tau2) {
        return Err(CoreError::domain(format!(
            "trinary thresholds need tau1 < tau2, got {tau1}, {tau2}"
        )));
    }
    let cats: Vec<u8> = ls
        .x
        .iter()
        .map(|&x| {
            if x <= tau1 {
                1
            } else if x <= tau2 {
                2
            } else {
                3
            }
        })
        .collect();
    TrinarySample::from_cats(cats)
}

/// CSV export: `i,y_i,x_i,bit` rows. The shared factor draw is a property of
/// the whole sample and travels in the caller's header, not per row.
pub fn write_binary_csv(w: &mut dyn Write, ls: &LatentSample, bs: &BinarySample) -> Result<()> {
    writeln!(w, "i,y_i,x_i,bit")?;
    for (i, ((yi, x), b)) in ls.yi.iter().zip(&ls.x).zip(bs.bits()).enumerate() {
        writeln!(w, "{i},{yi:.17},{x:.17},{b}")?;
    }
    Ok(())
}

/// CSV export: `i,y_i,x_i,cat` rows.
pub fn write_trinary_csv(w: &mut dyn Write, ls: &LatentSample, ts: &TrinarySample) -> Result<()> {
    writeln!(w, "i,y_i,x_i,cat")?;
    for (i, ((yi, x), c)) in ls.yi.iter().zip(&ls.x).zip(ts.cats()).enumerate() {
        writeln!(w, "{i},{yi:.17},{x:.17},{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream_seed;
    use std::f64::consts::SQRT_2;

    fn case1_binary() -> ModelConfig {
        ModelConfig::binary(
            0.5,
            0.0,
            StandardizedDistribution::StdNormal,
            StandardizedDistribution::StdNormal,
        )
        .unwrap()
    }

    #[test]
    fn fixed_y_zero_collapses_to_scaled_noise() {
        let ls = simulate_latent(&case1_binary(), 100, 3, Some(0.0)).unwrap();
        assert_eq!(ls.y, 0.0);
        for (x, yi) in ls.x.iter().zip(&ls.yi) {
            assert!((x - yi / SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn latent_identity_holds() {
        let cfg = ModelConfig::binary(
            0.3,
            0.1,
            StandardizedDistribution::Laplace,
            StandardizedDistribution::ScaledT { df: 5.0 },
        )
        .unwrap();
        let ls = simulate_latent(&cfg, 500, 11, None).unwrap();
        let (sn, sf) = ((1.0 - 0.3f64).sqrt(), 0.3f64.sqrt());
        for i in 0..ls.n() {
            assert!((ls.x[i] - sn * ls.yi[i] - sf * ls.y).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = case1_binary();
        let a = simulate_latent(&cfg, 200, 12345, None).unwrap();
        let b = simulate_latent(&cfg, 200, 12345, None).unwrap();
        assert_eq!(a.y.to_bits(), b.y.to_bits());
        for i in 0..200 {
            assert_eq!(a.x[i].to_bits(), b.x[i].to_bits());
        }
        let c = simulate_latent(&cfg, 200, 12346, None).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn monte_carlo_cross_covariance_matches_a_star() {
        // Oracle: E[X_i X_j] = a* for i != j. 1e5 replications of a pair.
        let cfg = case1_binary();
        let reps = 100_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for r in 0..reps {
            let ls = simulate_latent(&cfg, 2, substream_seed(777, r), None).unwrap();
            let prod = ls.x[0] * ls.x[1];
            sum += prod;
            sumsq += prod * prod;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let stderr = (var / reps as f64).sqrt();
        assert!(
            (mean - 0.5).abs() < 3.0 * stderr,
            "cross-cov {mean} vs 0.5 (3*stderr = {})",
            3.0 * stderr
        );
    }

    #[test]
    fn conditional_bits_match_bernoulli_rate() {
        // With Y fixed, bits are i.i.d. Bernoulli(q), q = 1 - G((tau - sqrt(a*)y)/sqrt(1-a*)).
        let cfg = case1_binary();
        let y0 = 0.3;
        let n = 100_000;
        let ls = simulate_latent(&cfg, n, 99, Some(y0)).unwrap();
        let bs = discretize_binary(&ls, 0.0);
        let q = cfg
            .noise
            .sf((0.0 - 0.5f64.sqrt() * y0) / (1.0 - 0.5f64).sqrt());
        let bound = 4.0 * (q * (1.0 - q) / n as f64).sqrt();
        assert!((bs.abar() - q).abs() < bound, "{} vs {q}", bs.abar());
    }

    #[test]
    fn discretize_binary_examples() {
        let ls = LatentSample {
            y: 0.0,
            yi: vec![0.0; 3],
            x: vec![-1.0, 2.0, 0.5],
        };
        let bs = discretize_binary(&ls, 0.0);
        assert_eq!(bs.bits(), &[0, 1, 1]);
        assert!((bs.abar() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(discretize_binary(&ls, -1e9).abar(), 1.0);
        assert_eq!(discretize_binary(&ls, 1e9).abar(), 0.0);
    }

    #[test]
    fn discretize_trinary_boundaries() {
        let (t1, t2) = (-1.0, 1.0);
        let ls = LatentSample {
            y: 0.0,
            yi: vec![0.0; 3],
            x: vec![t1, t2, t2 + 1.0],
        };
        let ts = discretize_trinary(&ls, t1, t2).unwrap();
        assert_eq!(ts.cats(), &[1, 2, 3]);
        let ls2 = LatentSample {
            y: 0.0,
            yi: vec![0.0; 3],
            x: vec![-2.0, 0.0, 2.0],
        };
        let ts2 = discretize_trinary(&ls2, -1.0, 1.0).unwrap();
        assert_eq!(ts2.freqs(), [1.0 / 3.0; 3]);
        let [k1, k2, k3] = ts2.counts();
        assert_eq!(k1 + k2 + k3, ts2.n());
        assert!(discretize_trinary(&ls2, 1.0, -1.0).is_err());
    }

    #[test]
    fn trinary_collapses_to_binary_at_coincident_thresholds() {
        let cfg = case1_binary();
        let ls = simulate_latent(&cfg, 5000, 4, None).unwrap();
        let bs = discretize_binary(&ls, 0.0);
        let ts = discretize_trinary(&ls, 0.0, 1e-300).unwrap();
        for (b, c) in bs.bits().iter().zip(ts.cats()) {
            // Continuous draws never land in (0, 1e-300].
            assert_eq!(*c, if *b == 1 { 3 } else { 1 });
        }
    }

    #[test]
    fn sample_csv_golden_vector() {
        let ls = LatentSample {
            y: 0.25,
            yi: vec![1.0, -0.5],
            x: vec![0.5, -0.25],
        };
        let bs = discretize_binary(&ls, 0.0);
        let mut buf = Vec::new();
        write_binary_csv(&mut buf, &ls, &bs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "i,y_i,x_i,bit\n0,1.00000000000000000,0.50000000000000000,1\n1,-0.50000000000000000,-0.25000000000000000,0\n"
        );
    }

    #[test]
    fn count_invariants() {
        let bs = BinarySample::from_counts(10, 4).unwrap();
        assert_eq!(bs.ones(), 4);
        assert_eq!(bs.bits().iter().map(|&b| b as usize).sum::<usize>(), 4);
        assert!((bs.abar() * 10.0 - 4.0).abs() == 0.0);
        assert!(BinarySample::from_counts(3, 4).is_err());
        assert!(BinarySample::from_bits(vec![0, 2]).is_err());
    }
}
