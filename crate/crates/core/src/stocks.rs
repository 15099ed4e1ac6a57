//! Daily cross-section pipeline for price data: ingest long-format CSV,
//! take log returns, standardize each series against its trailing window,
//! export Q-Q pairs, and run the three estimators date by date.
//!
//! The pipeline never imputes: any cell that cannot be computed is masked,
//! and downstream steps skip incomplete cross-sections with a note.

use crate::dist::StandardizedDistribution;
use crate::error::{CoreError, Result};
use crate::estimators::{binary_mle, trinary_moment, ustat_common_corr, SearchSpec};
use crate::model::{simulate_latent, BinarySample, ModelConfig, TrinarySample};
use crate::rng::substream_seed;
use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

/// Default thresholds for daily estimation on standardized returns: binary
/// cut at 0, trinary cuts at -0.5 and 0.5 (roughly balanced thirds under a
/// standard normal cross-section).
pub const DAILY_TAU: f64 = 0.0;
pub const DAILY_TAU1: f64 = -0.5;
pub const DAILY_TAU2: f64 = 0.5;

/// Close prices on a date × ticker grid; `None` marks a missing quote.
#[derive(Clone, Debug, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    close: Vec<Vec<Option<f64>>>,
}

/// Ingestion tallies surfaced to the caller (and echoed by the CLI).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub duplicate_overwrites: usize,
    pub nonpositive_rejected: usize,
}

impl PricePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        close: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if dates.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoreError::domain(
                "panel dates must be strictly increasing".to_string(),
            ));
        }
        if close.len() != dates.len() || close.iter().any(|row| row.len() != tickers.len()) {
            return Err(CoreError::domain(
                "panel shape must be dates x tickers".to_string(),
            ));
        }
        if close
            .iter()
            .flatten()
            .any(|c| c.is_some_and(|v| !(v > 0.0) || !v.is_finite()))
        {
            return Err(CoreError::domain(
                "close prices must be finite and positive where present".to_string(),
            ));
        }
        Ok(PricePanel {
            dates,
            tickers,
            close,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn close(&self) -> &[Vec<Option<f64>>] {
        &self.close
    }
}

/// Pivot a long-format daily price CSV into a [`PricePanel`].
///
/// The header must contain `date, open, high, low, close, volume, Name`
/// (case-insensitive, any order); only date, close and Name are consumed.
/// Duplicate (date, ticker) rows keep the last value and are counted;
/// nonpositive closes are masked and counted; an empty close field is a
/// missing quote. A file with no data rows is a format error.
pub fn ingest_prices(path: &Path) -> Result<(PricePanel, IngestReport)> {
    let file = std::fs::File::open(path)?;
    ingest_prices_from_reader(file)
}

/// Reader-based core of [`ingest_prices`].
pub fn ingest_prices_from_reader<R: Read>(reader: R) -> Result<(PricePanel, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| CoreError::format(format!("price CSV header: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| CoreError::format(format!("price CSV is missing a `{name}` column")))
    };
    for required in ["open", "high", "low", "volume"] {
        find(required)?;
    }
    let date_idx = find("date")?;
    let close_idx = find("close")?;
    let name_idx = find("name")?;

    let mut cells: std::collections::BTreeMap<(NaiveDate, String), Option<f64>> =
        std::collections::BTreeMap::new();
    let mut report = IngestReport::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CoreError::format(format!("price CSV row {}: {e}", line + 2)))?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let date = NaiveDate::parse_from_str(get(date_idx), "%Y-%m-%d").map_err(|e| {
            CoreError::format(format!("row {}: bad date `{}`: {e}", line + 2, get(date_idx)))
        })?;
        let ticker = get(name_idx).to_string();
        if ticker.is_empty() {
            return Err(CoreError::format(format!("row {}: empty ticker", line + 2)));
        }
        let close_field = get(close_idx);
        let close = if close_field.is_empty() {
            None
        } else {
            let v: f64 = close_field.parse().map_err(|e| {
                CoreError::format(format!("row {}: bad close `{close_field}`: {e}", line + 2))
            })?;
            if v > 0.0 && v.is_finite() {
                Some(v)
            } else {
                report.nonpositive_rejected += 1;
                None
            }
        };
        report.rows_read += 1;
        if cells.insert((date, ticker), close).is_some() {
            report.duplicate_overwrites += 1;
        }
    }
    if report.rows_read == 0 {
        return Err(CoreError::format(
            "price CSV contains no data rows".to_string(),
        ));
    }

    let mut dates: Vec<NaiveDate> = cells.keys().map(|k| k.0).collect();
    dates.dedup();
    let mut tickers: Vec<String> = cells.keys().map(|k| k.1.clone()).collect();
    tickers.sort_unstable();
    tickers.dedup();
    let index_of: std::collections::BTreeMap<&str, usize> = tickers
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let date_pos: std::collections::BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut close = vec![vec![None; tickers.len()]; dates.len()];
    for ((date, ticker), value) in cells {
        close[date_pos[&date]][index_of[ticker.as_str()]] = value;
    }
    Ok((PricePanel::new(dates, tickers, close)?, report))
}

/// Log returns between consecutive panel dates; one fewer date row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl ReturnPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if dates.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoreError::domain(
                "panel dates must be strictly increasing".to_string(),
            ));
        }
        if values.len() != dates.len() || values.iter().any(|row| row.len() != tickers.len()) {
            return Err(CoreError::domain(
                "panel shape must be dates x tickers".to_string(),
            ));
        }
        if values
            .iter()
            .flatten()
            .any(|v| v.is_some_and(|x| !x.is_finite()))
        {
            return Err(CoreError::domain(
                "returns must be finite where present".to_string(),
            ));
        }
        Ok(ReturnPanel {
            dates,
            tickers,
            values,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }
}

/// R_t = log(close_t / close_{t-1}) per ticker; masked where either side is
/// missing. Needs at least two dates.
pub fn log_returns(p: &PricePanel) -> Result<ReturnPanel> {
    if p.dates.len() < 2 {
        return Err(CoreError::domain(format!(
            "need at least 2 dates for returns, got {}",
            p.dates.len()
        )));
    }
    let values: Vec<Vec<Option<f64>>> = (1..p.dates.len())
        .map(|t| {
            (0..p.tickers.len())
                .map(|i| match (p.close[t - 1][i], p.close[t][i]) {
                    (Some(prev), Some(cur)) => Some((cur / prev).ln()),
                    _ => None,
                })
                .collect()
        })
        .collect();
    ReturnPanel::new(p.dates[1..].to_vec(), p.tickers.clone(), values)
}

/// Returns standardized against their trailing window; the first `window`
/// return dates are consumed as warm-up.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizedPanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
    /// Cells masked because the trailing window had zero standard deviation.
    pub zero_std_masked: usize,
}

impl StandardizedPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if dates.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoreError::domain(
                "panel dates must be strictly increasing".to_string(),
            ));
        }
        if values.len() != dates.len() || values.iter().any(|row| row.len() != tickers.len()) {
            return Err(CoreError::domain(
                "panel shape must be dates x tickers".to_string(),
            ));
        }
        Ok(StandardizedPanel {
            dates,
            tickers,
            values,
            zero_std_masked: 0,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn find_date(&self, date: NaiveDate) -> Option<usize> {
        self.dates.iter().position(|&d| d == date)
    }

    /// The cross-section at a date index if every cell is present.
    pub fn complete_row(&self, idx: usize) -> Option<Vec<f64>> {
        self.values
            .get(idx)?
            .iter()
            .copied()
            .collect::<Option<Vec<f64>>>()
    }
}

/// X_t = (R_t - mean of the previous `window` returns) / (their sample
/// standard deviation, divisor window-1). The window is strictly trailing:
/// day t itself is excluded. Cells with any missing value in the window or
/// at t are masked; a zero-deviation window masks the cell and is counted.
pub fn rolling_standardize(r: &ReturnPanel, window: usize) -> Result<StandardizedPanel> {
    if window < 2 {
        return Err(CoreError::domain(format!(
            "window must be at least 2, got {window}"
        )));
    }
    if r.dates.len() <= window {
        return Err(CoreError::domain(format!(
            "need more than {window} return dates, got {}",
            r.dates.len()
        )));
    }
    let mut zero_std = 0usize;
    let mut values = Vec::with_capacity(r.dates.len() - window);
    for t in window..r.dates.len() {
        let mut row = Vec::with_capacity(r.tickers.len());
        for i in 0..r.tickers.len() {
            let cur = r.values[t][i];
            let hist: Option<Vec<f64>> = (t - window..t).map(|k| r.values[k][i]).collect();
            row.push(match (cur, hist) {
                (Some(x), Some(h)) => {
                    let mean = h.iter().sum::<f64>() / window as f64;
                    let var = h.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / (window - 1) as f64;
                    let std = var.sqrt();
                    if std == 0.0 {
                        zero_std += 1;
                        None
                    } else {
                        Some((x - mean) / std)
                    }
                }
                _ => None,
            });
        }
        values.push(row);
    }
    let mut sp = StandardizedPanel::new(
        r.dates[window..].to_vec(),
        r.tickers.clone(),
        values,
    )?;
    sp.zero_std_masked = zero_std;
    Ok(sp)
}

/// (theoretical, empirical) quantile pairs: sorted data against standard
/// normal quantiles at plotting positions (i - 0.5)/m.
pub fn qq_data(x: &[f64]) -> Result<Vec<(f64, f64)>> {
    let m = x.len();
    if m < 2 {
        return Err(CoreError::domain(format!(
            "need at least two values for quantile pairs, got {m}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::domain(
            "quantile pairs need finite values".to_string(),
        ));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    sorted
        .iter()
        .enumerate()
        .map(|(i, &emp)| {
            let u = (i as f64 + 0.5) / m as f64;
            Ok((StandardizedDistribution::StdNormal.quantile(u)?, emp))
        })
        .collect()
}

/// CSV for Q-Q pairs: columns (theoretical, empirical).
pub fn write_qq_csv(pairs: &[(f64, f64)], w: &mut dyn Write) -> Result<()> {
    writeln!(w, "theoretical,empirical")?;
    for (t, e) in pairs {
        writeln!(w, "{t:.17e},{e:.17e}")?;
    }
    Ok(())
}

/// One date's estimates; `None` columns belong to skipped rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub ustat: Option<f64>,
    pub trinary: Option<f64>,
    pub binary_mle: Option<f64>,
    pub note: String,
}

/// Per-date estimator comparison on a standardized panel: the all-pairs
/// U-statistic on the raw cross-section, the trinary moment estimator on
/// the (tau1, tau2)-thresholded cross-section with standard normal G, and
/// the binary maximum-likelihood estimator on the tau-thresholded one.
/// Dates with masked cells are skipped with a note; estimator boundary
/// flags are recorded in the note as well.
pub fn daily_estimates(
    sp: &StandardizedPanel,
    tau: f64,
    tau1: f64,
    tau2: f64,
    search: &SearchSpec,
) -> Result<Vec<DailyRow>> {
    if sp.tickers.len() < 2 {
        return Err(CoreError::domain(format!(
            "need at least two tickers, got {}",
            sp.tickers.len()
        )));
    }
    let normal = StandardizedDistribution::StdNormal;
    // The likelihood only reads thresholds and distribution shapes from the
    // config; the correlation field is a placeholder.
    let mle_cfg = ModelConfig::binary(0.5, tau, normal, normal)?;
    sp.values
        .par_iter()
        .enumerate()
        .map(|(t, row)| -> Result<DailyRow> {
            let date = sp.dates[t];
            let masked = row.iter().filter(|c| c.is_none()).count();
            if masked > 0 {
                return Ok(DailyRow {
                    date,
                    ustat: None,
                    trinary: None,
                    binary_mle: None,
                    note: format!("skipped:{masked}_masked_cells"),
                });
            }
            let xs: Vec<f64> = row.iter().map(|c| c.expect("checked complete")).collect();
            let mut notes = Vec::new();

            let ustat = ustat_common_corr(&xs)?.a_hat;

            let cats: Vec<u8> = xs
                .iter()
                .map(|&x| if x <= tau1 { 1 } else if x <= tau2 { 2 } else { 3 })
                .collect();
            let tri = trinary_moment(&TrinarySample::from_cats(cats)?, tau1, tau2, &normal)?;
            if tri.degenerate {
                notes.push("trinary_degenerate".to_string());
            }

            let bits: Vec<u8> = xs.iter().map(|&x| u8::from(x > tau)).collect();
            let mle = binary_mle(&BinarySample::from_bits(bits)?, &mle_cfg, search)?;
            if mle.degenerate {
                notes.push("mle_degenerate".to_string());
            }

            Ok(DailyRow {
                date,
                ustat: Some(ustat),
                trinary: Some(tri.a_hat),
                binary_mle: Some(mle.a_hat),
                note: notes.join(";"),
            })
        })
        .collect()
}

/// [`daily_estimates`] at the default thresholds and search protocol.
pub fn daily_estimates_default(sp: &StandardizedPanel) -> Result<Vec<DailyRow>> {
    daily_estimates(sp, DAILY_TAU, DAILY_TAU1, DAILY_TAU2, &SearchSpec::default())
}

/// CSV for daily estimates: columns (date, ustat, trinary, binary_mle,
/// note); empty numeric fields on skipped rows.
pub fn write_daily_csv(rows: &[DailyRow], w: &mut dyn Write) -> Result<()> {
    writeln!(w, "date,ustat,trinary,binary_mle,note")?;
    let field = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.date,
            field(r.ustat),
            field(r.trinary),
            field(r.binary_mle),
            r.note
        )?;
    }
    Ok(())
}

/// A panel of synthetic standardized cross-sections drawn from the
/// single-factor model: day t holds X_i = sqrt(1-a*) Y_i + sqrt(a*) Y with
/// fresh standard normal draws, independent across days (substream t of
/// `seed`). Dates are consecutive calendar days for convenience.
pub fn synthetic_panel(
    m: usize,
    days: usize,
    a_star: f64,
    seed: u64,
) -> Result<StandardizedPanel> {
    if m < 2 || days == 0 {
        return Err(CoreError::domain(format!(
            "synthetic panel needs m >= 2 and days >= 1, got m={m}, days={days}"
        )));
    }
    let normal = StandardizedDistribution::StdNormal;
    let cfg = ModelConfig::binary(a_star, 0.0, normal, normal)?;
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date");
    let mut dates = Vec::with_capacity(days);
    let mut values = Vec::with_capacity(days);
    for t in 0..days {
        let latent = simulate_latent(&cfg, m, substream_seed(seed, t as u64), None)?;
        dates.push(
            start
                .checked_add_days(Days::new(t as u64))
                .ok_or_else(|| CoreError::domain("date overflow".to_string()))?,
        );
        values.push(latent.x.iter().map(|&x| Some(x)).collect());
    }
    let tickers = (0..m).map(|i| format!("S{i:03}")).collect();
    StandardizedPanel::new(dates, tickers, values)
}
