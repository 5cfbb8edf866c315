//! Continuous expectations over digit-token logits and the metrics built on
//! them: cross-entropy, NCM, NCM* and windowed convergence reports.
//!
//! Only the ten digit classes take part; the separator token is treated as
//! deterministic and never enters an expectation or a loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, mean};
use crate::score::ScoreValue;

pub const DIGIT_CLASSES: usize = 10;

pub type LogitRow = [f64; DIGIT_CLASSES];

/// Per-position digit logits for one predicted score, paired with the
/// ground-truth score they are evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitLogitSeq {
    logits: Vec<LogitRow>,
    gt: ScoreValue,
}

impl DigitLogitSeq {
    pub fn new(logits: Vec<LogitRow>, gt: ScoreValue) -> Result<Self> {
        if logits.len() != gt.m() {
            return Err(Error::Usage(format!(
                "{} logit rows for a {}-digit ground truth",
                logits.len(),
                gt.m()
            )));
        }
        if logits.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(Self { logits, gt })
    }

    pub fn logits(&self) -> &[LogitRow] {
        &self.logits
    }

    pub fn gt(&self) -> &ScoreValue {
        &self.gt
    }

    pub fn m(&self) -> usize {
        self.gt.m()
    }

    /// Rows with `margin` added to the logit of each digit of `pred`, zero
    /// elsewhere.
    pub fn saturated(pred: &ScoreValue, gt: ScoreValue, margin: f64) -> Result<Self> {
        let logits = pred
            .digits()
            .iter()
            .map(|&d| {
                let mut row = [0.0; DIGIT_CLASSES];
                row[d as usize] = margin;
                row
            })
            .collect();
        Self::new(logits, gt)
    }
}

/// How NCM* treats the ground-truth digit once it is masked out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// GT term removed from the numerator only; the softmax denominator keeps
    /// every class.
    #[default]
    Verbatim,
    /// GT class removed from numerator and denominator, giving the expectation
    /// of the conditional distribution over the other nine digits.
    Renormalized,
}

/// Positional weights `(1, 0.1, ..., 10^(1-m))`.
pub fn position_weights(m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(|i| 10f64.powi(-(i as i32)))
}

fn check_row(row: &LogitRow) -> Result<()> {
    if row.iter().all(|z| z.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("logit row"))
    }
}

/// `v · softmax(row)` with `v = (0, 1, ..., 9)`.
pub fn digit_expectation(row: &LogitRow) -> Result<f64> {
    check_row(row)?;
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &z) in row.iter().enumerate() {
        let e = (z - max).exp();
        num += j as f64 * e;
        den += e;
    }
    // a convex combination of 0..=9; clamp away rounding overshoot
    Ok((num / den).clamp(0.0, 9.0))
}

/// Digit expectation with the class `gt_digit` masked out of the numerator.
pub fn masked_digit_expectation(row: &LogitRow, gt_digit: u8, mode: MaskMode) -> Result<f64> {
    check_row(row)?;
    let g = gt_digit as usize;
    let in_denominator = |j: usize| mode == MaskMode::Verbatim || j != g;
    let max = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| in_denominator(j))
        .map(|(_, &z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &z) in row.iter().enumerate() {
        let e = (z - max).exp();
        if j != g {
            num += j as f64 * e;
        }
        if in_denominator(j) {
            den += e;
        }
    }
    Ok((num / den).clamp(0.0, 9.0))
}

/// `E[S_pred] = Σ w_i · digit_expectation(row_i)`.
pub fn score_expectation(seq: &DigitLogitSeq) -> Result<f64> {
    seq.logits
        .iter()
        .zip(position_weights(seq.m()))
        .try_fold(0.0, |acc, (row, w)| Ok(acc + w * digit_expectation(row)?))
}

/// `E[S_pred]*`: the score expectation with each position's GT digit masked.
pub fn masked_score_expectation(seq: &DigitLogitSeq, mode: MaskMode) -> Result<f64> {
    seq.logits
        .iter()
        .zip(seq.gt.digits())
        .zip(position_weights(seq.m()))
        .try_fold(0.0, |acc, ((row, &g), w)| {
            Ok(acc + w * masked_digit_expectation(row, g, mode)?)
        })
}

/// Teacher-forced cross-entropy summed over the digit positions.
pub fn cross_entropy(seq: &DigitLogitSeq) -> Result<f64> {
    seq.logits
        .iter()
        .zip(seq.gt.digits())
        .try_fold(0.0, |acc, (row, &g)| {
            check_row(row)?;
            Ok(acc + log_sum_exp(row.iter().copied()) - row[g as usize])
        })
}

/// Every per-sample quantity the batch metrics are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMetrics {
    pub expectation: f64,
    pub expectation_star: f64,
    pub sq_err: f64,
    pub sq_err_star: f64,
    pub ce: f64,
}

pub fn sample_metrics(seq: &DigitLogitSeq, mode: MaskMode) -> Result<SampleMetrics> {
    let gt = seq.gt.value();
    let expectation = score_expectation(seq)?;
    let expectation_star = masked_score_expectation(seq, mode)?;
    Ok(SampleMetrics {
        expectation,
        expectation_star,
        sq_err: (expectation - gt).powi(2),
        sq_err_star: (expectation_star - gt).powi(2),
        ce: cross_entropy(seq)?,
    })
}

fn check_batch(batch: &[DigitLogitSeq]) -> Result<()> {
    let first = batch
        .first()
        .ok_or_else(|| Error::Usage("empty batch".into()))?;
    if let Some(other) = batch.iter().find(|s| s.m() != first.m()) {
        return Err(Error::Usage(format!(
            "mixed digit counts in batch ({} and {})",
            first.m(),
            other.m()
        )));
    }
    Ok(())
}

/// Mean squared error between score expectations and ground truth.
pub fn ncm(batch: &[DigitLogitSeq]) -> Result<f64> {
    check_batch(batch)?;
    let errs = batch
        .iter()
        .map(|s| Ok((score_expectation(s)? - s.gt.value()).powi(2)))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&errs))
}

/// Mean squared error between GT-masked expectations and ground truth.
pub fn ncm_star(batch: &[DigitLogitSeq], mode: MaskMode) -> Result<f64> {
    check_batch(batch)?;
    let errs = batch
        .iter()
        .map(|s| Ok((masked_score_expectation(s, mode)? - s.gt.value()).powi(2)))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&errs))
}

/// Batch means of the monitored metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ncm: f64,
    pub ncm_star: f64,
    pub ce: f64,
    pub expectation: f64,
    pub expectation_star: f64,
    pub n_samples: usize,
}

impl MetricReport {
    pub fn from_batch(batch: &[DigitLogitSeq], mode: MaskMode) -> Result<Self> {
        check_batch(batch)?;
        let samples = batch
            .iter()
            .map(|s| sample_metrics(s, mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_samples(&samples))
    }

    /// Panics on an empty slice.
    pub fn from_samples(samples: &[SampleMetrics]) -> Self {
        assert!(!samples.is_empty(), "report over zero samples");
        let column =
            |f: fn(&SampleMetrics) -> f64| mean(&samples.iter().map(f).collect::<Vec<_>>());
        Self {
            ncm: column(|s| s.sq_err),
            ncm_star: column(|s| s.sq_err_star),
            ce: column(|s| s.ce),
            expectation: column(|s| s.expectation),
            expectation_star: column(|s| s.expectation_star),
            n_samples: samples.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmbiguityReport {
    pub ce_a: f64,
    pub ce_b: f64,
    pub err_a: f64,
    pub err_b: f64,
}

/// Scores two saturated predictions against `gt` both by token-level
/// cross-entropy and by absolute numeric error.
pub fn ambiguity_demo(
    gt: &ScoreValue,
    pred_a: &ScoreValue,
    pred_b: &ScoreValue,
    margin: f64,
) -> Result<AmbiguityReport> {
    if pred_a.m() != gt.m() || pred_b.m() != gt.m() {
        return Err(Error::Usage(
            "predictions and ground truth differ in digit count".into(),
        ));
    }
    if !margin.is_finite() || margin <= 0.0 {
        return Err(Error::Usage(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let seq_a = DigitLogitSeq::saturated(pred_a, gt.clone(), margin)?;
    let seq_b = DigitLogitSeq::saturated(pred_b, gt.clone(), margin)?;
    Ok(AmbiguityReport {
        ce_a: cross_entropy(&seq_a)?,
        ce_b: cross_entropy(&seq_b)?,
        err_a: grid_distance(pred_a, gt),
        err_b: grid_distance(pred_b, gt),
    })
}

fn grid_distance(a: &ScoreValue, b: &ScoreValue) -> f64 {
    let scale = 10f64.powi(a.m() as i32 - 1);
    a.grid_index().abs_diff(b.grid_index()) as f64 / scale
}

/// `100 · (last − first) / first`.
pub fn convergence_ratio(first: f64, last: f64) -> Result<f64> {
    if first == 0.0 {
        return Err(Error::DivisionByZero("convergence ratio with first = 0"));
    }
    Ok(100.0 * (last - first) / first)
}

pub const DEFAULT_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowMeans {
    pub ncm: f64,
    pub ncm_star: f64,
    pub ce: f64,
}

/// First/last window means and their convergence ratios. A ratio is `None`
/// when the first-window mean is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveReport {
    pub window: usize,
    pub first: WindowMeans,
    pub last: WindowMeans,
    pub ratio_ncm: Option<f64>,
    pub ratio_ncm_star: Option<f64>,
    pub ratio_ce: Option<f64>,
}

impl CurveReport {
    /// `(metric, first, last, ratio)` rows in a fixed order.
    pub fn rows(&self) -> [(&'static str, f64, f64, Option<f64>); 3] {
        [
            ("ncm", self.first.ncm, self.last.ncm, self.ratio_ncm),
            (
                "ncm_star",
                self.first.ncm_star,
                self.last.ncm_star,
                self.ratio_ncm_star,
            ),
            ("ce", self.first.ce, self.last.ce, self.ratio_ce),
        ]
    }
}

fn window_means(slice: &[(u64, MetricReport)]) -> WindowMeans {
    let col =
        |f: fn(&MetricReport) -> f64| mean(&slice.iter().map(|(_, r)| f(r)).collect::<Vec<_>>());
    WindowMeans {
        ncm: col(|r| r.ncm),
        ncm_star: col(|r| r.ncm_star),
        ce: col(|r| r.ce),
    }
}

pub fn curve_report(series: &[(u64, MetricReport)], window: usize) -> Result<CurveReport> {
    if window == 0 {
        return Err(Error::Usage("window must be at least 1".into()));
    }
    if window > series.len() {
        return Err(Error::Usage(format!(
            "window {window} exceeds series length {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::Usage("series is not sorted by step".into()));
    }
    let first = window_means(&series[..window]);
    let last = window_means(&series[series.len() - window..]);
    Ok(CurveReport {
        window,
        first,
        last,
        ratio_ncm: convergence_ratio(first.ncm, last.ncm).ok(),
        ratio_ncm_star: convergence_ratio(first.ncm_star, last.ncm_star).ok(),
        ratio_ce: convergence_ratio(first.ce, last.ce).ok(),
    })
}
