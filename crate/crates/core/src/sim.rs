//! Synthetic digit-logit generator and training-curve emulator.
//!
//! A profile fixes the probability on the ground-truth digit; the rest of the
//! mass is spread uniformly (`Naive`) or as a discretized Gaussian around the
//! ground-truth digit (`Adjacent`). Logits are the log-probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expectation::{
    sample_metrics, DigitLogitSeq, LogitRow, MaskMode, MetricReport, DIGIT_CLASSES,
};
use crate::numeric::log_sum_exp;
use crate::score::ScoreValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimKind {
    Naive,
    Adjacent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub kind: SimKind,
    pub on_gt_prob: f64,
    /// Gaussian width in digit units; ignored by `Naive`.
    pub spread: f64,
}

impl SimProfile {
    pub fn new(kind: SimKind, on_gt_prob: f64, spread: f64) -> Result<Self> {
        let p = Self {
            kind,
            on_gt_prob,
            spread,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.on_gt_prob > 0.0 && self.on_gt_prob < 1.0) {
            return Err(Error::Config(format!(
                "on_gt_prob {} must lie strictly inside (0, 1)",
                self.on_gt_prob
            )));
        }
        if !(self.spread.is_finite() && self.spread > 0.0) {
            return Err(Error::Config(format!(
                "spread {} must be positive",
                self.spread
            )));
        }
        Ok(())
    }

    /// Log-probabilities of one digit position whose ground truth is `gt`.
    pub fn row(&self, gt: u8) -> LogitRow {
        let g = gt as usize;
        let off = (1.0 - self.on_gt_prob).ln();
        let mut row = [0.0; DIGIT_CLASSES];
        match self.kind {
            SimKind::Naive => row.fill(off - ((DIGIT_CLASSES - 1) as f64).ln()),
            SimKind::Adjacent => {
                let energy = |j: usize| {
                    let d = j as f64 - g as f64;
                    -d * d / (2.0 * self.spread * self.spread)
                };
                let others = (0..DIGIT_CLASSES).filter(|&j| j != g);
                let z = log_sum_exp(others.clone().map(energy));
                for j in others {
                    row[j] = off + energy(j) - z;
                }
            }
        }
        row[g] = self.on_gt_prob.ln();
        row
    }
}

pub fn sample_seq(profile: &SimProfile, gt: &ScoreValue) -> DigitLogitSeq {
    let logits = gt.digits().iter().map(|&d| profile.row(d)).collect();
    DigitLogitSeq::new(logits, gt.clone()).expect("one finite row per digit")
}

/// Linear schedule from `start` to `end` over `steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmulationConfig {
    pub kind: SimKind,
    pub start_prob: f64,
    pub end_prob: f64,
    pub start_spread: f64,
    pub end_spread: f64,
    pub steps: u64,
    pub batch: usize,
    pub seed: u64,
    #[serde(default)]
    pub mask_mode: MaskMode,
}

impl EmulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config(format!(
                "steps = {} (need at least 2)",
                self.steps
            )));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be positive".into()));
        }
        self.profile_at(0)?;
        self.profile_at(self.steps - 1)?;
        Ok(())
    }

    pub fn profile_at(&self, step: u64) -> Result<SimProfile> {
        let t = step as f64 / (self.steps - 1) as f64;
        let lerp = |a: f64, b: f64| a + (b - a) * t;
        SimProfile::new(
            self.kind,
            lerp(self.start_prob, self.end_prob),
            lerp(self.start_spread, self.end_spread),
        )
    }

    /// Sequences of one step. Each step draws from its own stream of the
    /// seeded generator, so steps can be produced in any order.
    pub fn step_batch<F>(&self, step: u64, gt_sampler: &F) -> Result<Vec<DigitLogitSeq>>
    where
        F: Fn(&mut ChaCha8Rng) -> ScoreValue,
    {
        let profile = self.profile_at(step)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        Ok((0..self.batch)
            .map(|_| sample_seq(&profile, &gt_sampler(&mut rng)))
            .collect())
    }
}

/// Per-step metric reports over a linear profile schedule.
pub fn emulate_training<F>(cfg: &EmulationConfig, gt_sampler: F) -> Result<Vec<(u64, MetricReport)>>
where
    F: Fn(&mut ChaCha8Rng) -> ScoreValue + Sync,
{
    cfg.validate()?;
    (0..cfg.steps)
        .into_par_iter()
        .map(|step| {
            let batch = cfg.step_batch(step, &gt_sampler)?;
            let samples = batch
                .iter()
                .map(|s| sample_metrics(s, cfg.mask_mode))
                .collect::<Result<Vec<_>>>()?;
            Ok((step, MetricReport::from_samples(&samples)))
        })
        .collect()
}

/// Uniform draw over the `m`-digit grid.
pub fn uniform_grid_sampler(m: usize) -> impl Fn(&mut ChaCha8Rng) -> ScoreValue + Sync + Send {
    let size = 10u64.pow(m as u32);
    move |rng| ScoreValue::from_grid_index(rng.random_range(0..size), m).expect("index within grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::{
        curve_report, digit_expectation, masked_digit_expectation, score_expectation,
    };
    use crate::score::parse_score_native;

    fn sv(t: &str) -> ScoreValue {
        parse_score_native(t).unwrap()
    }

    fn probs(row: &LogitRow) -> Vec<f64> {
        row.iter().map(|z| z.exp()).collect()
    }

    #[test]
    fn rows_are_distributions() {
        for kind in [SimKind::Naive, SimKind::Adjacent] {
            for g in 0..10 {
                let row = SimProfile::new(kind, 0.37, 0.8).unwrap().row(g);
                let p = probs(&row);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((p[g as usize] - 0.37).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_naive_profile() {
        let p = SimProfile::new(SimKind::Naive, 0.1, 1.0).unwrap();
        let seq = sample_seq(&p, &sv("7"));
        assert!((digit_expectation(&seq.logits()[0]).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn near_certain_profiles_recover_gt() {
        for kind in [SimKind::Naive, SimKind::Adjacent] {
            let p = SimProfile::new(kind, 1.0 - 1e-12, 0.7).unwrap();
            let seq = sample_seq(&p, &sv("3.07"));
            assert!((score_expectation(&seq).unwrap() - 3.07).abs() < 1e-9);
        }
    }

    #[test]
    fn adjacent_matches_hand_evaluation() {
        // gt 5, spread 0.5: neighbor weights exp(-2 d^2) normalized over j != 5.
        let w = |d: f64| (-2.0 * d * d).exp();
        let z = 2.0 * (w(1.0) + w(2.0) + w(3.0) + w(4.0)) + w(5.0);
        let numer: f64 = (0..10)
            .filter(|&j| j != 5)
            .map(|j| j as f64 * w(j as f64 - 5.0))
            .sum();
        let cond = numer / z;
        assert!((cond - 5.0).abs() < 1e-12);

        let row = SimProfile::new(SimKind::Adjacent, 0.5, 0.5).unwrap().row(5);
        let p = probs(&row);
        assert!((p[4] - 0.5 * w(1.0) / z).abs() < 1e-12);
        assert!((p[6] - p[4]).abs() < 1e-15);
        let verbatim = masked_digit_expectation(&row, 5, MaskMode::Verbatim).unwrap();
        let renorm = masked_digit_expectation(&row, 5, MaskMode::Renormalized).unwrap();
        assert!((verbatim - 0.5 * cond).abs() < 1e-12);
        assert!((renorm - cond).abs() < 1e-12);
        assert!((verbatim - 2.5).abs() < 1e-9 && (renorm - 5.0).abs() < 1e-9);
    }

    #[test]
    fn edge_digits_stay_in_range() {
        for spread in [0.05, 0.5, 3.0] {
            let p = SimProfile::new(SimKind::Adjacent, 0.4, spread).unwrap();
            for g in [0u8, 9] {
                let row = p.row(g);
                let ps = probs(&row);
                assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for mode in [MaskMode::Verbatim, MaskMode::Renormalized] {
                    let e = masked_digit_expectation(&row, g, mode).unwrap();
                    assert!((0.0..=9.0).contains(&e));
                }
            }
            // the nearest neighbor of an edge digit carries most off-GT mass
            let ps = probs(&p.row(0));
            assert!(ps[1] >= ps[2]);
        }
    }

    #[test]
    fn bad_profiles() {
        assert!(SimProfile::new(SimKind::Naive, 0.0, 1.0).is_err());
        assert!(SimProfile::new(SimKind::Naive, 1.0, 1.0).is_err());
        assert!(SimProfile::new(SimKind::Adjacent, 0.5, 0.0).is_err());
    }

    fn cfg(kind: SimKind, start: (f64, f64), end: (f64, f64), mode: MaskMode) -> EmulationConfig {
        EmulationConfig {
            kind,
            start_prob: start.0,
            start_spread: start.1,
            end_prob: end.0,
            end_spread: end.1,
            steps: 200,
            batch: 16,
            seed: 42,
            mask_mode: mode,
        }
    }

    #[test]
    fn emulation_is_deterministic() {
        let c = cfg(
            SimKind::Adjacent,
            (0.3, 1.0),
            (0.9, 0.6),
            MaskMode::Verbatim,
        );
        let a = emulate_training(&c, uniform_grid_sampler(3)).unwrap();
        let b = emulate_training(&c, uniform_grid_sampler(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert!(a.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn flat_schedule_gives_flat_ce() {
        let c = cfg(SimKind::Naive, (0.4, 1.0), (0.4, 1.0), MaskMode::Verbatim);
        let series = emulate_training(&c, uniform_grid_sampler(3)).unwrap();
        let report = curve_report(&series, 100).unwrap();
        assert!(report.ratio_ce.unwrap().abs() < 1e-9);
    }

    #[test]
    fn naive_schedule_lowers_ce_but_not_ncm_star() {
        let c = cfg(SimKind::Naive, (0.15, 1.0), (0.9, 1.0), MaskMode::Verbatim);
        let report =
            curve_report(&emulate_training(&c, uniform_grid_sampler(3)).unwrap(), 100).unwrap();
        assert!(report.ratio_ce.unwrap() < -50.0);
        assert!(report.ratio_ncm_star.unwrap() > 0.0);
    }

    #[test]
    fn rejects_short_schedules() {
        let mut c = cfg(SimKind::Naive, (0.2, 1.0), (0.3, 1.0), MaskMode::Verbatim);
        c.steps = 1;
        assert!(emulate_training(&c, uniform_grid_sampler(2)).is_err());
    }
}
