//! Attribute weighting by single-response partial least squares (PLS1) and
//! the composite score built from it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::attributes::{Attribute, AttributeVector, ATTRIBUTE_COUNT};
use crate::error::{Error, Result};
use crate::score::{normalize, QuantizerConfig};

pub const DEFAULT_COMPONENTS: usize = 3;

/// Relative threshold below which a residual counts as zero.
const RESIDUAL_EPS: f64 = 1e-12;

/// Linear model `y ≈ intercept + coefficients · x` from a PLS1 fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub x_means: Vec<f64>,
    pub y_mean: f64,
    /// Components actually extracted. Fewer than requested only when the
    /// response residual vanished first.
    pub components: usize,
}

impl PlsFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }
}

/// NIPALS PLS1 with `k` components on the rows of `x`.
pub fn fit_pls(x: &[Vec<f64>], y: &[f64], k: usize) -> Result<PlsFit> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Usage(format!("PLS needs at least 2 rows, got {n}")));
    }
    if y.len() != n {
        return Err(Error::Usage(format!(
            "{n} feature rows but {} targets",
            y.len()
        )));
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::Usage(
            "feature rows must share a non-zero width".into(),
        ));
    }
    if k == 0 || k > p {
        return Err(Error::Usage(format!("component count {k} outside 1..={p}")));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PLS input"));
    }

    let mut xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let mut yv = DVector::from_column_slice(y);
    let x_means: Vec<f64> = (0..p).map(|j| xm.column(j).mean()).collect();
    let y_mean = yv.mean();
    for (j, mu) in x_means.iter().enumerate() {
        xm.column_mut(j).add_scalar_mut(-mu);
    }
    yv.add_scalar_mut(-y_mean);

    let x_scale = xm.norm();
    let y_scale = yv.norm();
    let mut ws = Vec::with_capacity(k);
    let mut ps = Vec::with_capacity(k);
    let mut qs = Vec::with_capacity(k);
    for extracted in 0..k {
        if yv.norm() <= RESIDUAL_EPS * y_scale.max(f64::MIN_POSITIVE) || y_scale == 0.0 {
            break;
        }
        let w = xm.tr_mul(&yv);
        let w_norm = w.norm();
        if w_norm <= RESIDUAL_EPS * x_scale * yv.norm() {
            return Err(Error::ComponentsExhausted {
                requested: k,
                achieved: extracted,
            });
        }
        let w = w / w_norm;
        let t = &xm * &w;
        let tt = t.norm_squared();
        let p_load = xm.tr_mul(&t) / tt;
        let q = yv.dot(&t) / tt;
        xm -= &t * p_load.transpose();
        yv -= &t * q;
        ws.push(w);
        ps.push(p_load);
        qs.push(q);
    }

    let components = ws.len();
    let coefficients = if components == 0 {
        vec![0.0; p]
    } else {
        let w = DMatrix::from_columns(&ws);
        let pm = DMatrix::from_columns(&ps);
        let q = DVector::from_vec(qs);
        let ptw = pm.tr_mul(&w);
        let inv = ptw
            .try_inverse()
            .ok_or_else(|| Error::ComponentsExhausted {
                requested: k,
                achieved: components.saturating_sub(1),
            })?;
        (w * inv * q).iter().copied().collect()
    };
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok(PlsFit {
        coefficients,
        intercept,
        x_means,
        y_mean,
        components,
    })
}

/// Optional affine rescale of composites onto the digit grid, fixed by the
/// training-set composite range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescale {
    pub lo: f64,
    pub hi: f64,
    pub m: usize,
}

/// Persisted composite model over the coded attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub k: usize,
    pub x_means: Vec<f64>,
    pub y_mean: f64,
    pub rescale: Option<Rescale>,
    pub attribute_order: Vec<String>,
}

impl CompositeModel {
    /// Fits weights against `y`. With `rescale_m`, composites are later mapped
    /// onto the `m`-digit grid using the training composite range.
    pub fn fit(
        attrs: &[AttributeVector],
        y: &[f64],
        k: usize,
        rescale_m: Option<usize>,
    ) -> Result<Self> {
        let x: Vec<Vec<f64>> = attrs.iter().map(|a| a.as_features().to_vec()).collect();
        let fit = fit_pls(&x, y, k)?;
        let mut model = Self {
            weights: fit.coefficients,
            intercept: fit.intercept,
            k: fit.components,
            x_means: fit.x_means,
            y_mean: fit.y_mean,
            rescale: None,
            attribute_order: Attribute::ALL.iter().map(|a| a.key().to_string()).collect(),
        };
        if let Some(m) = rescale_m {
            let raw: Vec<f64> = attrs.iter().map(|a| model.raw(a)).collect();
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            QuantizerConfig::new(m, lo, hi)?;
            model.rescale = Some(Rescale { lo, hi, m });
        }
        Ok(model)
    }

    /// Checks a deserialized model for shape and finiteness.
    pub fn validate(&self) -> Result<()> {
        let expected: Vec<&str> = Attribute::ALL.iter().map(|a| a.key()).collect();
        if self.attribute_order != expected {
            return Err(Error::Config(format!(
                "attribute_order must be {expected:?}"
            )));
        }
        if self.weights.len() != ATTRIBUTE_COUNT || self.x_means.len() != ATTRIBUTE_COUNT {
            return Err(Error::Config(format!(
                "weights and x_means need {ATTRIBUTE_COUNT} entries"
            )));
        }
        if self.k > ATTRIBUTE_COUNT {
            return Err(Error::Config(format!(
                "k = {} exceeds {ATTRIBUTE_COUNT}",
                self.k
            )));
        }
        let finite = self
            .weights
            .iter()
            .chain(&self.x_means)
            .chain([&self.intercept, &self.y_mean])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameters"));
        }
        if let Some(r) = self.rescale {
            QuantizerConfig::new(r.m, r.lo, r.hi)?;
        }
        Ok(())
    }

    /// `intercept + weights · a`, before any rescale.
    pub fn raw(&self, a: &AttributeVector) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(a.as_features())
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

/// Composite score of `a`; rescaled onto the grid range when the model
/// carries a rescale, clamping to the training range first.
pub fn composite(model: &CompositeModel, a: &AttributeVector) -> Result<f64> {
    let raw = model.raw(a);
    match model.rescale {
        None => Ok(raw),
        Some(r) => normalize(
            raw.clamp(r.lo, r.hi),
            &QuantizerConfig::new(r.m, r.lo, r.hi)?,
        ),
    }
}
