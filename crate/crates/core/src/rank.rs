//! Agreement metrics: PLCC/SRCC, per-attribute correlation tables, attribute
//! ranking against MOS, and the numerical-sorting trial metrics.

use serde::{Deserialize, Serialize};

use crate::attributes::{Attribute, AttributeVector};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Two aligned series of equal length (at least 2), all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    x: Vec<f64>,
    y: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl PairedSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Usage(format!(
                "series lengths differ ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::Usage("correlation needs at least 2 pairs".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("paired series"));
        }
        Ok(Self { x, y, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.x.len() {
            return Err(Error::Usage(
                "label count differs from series length".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    let syy = pairwise_sum(&dy.iter().map(|d| d * d).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        let which = if sxx == 0.0 { "first" } else { "second" };
        return Err(Error::UndefinedCorrelation(format!(
            "{which} series is constant"
        )));
    }
    let sxy = pairwise_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson linear correlation coefficient.
pub fn plcc(s: &PairedSeries) -> Result<f64> {
    pearson(&s.x, &s.y)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn srcc(s: &PairedSeries) -> Result<f64> {
    pearson(&average_ranks(&s.x), &average_ranks(&s.y))
}

/// One numerical-sorting experiment: the numbers handed to the sorter and
/// the sequence it returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortTrial {
    pub gt: Vec<f64>,
    pub pred: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SortMetrics {
    pub accuracy: f64,
    pub recall: f64,
    pub hallucination: f64,
    /// False when `pred` was empty and hallucination is reported as 0.
    pub hallucination_defined: bool,
}

/// Accuracy/recall/hallucination of `pred` against a reference list.
///
/// `indices` holds the first position in `pred` of every reference element
/// that `pred` contains, in reference order; accuracy is `|indices| / |ref|`
/// when those positions are non-decreasing and 0 otherwise. Recall and
/// hallucination use set membership.
pub fn sequence_metrics(reference: &[f64], pred: &[f64]) -> Result<SortMetrics> {
    if reference.is_empty() {
        return Err(Error::Usage(
            "sorting trial has an empty ground truth".into(),
        ));
    }
    if reference.iter().chain(pred).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sorting trial"));
    }
    let indices: Vec<usize> = reference
        .iter()
        .filter_map(|x| pred.iter().position(|p| p == x))
        .collect();
    let sorted = indices.windows(2).all(|w| w[0] <= w[1]);
    let n_ref = reference.len() as f64;
    let accuracy = if sorted {
        indices.len() as f64 / n_ref
    } else {
        0.0
    };
    let recalled = reference.iter().filter(|x| pred.contains(x)).count();
    let (hallucination, hallucination_defined) = if pred.is_empty() {
        (0.0, false)
    } else {
        let foreign = pred.iter().filter(|p| !reference.contains(p)).count();
        (foreign as f64 / pred.len() as f64, true)
    };
    Ok(SortMetrics {
        accuracy,
        recall: recalled as f64 / n_ref,
        hallucination,
        hallucination_defined,
    })
}

/// Scores a sorting trial against the ascending sort of its ground truth.
pub fn sort_metrics(t: &SortTrial) -> Result<SortMetrics> {
    let mut reference = t.gt.clone();
    reference.sort_by(f64::total_cmp);
    sequence_metrics(&reference, &t.pred)
}

/// Mean accuracy, recall and hallucination over many trials.
pub fn mean_sort_metrics(results: &[SortMetrics]) -> Option<SortMetrics> {
    if results.is_empty() {
        return None;
    }
    let col = |f: fn(&SortMetrics) -> f64| {
        pairwise_sum(&results.iter().map(f).collect::<Vec<_>>()) / results.len() as f64
    };
    Some(SortMetrics {
        accuracy: col(|m| m.accuracy),
        recall: col(|m| m.recall),
        hallucination: col(|m| m.hallucination),
        hallucination_defined: results.iter().all(|m| m.hallucination_defined),
    })
}

/// SRCC/PLCC for one attribute column; `None` marks N.A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttributeCorrelation {
    pub attribute: Attribute,
    pub srcc: Option<f64>,
    pub plcc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeCorrTable {
    pub rows: Vec<AttributeCorrelation>,
    /// Means over the attributes that are not N.A.
    pub average_srcc: Option<f64>,
    pub average_plcc: Option<f64>,
}

fn column(vs: &[AttributeVector], attr: Attribute) -> Vec<f64> {
    vs.iter().map(|v| f64::from(v.get(attr))).collect()
}

fn mean_of_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Per-attribute agreement between predicted and ground-truth attributes.
pub fn per_attribute_corr(
    pred: &[AttributeVector],
    gt: &[AttributeVector],
) -> Result<AttributeCorrTable> {
    if pred.len() != gt.len() {
        return Err(Error::Usage(format!(
            "{} predicted vs {} ground-truth attribute records",
            pred.len(),
            gt.len()
        )));
    }
    let rows = Attribute::ALL
        .into_iter()
        .map(|attr| {
            let s = PairedSeries::new(column(pred, attr), column(gt, attr))?;
            Ok(AttributeCorrelation {
                attribute: attr,
                srcc: srcc(&s).ok(),
                plcc: plcc(&s).ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttributeCorrTable {
        average_srcc: mean_of_present(rows.iter().map(|r| r.srcc)),
        average_plcc: mean_of_present(rows.iter().map(|r| r.plcc)),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeRanking {
    /// `(attribute, pearson r)` sorted by `|r|` descending.
    pub top: Vec<(Attribute, f64)>,
    /// Attributes whose coded column is constant.
    pub skipped: Vec<Attribute>,
}

/// Pearson correlation of every coded attribute with MOS, strongest first.
pub fn attr_mos_ranking(
    attrs: &[AttributeVector],
    mos: &[f64],
    k: usize,
) -> Result<AttributeRanking> {
    let mut scored = Vec::new();
    let mut skipped = Vec::new();
    for attr in Attribute::ALL {
        let s = PairedSeries::new(column(attrs, attr), mos.to_vec())?;
        match plcc(&s) {
            Ok(r) => scored.push((attr, r)),
            Err(Error::UndefinedCorrelation(_)) => skipped.push(attr),
            Err(e) => return Err(e),
        }
    }
    // stable sort keeps attribute order among equal magnitudes
    scored.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    scored.truncate(k);
    Ok(AttributeRanking {
        top: scored,
        skipped,
    })
}
