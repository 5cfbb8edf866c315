//! Small numeric helpers shared by the metric modules.

/// Pairwise (cascade) summation with a fixed split tree, so a reduction gives
/// the same bits no matter how the caller schedules the work that produced
/// the terms.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// `ln Σ exp(x)` with max subtraction.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_integers() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(mean(&v), 50.5);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let big = [1000.0, 1000.0];
        assert!((log_sum_exp(big.iter().copied()) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let flat = [0.0; 10];
        assert!((log_sum_exp(flat.iter().copied()) - 10f64.ln()).abs() < 1e-12);
    }
}
