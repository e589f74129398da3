//! Log-space helpers shared by the samplers.

use rand::Rng;

/// Numerically stable `log Σ exp(v)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log((1/n) Σ exp(v))`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}

/// Normalised probabilities from log-weights.
pub fn normalize_log(values: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values);
    values.iter().map(|v| (v - lse).exp()).collect()
}

/// Draw an index with probability proportional to `exp(log_weights)`.
/// Returns `None` when every weight is zero.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return None;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, lw) in log_weights.iter().enumerate() {
        let p = (lw - lse).exp();
        if p > 0.0 {
            last = Some(i);
        }
        acc += p;
        if u < acc {
            return Some(i);
        }
    }
    last
}

/// `log N(x; mean, var)`.
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

/// Weighted mean of `values` under `exp(log_weights)`.
pub fn weighted_mean(log_weights: &[f64], values: &[f64]) -> f64 {
    let p = normalize_log(log_weights);
    p.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Weighted variance of `values` under `exp(log_weights)`.
pub fn weighted_variance(log_weights: &[f64], values: &[f64]) -> f64 {
    let p = normalize_log(log_weights);
    let mean: f64 = p.iter().zip(values).map(|(p, v)| p * v).sum();
    p.iter().zip(values).map(|(p, v)| p * (v - mean).powi(2)).sum()
}
