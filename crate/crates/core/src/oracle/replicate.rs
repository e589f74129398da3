//! Independent replicates and their moment summaries.

use rayon::prelude::*;

use crate::rng::{derive_seed, seeded, SmcRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateSummary {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

/// Run `f` on `reps` independent streams derived from `seed`; results are in replicate order.
pub fn replicate<T: Send>(reps: usize, seed: u64, f: impl Fn(&mut SmcRng) -> T + Sync) -> Vec<T> {
    (0..reps)
        .into_par_iter()
        .map(|r| f(&mut seeded(derive_seed(seed, r as u64))))
        .collect()
}

/// Mean, unbiased variance and their standard errors.
pub fn summarize(x: &[f64]) -> ReplicateSummary {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    ReplicateSummary {
        mean,
        variance,
        se_mean: (variance / n).sqrt(),
        se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Per-component summaries of vector-valued replicates.
pub fn replicate_variance(reps: usize, seed: u64, f: impl Fn(&mut SmcRng) -> Vec<f64> + Sync) -> Vec<ReplicateSummary> {
    let rows = replicate(reps, seed, f);
    let width = rows.first().map_or(0, |r| r.len());
    (0..width)
        .map(|c| summarize(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect()
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `var(a) - var(b)` for paired replicates, with a jackknife standard error.
pub fn variance_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let full = sample_variance(a) - sample_variance(b);
    let leave: Vec<f64> = (0..n)
        .map(|i| {
            let ai: Vec<f64> = a.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
            let bi: Vec<f64> = b.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
            sample_variance(&ai) - sample_variance(&bi)
        })
        .collect();
    let lm = leave.iter().sum::<f64>() / n as f64;
    let se = ((n as f64 - 1.0) / n as f64 * leave.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
    (full, se)
}

/// Mean of paired differences `a - b` and its standard error.
pub fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = summarize(&d);
    (s.mean, s.se_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn summary_of_known_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn replicates_are_reproducible() {
        let a = replicate(8, 3, |r| r.gen::<f64>());
        let b = replicate(8, 3, |r| r.gen::<f64>());
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn variance_difference_sign() {
        let a: Vec<f64> = (0..50).map(|i| (i % 7) as f64 * 2.0).collect();
        let b: Vec<f64> = (0..50).map(|i| (i % 7) as f64).collect();
        let (d, se) = variance_difference(&a, &b);
        assert!(d > 0.0 && se > 0.0);
        assert!((d - 3.0 * sample_variance(&b)).abs() < 1e-9);
    }
}
