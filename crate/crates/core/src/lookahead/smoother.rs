//! Piecewise-constant smoothing of future lookahead weights.
//!
//! Future weights from all particles and candidates are pooled, binned on a key
//! (the state, or a summary such as a Kalman mean) and replaced by their bin average.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numeric::log_mean_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinSpec {
    /// Fixed bin width in every key coordinate, anchored at the smallest key.
    Width(f64),
    /// Fixed number of bins per coordinate spanning the key range.
    Count(usize),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Width(0.5)
    }
}

/// Fitted bin averages, stored as log means.
#[derive(Debug, Clone)]
pub struct PooledSmoother {
    origin: Vec<f64>,
    widths: Vec<f64>,
    counts: Option<usize>,
    bins: BTreeMap<Vec<i64>, f64>,
    global: f64,
}

impl PooledSmoother {
    /// Fit on `keys` with log values `log_values`.
    pub fn fit(keys: &[Vec<f64>], log_values: &[f64], spec: BinSpec) -> Self {
        let dim = keys.first().map_or(0, |k| k.len());
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for k in keys {
            for d in 0..dim {
                lo[d] = lo[d].min(k[d]);
                hi[d] = hi[d].max(k[d]);
            }
        }
        let (widths, counts) = match spec {
            BinSpec::Width(w) => (vec![w; dim], None),
            BinSpec::Count(n) => (
                (0..dim)
                    .map(|d| {
                        let span = hi[d] - lo[d];
                        if span > 0.0 {
                            span / n as f64
                        } else {
                            1.0
                        }
                    })
                    .collect(),
                Some(n),
            ),
        };
        let mut smoother = PooledSmoother {
            origin: lo,
            widths,
            counts,
            bins: BTreeMap::new(),
            global: log_mean_exp(log_values),
        };
        let mut groups: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
        for (k, v) in keys.iter().zip(log_values) {
            groups.entry(smoother.bin_of(k)).or_default().push(*v);
        }
        smoother.bins = groups.into_iter().map(|(b, v)| (b, log_mean_exp(&v))).collect();
        smoother
    }

    fn bin_of(&self, key: &[f64]) -> Vec<i64> {
        key.iter()
            .enumerate()
            .map(|(d, x)| {
                let i = ((x - self.origin[d]) / self.widths[d]).floor() as i64;
                match self.counts {
                    Some(n) => i.clamp(0, n as i64 - 1),
                    None => i,
                }
            })
            .collect()
    }

    /// Log of the smoothed value at `key`; unseen bins fall back to the pooled mean.
    pub fn predict(&self, key: &[f64]) -> f64 {
        self.bins.get(&self.bin_of(key)).copied().unwrap_or(self.global)
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }
}
