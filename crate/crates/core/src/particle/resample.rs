//! Resampling with priority scores.
//!
//! A scheme turns log priority scores `log α_j` into ancestor indices. Each copy of
//! ancestor `j` then carries `w_j / α_j` on every weight track, times a per-copy
//! factor that is 1 for the unbiased schemes and the retained mass for the
//! optimal finite scheme.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::numeric::normalize_log;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleScheme {
    Multinomial,
    Residual,
    Stratified,
    Systematic,
    /// Fearnhead–Clifford optimal resampling; copies have distinct ancestors.
    OptimalFinite,
}

/// One output slot of a resampling pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub ancestor: usize,
    /// Log factor multiplied into `w / α` for this copy.
    pub log_factor: f64,
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = c.last_mut() {
        *last = 1.0;
    }
    c
}

/// Map sorted points in `[0, 1)` to indices through the cumulative sum.
fn invert_sorted(cum: &[f64], points: &[f64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(points.len());
    let mut j = 0;
    for &u in points {
        while j + 1 < cum.len() && u >= cum[j] {
            j += 1;
        }
        out.push(j);
    }
    out
}

fn multinomial<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let cum = cumulative(probs);
    let mut u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    invert_sorted(&cum, &u)
}

fn stratified<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let cum = cumulative(probs);
    let u: Vec<f64> = (0..n).map(|k| (k as f64 + rng.gen::<f64>()) / n as f64).collect();
    invert_sorted(&cum, &u)
}

fn systematic<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let cum = cumulative(probs);
    let u0: f64 = rng.gen();
    let u: Vec<f64> = (0..n).map(|k| (k as f64 + u0) / n as f64).collect();
    invert_sorted(&cum, &u)
}

fn residual<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut rest = Vec::with_capacity(probs.len());
    for (j, p) in probs.iter().enumerate() {
        let e = n as f64 * p;
        let k = e.floor() as usize;
        out.extend(std::iter::repeat(j).take(k));
        rest.push(e - k as f64);
    }
    let left = n - out.len().min(n);
    out.truncate(n);
    if left > 0 {
        let total: f64 = rest.iter().sum();
        let rest: Vec<f64> = rest.iter().map(|r| r / total).collect();
        out.extend(multinomial(&rest, left, rng));
        out.sort_unstable();
    }
    out
}

/// Threshold `c` with `Σ min(p_i / c, 1) = n`, found by bisection.
pub fn optimal_threshold(probs: &[f64], n: usize) -> f64 {
    let positive = probs.iter().filter(|p| **p > 0.0).count();
    if positive <= n {
        return 0.0;
    }
    let count = |c: f64| probs.iter().map(|p| (p / c).min(1.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // count is decreasing in c; count(hi) <= 1 <= n.
    while hi - lo > 1e-12 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || mid == lo || mid == hi {
            break;
        }
        if count(mid) > n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn optimal_finite<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<Selection> {
    let c = optimal_threshold(probs, n);
    if c == 0.0 {
        let mut out: Vec<Selection> = probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(j, p)| Selection {
                ancestor: j,
                log_factor: p.ln(),
            })
            .collect();
        // Pad with zero-mass copies when fewer positive particles than slots.
        while out.len() < n {
            out.push(Selection {
                ancestor: out.first().map_or(0, |s| s.ancestor),
                log_factor: f64::NEG_INFINITY,
            });
        }
        return out;
    }
    let mut out = Vec::with_capacity(n);
    let mut small = Vec::new();
    for (j, &p) in probs.iter().enumerate() {
        if p >= c {
            out.push(Selection {
                ancestor: j,
                log_factor: p.ln(),
            });
        } else if p > 0.0 {
            small.push(j);
        }
    }
    let need = n - out.len();
    if need > 0 {
        // Stratified draw over the small particles: each is kept with probability p / c.
        let mass: f64 = small.iter().map(|&j| probs[j]).sum();
        let step = mass / need as f64;
        let u0: f64 = rng.gen::<f64>() * step;
        let mut acc = 0.0;
        let mut k = 0;
        for &j in &small {
            acc += probs[j];
            while k < need && u0 + k as f64 * step < acc {
                out.push(Selection {
                    ancestor: j,
                    log_factor: c.ln(),
                });
                k += 1;
            }
        }
        while k < need {
            let j = *small.last().unwrap();
            out.push(Selection {
                ancestor: j,
                log_factor: c.ln(),
            });
            k += 1;
        }
    }
    out.sort_by_key(|s| s.ancestor);
    out
}

/// Draw `n` selections from log priority scores.
pub fn select<R: Rng + ?Sized>(
    log_scores: &[f64],
    n: usize,
    scheme: ResampleScheme,
    rng: &mut R,
) -> Result<Vec<Selection>> {
    if log_scores.is_empty() || log_scores.iter().all(|s| *s == f64::NEG_INFINITY) {
        return Err(SmcError::DegeneratePopulation { t: 0 });
    }
    if log_scores.iter().any(|s| s.is_nan() || *s == f64::INFINITY) {
        return Err(SmcError::Numerical("non-finite priority score".into()));
    }
    let probs = normalize_log(log_scores);
    let plain = |idx: Vec<usize>| {
        idx.into_iter()
            .map(|ancestor| Selection {
                ancestor,
                log_factor: 0.0,
            })
            .collect()
    };
    Ok(match scheme {
        ResampleScheme::Multinomial => plain(multinomial(&probs, n, rng)),
        ResampleScheme::Residual => plain(residual(&probs, n, rng)),
        ResampleScheme::Stratified => plain(stratified(&probs, n, rng)),
        ResampleScheme::Systematic => plain(systematic(&probs, n, rng)),
        ResampleScheme::OptimalFinite => optimal_finite(&probs, n, rng),
    })
}
