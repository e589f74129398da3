//! Exact lookahead sampling for finite supports.
//!
//! `x_t` is drawn from `π_{t+Δ}(x_t | x_{0:t-1})`, obtained by summing the target over
//! every continuation `x_{t+1:t+Δ}`. The weight update is the ratio of the prefix
//! marginals `π_{t+Δ}(x_{0:t-1}) / π_{t+Δ-1}(x_{0:t-1})`.

use rayon::prelude::*;

use crate::error::{Result, SmcError};
use crate::model::{finite_support, Model, ModelSpec, ObservationSeq, Trajectory};
use crate::numeric::{log_sum_exp, sample_log_categorical};
use crate::particle::{check_population, PathOf, SystemOf};
use crate::rng::{SmcRng, StreamSet};

/// Largest number of continuations enumerated per candidate.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// `π_{t+Δ}(x_t | x_{0:t-1})` over the support at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LookaheadMarginal<S> {
    pub support: Vec<S>,
    pub probs: Vec<f64>,
    /// `log Σ_{x_{t:t+Δ}} π_{t+Δ} / π_{t-1}`.
    pub log_z: f64,
    /// `log Σ_{x_{t:t+Δ-1}} π_{t+Δ-1} / π_{t-1}`; zero when `Δ = 0`.
    pub log_z_prev: f64,
}

impl<S> LookaheadMarginal<S> {
    /// Log incremental weight of the exact lookahead step.
    pub fn log_weight_ratio(&self) -> f64 {
        if self.log_z == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.log_z - self.log_z_prev
    }
}

/// `log` of the total mass of all `depth`-step continuations from `carry` starting at `s`.
fn log_mass<M: Model>(model: &M, carry: &M::Carry, s: usize, depth: usize, ys: &ObservationSeq<M::Obs>) -> f64 {
    if depth == 0 {
        return 0.0;
    }
    let y = ys.at(s);
    let support = model.support(s, y).expect("finite support checked by caller");
    let v: Vec<f64> = support
        .iter()
        .map(|x| {
            let ext = model.extend(Some(carry), s, x, y);
            ext.log_increment() + log_mass(model, &ext.carry, s + 1, depth - 1, ys)
        })
        .collect();
    log_sum_exp(&v)
}

/// Exact `π_{t+Δ}(x_t | x_{0:t-1})` for the path `prefix` (which ends at `t-1`).
pub fn exact_lookahead_marginal<M: Model>(
    model: &M,
    prefix: &Trajectory<M::State, M::Carry>,
    ys: &ObservationSeq<M::Obs>,
    delta: usize,
) -> Result<LookaheadMarginal<M::State>> {
    let t = prefix.len();
    ys.check_horizon(t + delta)?;
    let support = finite_support(model, t, ys)?;
    let size = (support.len() as f64).powi(delta as i32);
    if size > ENUMERATION_LIMIT {
        return Err(SmcError::EnumerationLimit {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let y = ys.at(t);
    let prev = prefix.last_carry();
    let mut full = Vec::with_capacity(support.len());
    let mut short = Vec::with_capacity(support.len());
    for x in support.iter() {
        let ext = model.extend(prev, t, x, y);
        let inc = ext.log_increment();
        full.push(inc + log_mass(model, &ext.carry, t + 1, delta, ys));
        if delta > 0 {
            short.push(inc + log_mass(model, &ext.carry, t + 1, delta - 1, ys));
        }
    }
    let log_z = log_sum_exp(&full);
    let log_z_prev = if delta == 0 { 0.0 } else { log_sum_exp(&short) };
    let probs = if log_z.is_finite() {
        full.iter().map(|v| (v - log_z).exp()).collect()
    } else {
        vec![0.0; full.len()]
    };
    Ok(LookaheadMarginal {
        support: support.into_owned(),
        probs,
        log_z,
        log_z_prev,
    })
}

/// Draw `x_t ~ π_{t+Δ}(x_t | x_{0:t-1})` for every particle.
///
/// Returns the marginals used, for Rao-Blackwellised estimates.
pub fn exact_lookahead_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    delta: usize,
    rng: &mut SmcRng,
) -> Result<Vec<LookaheadMarginal<M::State>>> {
    let t = sys.path_len();
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    let out: Vec<(PathOf<M>, f64, LookaheadMarginal<M::State>)> = sys
        .paths
        .par_iter()
        .enumerate()
        .map(|(j, path)| {
            let marg = exact_lookahead_marginal(model, path, ys, delta)?;
            let logs: Vec<f64> = marg.probs.iter().map(|p| p.ln()).collect();
            let mut r = streams.stream(j);
            let i = sample_log_categorical(&logs, &mut r).unwrap_or(0);
            let x = marg.support[i].clone();
            let ext = model.extend(path.last_carry(), t, &x, ys.at(t));
            let ratio = marg.log_weight_ratio();
            Ok((path.push(x, ext.carry), ratio, marg))
        })
        .collect::<Result<_>>()?;
    let mut margs = Vec::with_capacity(out.len());
    for (j, (path, ratio, marg)) in out.into_iter().enumerate() {
        sys.paths[j] = path;
        sys.log_w[j] += ratio;
        margs.push(marg);
    }
    sys.log_aux = None;
    sys.log_res = None;
    check_population(&sys.log_w, t)?;
    Ok(margs)
}

/// Rao-Blackwellised estimate `Σ_j w_j Σ_i h(j, a_i) π(a_i | ·) / Σ_j w_j`.
pub fn rao_blackwell_estimate<S>(
    log_w: &[f64],
    marginals: &[LookaheadMarginal<S>],
    h: impl Fn(usize, &S) -> f64,
) -> f64 {
    let p = crate::numeric::normalize_log(log_w);
    p.iter()
        .zip(marginals)
        .enumerate()
        .filter(|(_, (w, _))| **w > 0.0)
        .map(|(j, (w, m))| {
            w * m
                .support
                .iter()
                .zip(&m.probs)
                .map(|(a, q)| q * h(j, a))
                .sum::<f64>()
        })
        .sum()
}
