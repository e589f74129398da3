//! Delayed (lookahead) weighting.
//!
//! Paths are propagated to `t+Δ` with ordinary SIS; the weight of `x_{0:t+Δ}` is
//! proper for `π_{t+Δ}`, so summaries of the prefix `x_{0:t}` read from the same
//! weights are proper for the lookahead marginal.

use crate::error::{Result, SmcError};
use crate::model::{Model, ModelSpec, ObservationSeq};
use crate::particle::{sis_step, ParticleSystem, SystemOf, WeightTrack};
use crate::rng::SmcRng;

/// Extend every path by one state; identical to [`sis_step`].
pub fn lookahead_weighting_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    rng: &mut SmcRng,
) -> Result<()> {
    sis_step(sys, spec, ys, rng)
}

/// Weighted estimate of `h(x_{n-1-lag})` where `n` is the current path length.
pub fn delayed_estimate<S: Clone, C: Clone>(
    sys: &ParticleSystem<S, C>,
    lag: usize,
    track: WeightTrack,
    h: impl Fn(&S) -> f64,
) -> Result<f64> {
    let n = sys.path_len();
    if lag >= n {
        return Err(SmcError::LagExceedsHistory { lag, depth: n });
    }
    let time = n - 1 - lag;
    Ok(sys.estimate(track, |p| h(p.state_at(time).expect("paths share one length"))))
}

/// Weighted mode of `x_{n-1-lag}` for discrete states.
pub fn delayed_mode<S: Clone + PartialEq, C: Clone>(
    sys: &ParticleSystem<S, C>,
    lag: usize,
    track: WeightTrack,
) -> Result<S> {
    let n = sys.path_len();
    if lag >= n {
        return Err(SmcError::LagExceedsHistory { lag, depth: n });
    }
    let time = n - 1 - lag;
    sys.weighted_mode(track, |p| p.state_at(time).cloned().expect("paths share one length"))
        .ok_or(SmcError::DegeneratePopulation { t: time })
}
