//! The per-repetition filtering loop shared by every experiment.

use crate::error::Result;
use crate::lookahead::{OutcomeOf, Strategy};
use crate::model::{Model, ModelSpec, ObservationSeq};
use crate::particle::{ParticleSystem, ResamplePolicy, SystemOf};
use crate::rng::SmcRng;

/// Estimates of `x_s` for `s = 1..=T`, one series per lag.
pub struct FilterTrace<E> {
    /// `estimates[i][s]`; index 0 is unused.
    pub estimates: Vec<Vec<Option<E>>>,
    pub ess: Vec<f64>,
    pub deltas: Vec<usize>,
    pub evaluations: Vec<usize>,
}

impl<E> FilterTrace<E> {
    pub fn mean_ess(&self) -> f64 {
        self.ess.iter().sum::<f64>() / self.ess.len().max(1) as f64
    }

    pub fn mean_delta(&self) -> f64 {
        self.deltas.iter().sum::<usize>() as f64 / self.deltas.len().max(1) as f64
    }

    pub fn mean_evaluations(&self) -> f64 {
        self.evaluations.iter().sum::<usize>() as f64 / self.evaluations.len().max(1) as f64
    }

    /// Series for lag index `i` with every `s ≥ 1` filled.
    pub fn series(&self, i: usize) -> Vec<&E> {
        self.estimates[i][1..].iter().map(|e| e.as_ref().expect("filled at the last step")).collect()
    }
}

/// Run `strategy` over `ys` with `m` particles.
///
/// After each step, and before resampling, `estimate(sys, outcome, s)` is called for
/// `s = t - δ` at each lag `δ`. At the last step the remaining `s > T - δ` are filled
/// from the final weights.
pub fn run_filter<M, E>(
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    strategy: &Strategy,
    policy: &ResamplePolicy,
    m: usize,
    lags: &[usize],
    rng: &mut SmcRng,
    estimate: impl Fn(&SystemOf<M>, &OutcomeOf<M>, usize) -> Result<E>,
) -> Result<FilterTrace<E>>
where
    M: Model,
{
    let horizon = ys.horizon();
    let mut sys: SystemOf<M> = ParticleSystem::new(m);
    // The strategy also draws x_0: exact lookahead needs weights proper for π_Δ from the start.
    strategy.advance(&mut sys, spec, ys, rng)?;
    let mut trace = FilterTrace {
        estimates: lags.iter().map(|_| (0..=horizon).map(|_| None).collect()).collect(),
        ess: Vec::with_capacity(horizon),
        deltas: Vec::with_capacity(horizon),
        evaluations: Vec::with_capacity(horizon),
    };
    for t in 1..=horizon {
        let outcome = strategy.advance(&mut sys, spec, ys, rng)?;
        trace.ess.push(sys.ess(outcome.resample_track));
        trace.deltas.push(outcome.delta);
        trace.evaluations.push(outcome.evaluations);
        for (i, &lag) in lags.iter().enumerate() {
            let times = if t == horizon {
                t.saturating_sub(lag).max(1)..=t
            } else if t > lag {
                t - lag..=t - lag
            } else {
                continue;
            };
            for s in times {
                if trace.estimates[i][s].is_none() {
                    trace.estimates[i][s] = Some(estimate(&sys, &outcome, s)?);
                }
            }
        }
        if t < horizon {
            policy.apply(&mut sys, outcome.resample_track, rng)?;
        }
    }
    Ok(trace)
}
