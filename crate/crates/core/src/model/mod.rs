//! State-space model abstraction.
//!
//! A model describes `π_t(x_{0:t}) ∝ Π_s g_s(x_s | x_{0:s-1}) f_s(y_s | x_{0:s})`
//! through [`Model::extend`], which consumes the carry summarising `x_{0:t-1}` and
//! returns both log-factors at `t` plus the carry after `x_t`. Markovian models carry
//! only the last state; mixture models carry a Kalman belief.

pub mod path;
pub mod proposal;
pub mod spec;

use std::borrow::Cow;
use std::fmt::Debug;

use crate::error::{Result, SmcError};
use crate::rng::SmcRng;

pub use crate::numeric::{log_sum_exp, normalize_log};

pub use path::Trajectory;
pub use proposal::{PosteriorProposal, PriorProposal, Proposal};
pub use spec::ModelSpec;

/// Log-factors contributed by one new state, and the resulting carry.
#[derive(Debug, Clone)]
pub struct Extension<C> {
    pub log_transition: f64,
    pub log_observation: f64,
    pub carry: C,
}

impl<C> Extension<C> {
    /// `log π_t(x_{0:t}) - log π_{t-1}(x_{0:t-1})` up to a constant.
    pub fn log_increment(&self) -> f64 {
        self.log_transition + self.log_observation
    }
}

pub trait Model: Send + Sync {
    type State: Clone + PartialEq + Debug + Send + Sync;
    type Obs: Send + Sync;
    type Carry: Clone + Send + Sync;

    /// Draw `x_t ~ g_t(· | x_{0:t-1})`; `prev` is `None` at `t = 0`.
    fn sample_transition(&self, prev: Option<&Self::Carry>, t: usize, rng: &mut SmcRng) -> Self::State;

    /// Append `x_t`. `y` is `None` when no observation exists at `t`.
    fn extend(
        &self,
        prev: Option<&Self::Carry>,
        t: usize,
        x: &Self::State,
        y: Option<&Self::Obs>,
    ) -> Extension<Self::Carry>;

    fn log_transition(&self, prev: Option<&Self::Carry>, t: usize, x: &Self::State) -> f64 {
        self.extend(prev, t, x, None).log_transition
    }

    /// Finite support of `x_t`, if any.
    fn support(&self, _t: usize, _y: Option<&Self::Obs>) -> Option<Cow<'_, [Self::State]>> {
        None
    }

    /// True when `g_t` and `f_t` depend on the path only through `(x_{t-1}, x_t)`.
    fn is_markovian(&self) -> bool {
        false
    }

    /// The carry of any path ending in `x`, for Markovian models.
    fn markov_carry(&self, _x: &Self::State) -> Option<Self::Carry> {
        None
    }

    /// Coordinates on which future lookahead weights are smoothed.
    fn smoothing_key(&self, _x: &Self::State, _carry: &Self::Carry) -> Option<Vec<f64>> {
        None
    }

    /// Scalar whose spread drives the variance stopping rule of adaptive lookahead.
    fn summary_scalar(&self, _x: &Self::State, _carry: &Self::Carry) -> Option<f64> {
        None
    }

    /// Index of the candidate maximising `π_t(x_t | x_{0:t-1})`; ties go to the lowest index.
    fn greedy_choice(
        &self,
        prev: Option<&Self::Carry>,
        t: usize,
        y: Option<&Self::Obs>,
        candidates: &[Self::State],
    ) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, x) in candidates.iter().enumerate() {
            let v = self.extend(prev, t, x, y).log_increment();
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }
}

/// Observations `y_1..y_T`; time 0 carries no observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeq<O> {
    values: Vec<O>,
}

impl<O> ObservationSeq<O> {
    pub fn new(values: Vec<O>) -> Self {
        ObservationSeq { values }
    }

    /// The final time index `T`.
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, t: usize) -> Option<&O> {
        if t == 0 {
            None
        } else {
            self.values.get(t - 1)
        }
    }

    pub fn values(&self) -> &[O] {
        &self.values
    }

    pub fn check_horizon(&self, needed: usize) -> Result<()> {
        if needed > self.horizon() {
            Err(SmcError::HorizonExceeded {
                needed,
                available: self.horizon(),
            })
        } else {
            Ok(())
        }
    }
}

/// Support of `x_t`, or an error for continuous models.
pub fn finite_support<'a, M: Model>(
    model: &'a M,
    t: usize,
    ys: &ObservationSeq<M::Obs>,
) -> Result<Cow<'a, [M::State]>> {
    model.support(t, ys.at(t)).ok_or(SmcError::NotFinite { t })
}

/// Extend `path` by `x`, returning the new path and the log-increment at its time.
pub fn grow<M: Model>(
    model: &M,
    path: &Trajectory<M::State, M::Carry>,
    x: M::State,
    ys: &ObservationSeq<M::Obs>,
) -> (Trajectory<M::State, M::Carry>, f64) {
    let t = path.len();
    let ext = model.extend(path.last_carry(), t, &x, ys.at(t));
    let inc = ext.log_increment();
    (path.push(x, ext.carry), inc)
}

/// `log π_t(x_{0:t}) - log π_{t-1}(x_{0:t-1})` for the path `prefix` extended by `x`.
pub fn log_target_increment<M: Model>(
    model: &M,
    prefix: &Trajectory<M::State, M::Carry>,
    x: &M::State,
    ys: &ObservationSeq<M::Obs>,
) -> f64 {
    let t = prefix.len();
    model.extend(prefix.last_carry(), t, x, ys.at(t)).log_increment()
}

/// Log of the SIS incremental weight `π_t / (π_{t-1} q_t)`.
pub fn incremental_log_weight(log_increment: f64, log_trial: f64, t: usize) -> Result<f64> {
    if log_trial == f64::NEG_INFINITY || log_trial.is_nan() {
        return Err(SmcError::ImproperTrial { t });
    }
    Ok(log_increment - log_trial)
}

/// Full log target `log π_t(x_{0:t})` (unnormalised) of a state sequence.
pub fn log_target<M: Model>(model: &M, states: &[M::State], ys: &ObservationSeq<M::Obs>) -> f64 {
    let mut path = Trajectory::empty();
    let mut total = 0.0;
    for x in states {
        let (p, inc) = grow(model, &path, x.clone(), ys);
        total += inc;
        path = p;
    }
    total
}
