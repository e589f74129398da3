//! Forward-backward smoothing for Markovian finite models.

use crate::error::{Result, SmcError};
use crate::model::{finite_support, Model, ObservationSeq};
use crate::numeric::{log_sum_exp, normalize_log};

struct Lattice<'a, M: Model> {
    model: &'a M,
    ys: &'a ObservationSeq<M::Obs>,
    states: Vec<M::State>,
    carries: Vec<M::Carry>,
}

impl<'a, M: Model> Lattice<'a, M> {
    fn new(model: &'a M, ys: &'a ObservationSeq<M::Obs>, n: usize) -> Result<Self> {
        if !model.is_markovian() {
            return Err(SmcError::NotMarkovian);
        }
        ys.check_horizon(n)?;
        let states = finite_support(model, 0, ys)?.into_owned();
        for s in 1..=n {
            if finite_support(model, s, ys)?.as_ref() != states.as_slice() {
                return Err(SmcError::Config("forward-backward needs a time-invariant support".into()));
            }
        }
        let carries = states
            .iter()
            .map(|x| model.markov_carry(x).ok_or(SmcError::NotMarkovian))
            .collect::<Result<_>>()?;
        Ok(Lattice {
            model,
            ys,
            states,
            carries,
        })
    }

    /// `log g_s(b | a) + log f_s(y_s | b)`; `a = None` at `s = 0`.
    fn step(&self, s: usize, a: Option<usize>, b: usize) -> f64 {
        self.model
            .extend(a.map(|a| &self.carries[a]), s, &self.states[b], self.ys.at(s))
            .log_increment()
    }

    /// `log p(y_{t+1:n} | x_t)` for each state.
    fn backward(&self, t: usize, n: usize) -> Vec<f64> {
        let k = self.states.len();
        let mut beta = vec![0.0; k];
        for s in (t + 1..=n).rev() {
            beta = (0..k)
                .map(|a| {
                    let v: Vec<f64> = (0..k).map(|b| self.step(s, Some(a), b) + beta[b]).collect();
                    log_sum_exp(&v)
                })
                .collect();
        }
        beta
    }
}

/// `P(x_t | x_{t-1} = prev, y_{1:t+Δ})` over the support; `prev` is `None` at `t = 0`.
pub fn forward_backward_conditional<M: Model>(
    model: &M,
    ys: &ObservationSeq<M::Obs>,
    prev: Option<&M::State>,
    t: usize,
    delta: usize,
) -> Result<Vec<f64>> {
    let lattice = Lattice::new(model, ys, t + delta)?;
    let a = match prev {
        Some(p) => Some(
            lattice
                .states
                .iter()
                .position(|s| s == p)
                .ok_or_else(|| SmcError::Config("previous state outside the support".into()))?,
        ),
        None => None,
    };
    let beta = lattice.backward(t, t + delta);
    let joint: Vec<f64> = (0..lattice.states.len()).map(|b| lattice.step(t, a, b) + beta[b]).collect();
    Ok(normalize_log(&joint))
}

/// `P(x_t | y_{1:t+Δ})` over the support at `t`.
pub fn forward_backward<M: Model>(model: &M, ys: &ObservationSeq<M::Obs>, t: usize, delta: usize) -> Result<Vec<f64>> {
    let lattice = Lattice::new(model, ys, t + delta)?;
    let k = lattice.states.len();
    let mut alpha: Vec<f64> = (0..k).map(|b| lattice.step(0, None, b)).collect();
    for s in 1..=t {
        alpha = (0..k)
            .map(|b| {
                let v: Vec<f64> = (0..k).map(|a| alpha[a] + lattice.step(s, Some(a), b)).collect();
                log_sum_exp(&v)
            })
            .collect();
    }
    let beta = lattice.backward(t, t + delta);
    let joint: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| a + b).collect();
    Ok(normalize_log(&joint))
}
