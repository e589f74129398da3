//! Trial distributions `q_t(x_t | x_{0:t-1})`.

use super::Model;
use crate::numeric::{log_sum_exp, sample_log_categorical};
use crate::rng::SmcRng;

pub trait Proposal<M: Model>: Send + Sync {
    fn sample(
        &self,
        model: &M,
        prev: Option<&M::Carry>,
        t: usize,
        y: Option<&M::Obs>,
        rng: &mut SmcRng,
    ) -> M::State;

    fn log_density(
        &self,
        model: &M,
        prev: Option<&M::Carry>,
        t: usize,
        y: Option<&M::Obs>,
        x: &M::State,
    ) -> f64;

    fn sample_with_log_density(
        &self,
        model: &M,
        prev: Option<&M::Carry>,
        t: usize,
        y: Option<&M::Obs>,
        rng: &mut SmcRng,
    ) -> (M::State, f64) {
        let x = self.sample(model, prev, t, y, rng);
        let lq = self.log_density(model, prev, t, y, &x);
        (x, lq)
    }
}

/// The state transition `g_t` itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct PriorProposal;

impl<M: Model> Proposal<M> for PriorProposal {
    fn sample(&self, model: &M, prev: Option<&M::Carry>, t: usize, _y: Option<&M::Obs>, rng: &mut SmcRng) -> M::State {
        model.sample_transition(prev, t, rng)
    }

    fn log_density(&self, model: &M, prev: Option<&M::Carry>, t: usize, _y: Option<&M::Obs>, x: &M::State) -> f64 {
        model.log_transition(prev, t, x)
    }
}

/// One-step posterior `π_t(x_t | x_{0:t-1}) ∝ g_t f_t`, computed by enumerating the support.
///
/// Panics when the model has no finite support at the requested time.
#[derive(Debug, Clone, Copy, Default)]
pub struct PosteriorProposal;

fn posterior_logs<M: Model>(model: &M, prev: Option<&M::Carry>, t: usize, y: Option<&M::Obs>) -> (Vec<M::State>, Vec<f64>) {
    let support = model
        .support(t, y)
        .unwrap_or_else(|| panic!("posterior trial needs a finite support at t={t}"));
    let logs = support
        .iter()
        .map(|x| model.extend(prev, t, x, y).log_increment())
        .collect();
    (support.into_owned(), logs)
}

impl<M: Model> Proposal<M> for PosteriorProposal {
    fn sample(&self, model: &M, prev: Option<&M::Carry>, t: usize, y: Option<&M::Obs>, rng: &mut SmcRng) -> M::State {
        self.sample_with_log_density(model, prev, t, y, rng).0
    }

    fn log_density(&self, model: &M, prev: Option<&M::Carry>, t: usize, y: Option<&M::Obs>, x: &M::State) -> f64 {
        let (support, logs) = posterior_logs(model, prev, t, y);
        let lse = log_sum_exp(&logs);
        support
            .iter()
            .position(|s| s == x)
            .map_or(f64::NEG_INFINITY, |i| logs[i] - lse)
    }

    fn sample_with_log_density(
        &self,
        model: &M,
        prev: Option<&M::Carry>,
        t: usize,
        y: Option<&M::Obs>,
        rng: &mut SmcRng,
    ) -> (M::State, f64) {
        let (support, logs) = posterior_logs(model, prev, t, y);
        let lse = log_sum_exp(&logs);
        // A zero-mass posterior falls back to the first symbol; its log density is -inf.
        let i = sample_log_categorical(&logs, rng).unwrap_or(0);
        (support[i].clone(), logs[i] - lse)
    }
}

/// Sample from `proposal` restricted to `subset`, returning the choice and its restricted log density.
pub fn sample_restricted<M: Model>(
    proposal: &dyn Proposal<M>,
    model: &M,
    prev: Option<&M::Carry>,
    t: usize,
    y: Option<&M::Obs>,
    subset: &[M::State],
    rng: &mut SmcRng,
) -> Option<(usize, f64)> {
    let logs: Vec<f64> = subset
        .iter()
        .map(|x| proposal.log_density(model, prev, t, y, x))
        .collect();
    let lse = log_sum_exp(&logs);
    let i = sample_log_categorical(&logs, rng)?;
    Some((i, logs[i] - lse))
}
