//! Scalar nonlinear growth model.
//!
//! `x_t = x_{t-1}/2 + 25 x_{t-1}/(1 + x_{t-1}^2) + 8 cos(1.2 (t-1)) + u_t`,
//! `y_t = x_t^2/20 + v_t`, with `u_t ~ N(0, σ²)`, `v_t ~ N(0, η²)` and `x_0 ~ N(0, s_0²)`.
//! The bimodal likelihood (the sign of `x_t` is not identified by `y_t`) is what makes
//! lookahead pay off here.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::model::{Extension, Model, ObservationSeq};
use crate::numeric::log_normal_pdf;
use crate::rng::SmcRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthModel {
    /// Standard deviation of the state noise.
    pub sigma: f64,
    /// Standard deviation of the observation noise.
    pub eta: f64,
    /// Standard deviation of `x_0`.
    pub initial_sd: f64,
}

impl Default for GrowthModel {
    fn default() -> Self {
        GrowthModel {
            sigma: 1.0,
            eta: 1.0,
            initial_sd: 1.0,
        }
    }
}

impl GrowthModel {
    pub fn new(sigma: f64, eta: f64, initial_sd: f64) -> Result<Self> {
        if !(sigma > 0.0 && eta > 0.0 && initial_sd >= 0.0) {
            return Err(SmcError::Config("noise scales must be positive".into()));
        }
        Ok(GrowthModel { sigma, eta, initial_sd })
    }

    /// Deterministic part of the transition into time `t`.
    pub fn drift(prev: f64, t: usize) -> f64 {
        0.5 * prev + 25.0 * prev / (1.0 + prev * prev) + 8.0 * (1.2 * (t as f64 - 1.0)).cos()
    }

    pub fn observation_mean(x: f64) -> f64 {
        x * x / 20.0
    }

    fn mean_and_var(&self, prev: Option<&f64>, t: usize) -> (f64, f64) {
        match prev {
            None => (0.0, self.initial_sd.powi(2)),
            Some(&p) => (Self::drift(p, t), self.sigma.powi(2)),
        }
    }

    /// Draw `x_{0:T}` and `y_{1:T}`.
    pub fn simulate<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> (Vec<f64>, ObservationSeq<f64>) {
        let mut x = self.initial_sd * rng.sample::<f64, _>(StandardNormal);
        let mut xs = vec![x];
        let mut ys = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            x = Self::drift(x, t) + self.sigma * rng.sample::<f64, _>(StandardNormal);
            ys.push(Self::observation_mean(x) + self.eta * rng.sample::<f64, _>(StandardNormal));
            xs.push(x);
        }
        (xs, ObservationSeq::new(ys))
    }
}

impl Model for GrowthModel {
    type State = f64;
    type Obs = f64;
    type Carry = f64;

    fn sample_transition(&self, prev: Option<&f64>, t: usize, rng: &mut SmcRng) -> f64 {
        let (mean, var) = self.mean_and_var(prev, t);
        mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
    }

    fn extend(&self, prev: Option<&f64>, t: usize, x: &f64, y: Option<&f64>) -> Extension<f64> {
        let (mean, var) = self.mean_and_var(prev, t);
        let log_transition = if var > 0.0 {
            log_normal_pdf(*x, mean, var)
        } else if *x == mean {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        let log_observation = y.map_or(0.0, |&y| log_normal_pdf(y, Self::observation_mean(*x), self.eta.powi(2)));
        Extension {
            log_transition,
            log_observation,
            carry: *x,
        }
    }

    fn is_markovian(&self) -> bool {
        true
    }

    fn markov_carry(&self, x: &f64) -> Option<f64> {
        Some(*x)
    }

    fn smoothing_key(&self, x: &f64, _carry: &f64) -> Option<Vec<f64>> {
        Some(vec![*x])
    }

    fn summary_scalar(&self, x: &f64, _carry: &f64) -> Option<f64> {
        Some(*x)
    }
}
