//! Single target in clutter, tracked with a mixture Kalman filter.
//!
//! The target moves with random acceleration: `z_t = F z_{t-1} + g u_t` with
//! `F = [[1, 1], [0, 1]]`, `g = (1/2, 1)`, `u_t ~ N(0, σ²)`. Each step returns the points
//! inside a window of length `D` centred on the predicted position: Poisson(`λD`) clutter
//! points, uniform on the window, plus the true detection `z_{t,1} + N(0, r²)` with
//! probability `p_d`. The latent indicator `I_t ∈ {0..n_t}` names the true detection
//! (`0` = missed) and the position/velocity belief is integrated out.
//!
//! Association likelihood: with `n` points,
//! `p(I = 0) ∝ (1 - p_d) λ D` with density `D^{-n}`, and
//! `p(I = k) ∝ p_d` with density `N(y_k; ŷ, S) D^{-(n-1)}`, both normalised by
//! `(1 - p_d) λ D + n p_d`.

use std::borrow::Cow;

use nalgebra::{Matrix1, Matrix2, RowVector2, Vector1, Vector2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::kalman::{GaussianBelief, RealCdlm};
use crate::model::{Extension, Model, ObservationSeq};
use crate::rng::SmcRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterModel {
    pub p_d: f64,
    /// Clutter points per unit length.
    pub clutter_rate: f64,
    /// Window length `D`.
    pub window: f64,
    /// `r²`.
    pub obs_noise_var: f64,
    /// `σ²`.
    pub accel_var: f64,
}

impl Default for ClutterModel {
    fn default() -> Self {
        ClutterModel {
            p_d: 0.8,
            clutter_rate: 0.1,
            window: 100.0,
            obs_noise_var: 1.0,
            accel_var: 0.1,
        }
    }
}

/// Simulated truth: `(position, velocity)` for `t = 0..=T`.
pub type TrackTruth = Vec<Vector2<f64>>;

impl ClutterModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_d > 0.0
            && self.p_d <= 1.0
            && self.clutter_rate > 0.0
            && self.window > 0.0
            && self.obs_noise_var > 0.0
            && self.accel_var > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SmcError::Config(format!("invalid clutter model {self:?}")))
        }
    }

    pub fn dynamics(&self) -> RealCdlm<2> {
        RealCdlm::<2>::real(
            Matrix2::new(1.0, 1.0, 0.0, 1.0),
            Vector2::new(0.5, 1.0),
            self.accel_var,
            Vector2::new(1.0, 0.0),
            self.obs_noise_var,
        )
        .expect("validated parameters")
    }

    /// Draw a trajectory from `start` and the observed point sets `y_{1:T}`.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        start: Vector2<f64>,
        horizon: usize,
        rng: &mut R,
    ) -> Result<(TrackTruth, ObservationSeq<Vec<f64>>)> {
        self.validate()?;
        let cdlm = self.dynamics();
        let clutter = Poisson::new(self.clutter_rate * self.window).map_err(|e| SmcError::Config(e.to_string()))?;
        let mut truth = vec![start];
        let mut ys = Vec::with_capacity(horizon);
        for _ in 1..=horizon {
            let predicted = cdlm.transition * truth.last().unwrap();
            let u: f64 = rng.sample(StandardNormal);
            let z = predicted + Vector2::new(0.5, 1.0) * (self.accel_var.sqrt() * u);
            let n = clutter.sample(rng) as usize;
            let centre = predicted[0];
            let mut points: Vec<f64> = (0..n)
                .map(|_| centre + self.window * (rng.gen::<f64>() - 0.5))
                .collect();
            if rng.gen::<f64>() < self.p_d {
                points.push(z[0] + self.obs_noise_var.sqrt() * rng.sample::<f64, _>(StandardNormal));
            }
            points.shuffle(rng);
            ys.push(points);
            truth.push(z);
        }
        Ok((truth, ObservationSeq::new(ys)))
    }
}

/// Indicator model with Gaussian beliefs as carries.
#[derive(Debug, Clone)]
pub struct TrackingModel {
    clutter: ClutterModel,
    cdlm: RealCdlm<2>,
    initial: GaussianBelief<2>,
    obs_row: RowVector2<f64>,
}

impl TrackingModel {
    pub fn new(clutter: ClutterModel, initial: GaussianBelief<2>) -> Result<Self> {
        clutter.validate()?;
        Ok(TrackingModel {
            clutter,
            cdlm: clutter.dynamics(),
            initial,
            obs_row: RowVector2::new(1.0, 0.0),
        })
    }

    pub fn clutter(&self) -> &ClutterModel {
        &self.clutter
    }

    pub fn dynamics(&self) -> &RealCdlm<2> {
        &self.cdlm
    }

    /// `log p(I_t = i)` when `n` points are observed.
    pub fn log_indicator_prior(&self, i: usize, n: usize) -> f64 {
        let c = &self.clutter;
        let missed = (1.0 - c.p_d) * c.clutter_rate * c.window;
        let total = missed + n as f64 * c.p_d;
        match i {
            0 => (missed / total).ln(),
            i if i <= n => (c.p_d / total).ln(),
            _ => f64::NEG_INFINITY,
        }
    }
}

impl Model for TrackingModel {
    type State = usize;
    type Obs = Vec<f64>;
    type Carry = GaussianBelief<2>;

    /// Only defined at `t = 0`: the indicator prior depends on the number of observed
    /// points, so later steps must use a proposal that sees the observation.
    fn sample_transition(&self, _prev: Option<&Self::Carry>, t: usize, _rng: &mut SmcRng) -> usize {
        assert!(t == 0, "tracking indicators need an observation-aware proposal (t={t})");
        0
    }

    fn extend(&self, prev: Option<&Self::Carry>, _t: usize, x: &usize, y: Option<&Vec<f64>>) -> Extension<Self::Carry> {
        let Some(prev) = prev else {
            return Extension {
                log_transition: if *x == 0 { 0.0 } else { f64::NEG_INFINITY },
                log_observation: 0.0,
                carry: self.initial.clone(),
            };
        };
        let predicted = prev.predict(&self.cdlm.transition, &self.cdlm.process_cov);
        let Some(points) = y else {
            return Extension {
                log_transition: if *x == 0 { 0.0 } else { f64::NEG_INFINITY },
                log_observation: 0.0,
                carry: predicted,
            };
        };
        let n = points.len();
        let log_d = self.clutter.window.ln();
        let log_transition = self.log_indicator_prior(*x, n);
        match *x {
            0 => Extension {
                log_transition,
                log_observation: -(n as f64) * log_d,
                carry: predicted,
            },
            k if k <= n => {
                let (post, ll) = predicted
                    .update(&self.obs_row, &Matrix1::new(self.clutter.obs_noise_var), &Vector1::new(points[k - 1]))
                    .expect("observation noise is positive");
                Extension {
                    log_transition,
                    log_observation: ll - (n as f64 - 1.0) * log_d,
                    carry: post,
                }
            }
            _ => Extension {
                log_transition,
                log_observation: f64::NEG_INFINITY,
                carry: predicted,
            },
        }
    }

    fn support(&self, t: usize, y: Option<&Vec<f64>>) -> Option<Cow<'_, [usize]>> {
        let n = if t == 0 { 0 } else { y.map_or(0, |p| p.len()) };
        Some(Cow::Owned((0..=n).collect()))
    }

    fn smoothing_key(&self, _x: &usize, carry: &Self::Carry) -> Option<Vec<f64>> {
        Some(vec![carry.mean[0], carry.mean[1]])
    }

    fn summary_scalar(&self, _x: &usize, carry: &Self::Carry) -> Option<f64> {
        Some(carry.mean[0])
    }
}
