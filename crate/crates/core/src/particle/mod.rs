//! Weighted particle populations, resampling and the plain SIS step.

pub mod diagnostics;
pub mod resample;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::model::{incremental_log_weight, Model, ModelSpec, ObservationSeq, Trajectory};
use crate::numeric::{log_sum_exp, normalize_log};
use crate::rng::{SmcRng, StreamSet};

pub use resample::{select, ResampleScheme, Selection};

/// Which weight track a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightTrack {
    /// Proper for the current target `π_t`.
    Concurrent,
    /// Proper for a lookahead target `π_{t+Δ}`.
    Auxiliary,
    /// Used only as resampling priority.
    Resampling,
}

/// `m` paths with one or more log-weight tracks.
#[derive(Clone)]
pub struct ParticleSystem<S, C> {
    pub paths: Vec<Trajectory<S, C>>,
    pub log_w: Vec<f64>,
    pub log_aux: Option<Vec<f64>>,
    pub log_res: Option<Vec<f64>>,
}

pub type SystemOf<M> = ParticleSystem<<M as Model>::State, <M as Model>::Carry>;
pub type PathOf<M> = Trajectory<<M as Model>::State, <M as Model>::Carry>;

impl<S: Clone, C: Clone> ParticleSystem<S, C> {
    /// `m` empty paths with unit weights.
    pub fn new(m: usize) -> Self {
        ParticleSystem {
            paths: vec![Trajectory::empty(); m],
            log_w: vec![0.0; m],
            log_aux: None,
            log_res: None,
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Length of every path; the next state to draw has this time index.
    pub fn path_len(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len())
    }

    pub fn track(&self, track: WeightTrack) -> Option<&[f64]> {
        match track {
            WeightTrack::Concurrent => Some(&self.log_w),
            WeightTrack::Auxiliary => self.log_aux.as_deref(),
            WeightTrack::Resampling => self.log_res.as_deref(),
        }
    }

    /// The requested track, falling back to the concurrent one when absent.
    pub fn track_or_concurrent(&self, track: WeightTrack) -> &[f64] {
        self.track(track).unwrap_or(&self.log_w)
    }

    pub fn ess(&self, track: WeightTrack) -> f64 {
        ess(self.track_or_concurrent(track))
    }

    /// Shift every track so its largest log-weight is zero.
    pub fn renormalize(&mut self) {
        fn shift(v: &mut [f64]) {
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max.is_finite() {
                v.iter_mut().for_each(|x| *x -= max);
            }
        }
        shift(&mut self.log_w);
        if let Some(a) = self.log_aux.as_mut() {
            shift(a);
        }
        if let Some(r) = self.log_res.as_mut() {
            shift(r);
        }
    }

    /// Resample with priority scores taken from `track`.
    pub fn resample(&mut self, track: WeightTrack, scheme: ResampleScheme, rng: &mut SmcRng) -> Result<()> {
        let scores = self.track_or_concurrent(track).to_vec();
        self.resample_with_scores(&scores, scheme, rng)
    }

    /// Resample with arbitrary log priority scores; every track becomes `w / α`.
    pub fn resample_with_scores(&mut self, log_scores: &[f64], scheme: ResampleScheme, rng: &mut SmcRng) -> Result<()> {
        let t = self.path_len();
        let m = self.len();
        let sel = select(log_scores, m, scheme, rng).map_err(|e| match e {
            SmcError::DegeneratePopulation { .. } => SmcError::DegeneratePopulation { t },
            other => other,
        })?;
        let remap = |v: &[f64]| -> Vec<f64> {
            sel.iter()
                .map(|s| v[s.ancestor] - log_scores[s.ancestor] + s.log_factor)
                .collect()
        };
        self.log_w = remap(&self.log_w);
        self.log_aux = self.log_aux.as_deref().map(remap);
        self.log_res = self.log_res.as_deref().map(remap);
        self.paths = sel.iter().map(|s| self.paths[s.ancestor].clone()).collect();
        self.renormalize();
        Ok(())
    }

    /// Self-normalised estimate `Σ w h / Σ w` on a track.
    pub fn estimate(&self, track: WeightTrack, h: impl Fn(&Trajectory<S, C>) -> f64) -> f64 {
        let p = normalize_log(self.track_or_concurrent(track));
        p.iter()
            .zip(&self.paths)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, path)| p * h(path))
            .sum()
    }

    /// Weighted vote over a discrete functional; returns the heaviest value.
    pub fn weighted_mode<K: PartialEq + Clone>(
        &self,
        track: WeightTrack,
        key: impl Fn(&Trajectory<S, C>) -> K,
    ) -> Option<K> {
        let p = normalize_log(self.track_or_concurrent(track));
        let mut tally: Vec<(K, f64)> = Vec::new();
        for (w, path) in p.iter().zip(&self.paths) {
            let k = key(path);
            match tally.iter_mut().find(|(x, _)| *x == k) {
                Some(entry) => entry.1 += w,
                None => tally.push((k, *w)),
            }
        }
        tally
            .into_iter()
            .fold(None, |best: Option<(K, f64)>, (k, w)| match best {
                Some((bk, bw)) if bw >= w => Some((bk, bw)),
                _ => Some((k, w)),
            })
            .map(|(k, _)| k)
    }
}

/// Effective sample size `m / (1 + v)` with `v` the squared coefficient of variation.
pub fn ess(log_w: &[f64]) -> f64 {
    let lse = log_sum_exp(log_w);
    if !lse.is_finite() {
        return 0.0;
    }
    let doubled: Vec<f64> = log_w.iter().map(|w| 2.0 * w).collect();
    (2.0 * lse - log_sum_exp(&doubled)).exp()
}

/// When to resample between steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleWhen {
    Never,
    Always,
    /// When ESS falls below this fraction of `m`.
    EssBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplePolicy {
    pub scheme: ResampleScheme,
    pub when: ResampleWhen,
}

impl Default for ResamplePolicy {
    fn default() -> Self {
        ResamplePolicy {
            scheme: ResampleScheme::Residual,
            when: ResampleWhen::EssBelow(0.1),
        }
    }
}

impl ResamplePolicy {
    /// Resample on `track` if the policy triggers; returns whether it did.
    pub fn apply<S: Clone, C: Clone>(
        &self,
        sys: &mut ParticleSystem<S, C>,
        track: WeightTrack,
        rng: &mut SmcRng,
    ) -> Result<bool> {
        let fire = match self.when {
            ResampleWhen::Never => false,
            ResampleWhen::Always => true,
            ResampleWhen::EssBelow(f) => sys.ess(track) < f * sys.len() as f64,
        };
        if fire {
            sys.resample(track, self.scheme, rng)?;
        }
        Ok(fire)
    }
}

pub(crate) fn check_population(log_w: &[f64], t: usize) -> Result<()> {
    if log_w.iter().any(|w| w.is_nan()) {
        return Err(SmcError::Numerical(format!("NaN weight at t={t}")));
    }
    if log_w.iter().all(|w| *w == f64::NEG_INFINITY) {
        return Err(SmcError::DegeneratePopulation { t });
    }
    Ok(())
}

/// One sequential importance sampling step: draw `x_t ~ q_t` and update the weight.
pub fn sis_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    rng: &mut SmcRng,
) -> Result<()> {
    let t = sys.path_len();
    ys.check_horizon(t)?;
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    let trial = spec.trial_at(t);
    let y = ys.at(t);
    let out: Vec<(PathOf<M>, f64)> = sys
        .paths
        .par_iter()
        .enumerate()
        .map(|(j, path)| {
            let mut r = streams.stream(j);
            let prev = path.last_carry();
            let (x, lq) = trial.sample_with_log_density(model, prev, t, y, &mut r);
            let ext = model.extend(prev, t, &x, y);
            let inc = incremental_log_weight(ext.log_increment(), lq, t)?;
            Ok((path.push(x, ext.carry), inc))
        })
        .collect::<Result<_>>()?;
    for (j, (path, inc)) in out.into_iter().enumerate() {
        sys.paths[j] = path;
        sys.log_w[j] += inc;
    }
    sys.log_aux = None;
    sys.log_res = None;
    check_population(&sys.log_w, t)
}
