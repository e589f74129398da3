//! Pilot lookahead sampling.
//!
//! Each particle considers a set of candidates for `x_t`: the whole support of a
//! finite model, or `A` draws from `q_t` for a continuous one. Every candidate is
//! followed by `K` random pilot paths to `t+Δ` drawn from `q^pilot`. The pilot weight
//! `U = π_{t+Δ}(x_{0:t-1}, x_t, pilot) / (π_{t-1}(x_{0:t-1}) q_t(x_t) Q^pilot)` splits as
//! `V_now · V_future`; candidates are selected in proportion to the `K`-average of `U`.
//!
//! Two weights come out of a step: the concurrent weight, proper for `π_t`, and the
//! auxiliary weight, proper for `π_{t+Δ}` and used as resampling priority.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::model::{finite_support, incremental_log_weight, Model, ModelSpec, ObservationSeq, Trajectory};
use crate::numeric::{log_mean_exp, log_sum_exp, sample_log_categorical};
use crate::particle::{check_population, SystemOf};
use crate::rng::{SmcRng, StreamSet};

use super::smoother::{BinSpec, PooledSmoother};

/// How candidates for `x_t` are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSet {
    /// Every state in the finite support.
    Enumerate,
    /// This many independent draws from `q_t`.
    Draw(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotConfig {
    pub delta: usize,
    /// Pilots per candidate (`K`).
    pub pilots: usize,
    pub candidates: CandidateSet,
    /// Smooth future weights over the pooled candidates.
    pub smoothing: Option<BinSpec>,
}

impl PilotConfig {
    pub fn finite(delta: usize, pilots: usize) -> Self {
        PilotConfig {
            delta,
            pilots,
            candidates: CandidateSet::Enumerate,
            smoothing: None,
        }
    }

    pub fn continuous(delta: usize, candidates: usize, pilots: usize) -> Self {
        PilotConfig {
            delta,
            pilots,
            candidates: CandidateSet::Draw(candidates),
            smoothing: None,
        }
    }

    pub fn smoothed(mut self, bins: BinSpec) -> Self {
        self.smoothing = Some(bins);
        self
    }
}

/// Candidates and pilots of one particle.
#[derive(Clone)]
pub struct PilotEntry<S, C> {
    pub candidates: Vec<S>,
    /// `log V_now` per candidate.
    pub log_now: Vec<f64>,
    /// `[candidate][pilot]` paths ending at `t + delta`.
    pub pilots: Vec<Vec<Trajectory<S, C>>>,
    /// `[candidate][pilot]` `log V_future`.
    pub log_future: Vec<Vec<f64>>,
    /// Log selection scores per candidate, set when the step is finalised.
    pub log_scores: Vec<f64>,
    /// `log V_future` per candidate as used in the scores; the smoothed value when
    /// smoothing is on.
    pub log_future_used: Vec<f64>,
    pub selected: usize,
    pub selected_pilot: usize,
    rng: SmcRng,
}

impl<S, C> PilotEntry<S, C> {
    /// `log` of the `K`-averaged pilot weight of candidate `i`.
    pub fn log_u(&self, i: usize) -> f64 {
        self.log_now[i] + log_mean_exp(&self.log_future[i])
    }

    /// The chosen pilot path, ending at `t + delta`.
    pub fn selected_path(&self) -> &Trajectory<S, C> {
        &self.pilots[self.selected][self.selected_pilot]
    }

    /// Log factor turning the auxiliary weight into a weight for the whole selected
    /// pilot path; zero unless the future weights were smoothed.
    pub fn log_path_correction(&self) -> f64 {
        let i = self.selected;
        let actual = log_mean_exp(&self.log_future[i]);
        if actual == self.log_future_used[i] {
            0.0
        } else {
            actual - self.log_future_used[i]
        }
    }
}

/// All pilot information from one step, indexed by particle.
pub struct PilotBundle<S, C> {
    pub t: usize,
    pub delta: usize,
    pub candidates: CandidateSet,
    pub entries: Vec<PilotEntry<S, C>>,
}

pub type BundleOf<M> = PilotBundle<<M as Model>::State, <M as Model>::Carry>;

/// Form candidates for `x_t` with their `V_now`; pilots start at length zero.
pub fn generate_candidates<M: Model>(
    sys: &SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    candidates: CandidateSet,
    pilots: usize,
    rng: &mut SmcRng,
) -> Result<BundleOf<M>> {
    let t = sys.path_len();
    ys.check_horizon(t)?;
    if pilots == 0 {
        return Err(SmcError::Config("at least one pilot per candidate is required".into()));
    }
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    let y = ys.at(t);
    let support = match candidates {
        CandidateSet::Enumerate => Some(finite_support(model, t, ys)?.into_owned()),
        CandidateSet::Draw(0) => return Err(SmcError::Config("at least one candidate is required".into())),
        CandidateSet::Draw(_) => None,
    };
    let entries = sys
        .paths
        .par_iter()
        .enumerate()
        .map(|(j, path)| {
            let mut rng = streams.stream(j);
            let prev = path.last_carry();
            let draws: Vec<(M::State, f64)> = match (&support, candidates) {
                (Some(s), _) => s.iter().map(|x| (x.clone(), 0.0)).collect(),
                (None, CandidateSet::Draw(a)) => (0..a)
                    .map(|_| spec.trial_at(t).sample_with_log_density(model, prev, t, y, &mut rng))
                    .collect(),
                _ => unreachable!(),
            };
            let mut cands = Vec::with_capacity(draws.len());
            let mut log_now = Vec::with_capacity(draws.len());
            let mut trajs = Vec::with_capacity(draws.len());
            for (x, lq) in draws {
                let ext = model.extend(prev, t, &x, y);
                let v = incremental_log_weight(ext.log_increment(), lq, t)?;
                let p = path.push(x.clone(), ext.carry);
                cands.push(x);
                log_now.push(v);
                trajs.push(vec![p; pilots]);
            }
            let n = cands.len();
            Ok(PilotEntry {
                candidates: cands,
                log_now,
                pilots: trajs,
                log_future: vec![vec![0.0; pilots]; n],
                log_scores: Vec::new(),
                log_future_used: Vec::new(),
                selected: 0,
                selected_pilot: 0,
                rng,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PilotBundle {
        t,
        delta: 0,
        candidates,
        entries,
    })
}

/// Extend every pilot by one step from `q^pilot`.
pub fn extend_pilots<M: Model>(
    bundle: &mut BundleOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
) -> Result<()> {
    let s = bundle.t + bundle.delta + 1;
    ys.check_horizon(s)?;
    let model = &spec.model;
    let pilot = spec.pilot_at(s);
    let y = ys.at(s);
    bundle.entries.par_iter_mut().for_each(|e| {
        for (paths, futs) in e.pilots.iter_mut().zip(e.log_future.iter_mut()) {
            for (p, f) in paths.iter_mut().zip(futs.iter_mut()) {
                let prev = p.last_carry();
                let (x, lq) = pilot.sample_with_log_density(model, prev, s, y, &mut e.rng);
                let ext = model.extend(prev, s, &x, y);
                *f = if lq == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    *f + ext.log_increment() - lq
                };
                *p = p.push(x, ext.carry);
            }
        }
    });
    bundle.delta += 1;
    Ok(())
}

/// Score candidates, select one per particle and update the concurrent and auxiliary weights.
pub fn finalize_pilots<M: Model>(
    bundle: &mut BundleOf<M>,
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    smoothing: Option<BinSpec>,
) -> Result<()> {
    let t = bundle.t;
    let model = &spec.model;
    let mut log_fut: Vec<Vec<f64>> = bundle
        .entries
        .iter()
        .map(|e| e.log_future.iter().map(|f| log_mean_exp(f)).collect())
        .collect();
    if let (Some(bins), true) = (smoothing, bundle.delta > 0) {
        let mut keys = Vec::new();
        let mut vals = Vec::new();
        for (e, lf) in bundle.entries.iter().zip(&log_fut) {
            for (i, x) in e.candidates.iter().enumerate() {
                let carry = e.pilots[i][0].carry_at(t).expect("pilot covers t");
                keys.push(model.smoothing_key(x, carry).ok_or(SmcError::SmoothingUnavailable)?);
                vals.push(lf[i]);
            }
        }
        let smoother = PooledSmoother::fit(&keys, &vals, bins);
        let mut it = keys.iter();
        for lf in log_fut.iter_mut() {
            for v in lf.iter_mut() {
                *v = smoother.predict(it.next().unwrap());
            }
        }
    }
    let log_a = match bundle.candidates {
        CandidateSet::Enumerate => 0.0,
        CandidateSet::Draw(a) => (a as f64).ln(),
    };
    let updates: Vec<(Trajectory<M::State, M::Carry>, f64, f64)> = bundle
        .entries
        .par_iter_mut()
        .zip(log_fut.par_iter())
        .zip(sys.log_w.par_iter())
        .map(|((e, lf), &lw)| {
            e.log_scores = e.log_now.iter().zip(lf).map(|(a, b)| a + b).collect();
            e.log_future_used = lf.clone();
            let lse = log_sum_exp(&e.log_scores);
            let i = sample_log_categorical(&e.log_scores, &mut e.rng).unwrap_or(0);
            let k = sample_log_categorical(&e.log_future[i], &mut e.rng).unwrap_or(0);
            e.selected = i;
            e.selected_pilot = k;
            let path = e.pilots[i][k].truncated(t + 1);
            if !lse.is_finite() || e.log_scores[i] == f64::NEG_INFINITY {
                return (path, f64::NEG_INFINITY, f64::NEG_INFINITY);
            }
            let aux = lw + lse - log_a;
            let w = lw + e.log_now[i] + (lse - log_a) - e.log_scores[i];
            (path, w, aux)
        })
        .collect();
    let mut aux = Vec::with_capacity(updates.len());
    for (j, (path, w, a)) in updates.into_iter().enumerate() {
        sys.paths[j] = path;
        sys.log_w[j] = w;
        aux.push(a);
    }
    sys.log_aux = Some(aux);
    sys.log_res = None;
    check_population(&sys.log_w, t)
}

/// One pilot lookahead step with a fixed horizon.
pub fn pilot_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    cfg: &PilotConfig,
    rng: &mut SmcRng,
) -> Result<BundleOf<M>> {
    let t = sys.path_len();
    ys.check_horizon(t + cfg.delta)?;
    let mut bundle = generate_candidates(sys, spec, ys, cfg.candidates, cfg.pilots, rng)?;
    for _ in 0..cfg.delta {
        extend_pilots(&mut bundle, spec, ys)?;
    }
    finalize_pilots(&mut bundle, sys, spec, cfg.smoothing)?;
    Ok(bundle)
}

/// Pilot lookahead over the whole finite support with `K` pilots per symbol.
pub fn pilot_step_finite<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    delta: usize,
    pilots: usize,
    smoothing: Option<BinSpec>,
    rng: &mut SmcRng,
) -> Result<BundleOf<M>> {
    let cfg = PilotConfig {
        delta,
        pilots,
        candidates: CandidateSet::Enumerate,
        smoothing,
    };
    pilot_step(sys, spec, ys, &cfg, rng)
}

/// Pilot lookahead with `A` candidates drawn from `q_t` and `K` pilots each.
pub fn pilot_step_continuous<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    delta: usize,
    candidates: usize,
    pilots: usize,
    smoothing: Option<BinSpec>,
    rng: &mut SmcRng,
) -> Result<BundleOf<M>> {
    let cfg = PilotConfig {
        delta,
        pilots,
        candidates: CandidateSet::Draw(candidates),
        smoothing,
    };
    pilot_step(sys, spec, ys, &cfg, rng)
}
