//! One entry point for every per-step strategy.

use crate::error::Result;
use crate::model::{Model, ModelSpec, ObservationSeq};
use crate::particle::{sis_step, PathOf, SystemOf, WeightTrack};
use crate::rng::SmcRng;

use super::adaptive::{adaptive_pilot_step, AdaptiveConfig};
use super::deterministic::deterministic_pilot_step;
use super::exact::exact_lookahead_step;
use super::multilevel::{multilevel_step, Partition, PilotKind};
use super::pilot::{pilot_step, PilotConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Plain SIS; combine with delayed estimation for lookahead weighting.
    Plain,
    Exact { delta: usize },
    Pilot(PilotConfig),
    Adaptive { pilot: PilotConfig, adaptive: AdaptiveConfig },
    Deterministic { delta: usize },
    Multilevel { partition: Partition, delta: usize, kind: PilotKind },
}

/// What a step reports back to the driver.
pub struct StepOutcome<S, C> {
    /// Lookahead horizon actually used; shorter than configured near the end of the data.
    pub delta: usize,
    /// Weight track to resample on.
    pub resample_track: WeightTrack,
    /// Weight track proper for the lookahead target `π_{t+delta}`.
    pub estimate_track: WeightTrack,
    /// Pilot paths reaching `t + delta` for each particle, when the strategy draws them.
    pub lookahead_paths: Option<Vec<crate::model::Trajectory<S, C>>>,
    /// Log weights proper for `π_{t+delta}` on `lookahead_paths`. They differ from the
    /// estimate track only when pilot weights were smoothed.
    pub lookahead_log_weights: Option<Vec<f64>>,
    /// Pilot evaluations per particle.
    pub evaluations: usize,
}

pub type OutcomeOf<M> = StepOutcome<<M as Model>::State, <M as Model>::Carry>;

impl Strategy {
    /// The configured horizon; adaptive strategies report their maximum.
    pub fn delta(&self) -> usize {
        match self {
            Strategy::Plain => 0,
            Strategy::Exact { delta } | Strategy::Deterministic { delta } | Strategy::Multilevel { delta, .. } => *delta,
            Strategy::Pilot(c) => c.delta,
            Strategy::Adaptive { adaptive, .. } => adaptive.max_delta,
        }
    }

    /// Advance `sys` by one step, truncating the horizon at the end of the data.
    pub fn advance<M: Model>(
        &self,
        sys: &mut SystemOf<M>,
        spec: &ModelSpec<M>,
        ys: &ObservationSeq<M::Obs>,
        rng: &mut SmcRng,
    ) -> Result<OutcomeOf<M>> {
        let t = sys.path_len();
        let room = ys.horizon().saturating_sub(t);
        let clip = |d: usize| d.min(room);
        let outcome = |delta, track, paths: Option<(Vec<PathOf<M>>, Vec<f64>)>, evaluations| {
            let (lookahead_paths, lookahead_log_weights) = paths.unzip();
            StepOutcome {
                delta,
                resample_track: track,
                estimate_track: if track == WeightTrack::Resampling { WeightTrack::Auxiliary } else { track },
                lookahead_paths,
                lookahead_log_weights,
                evaluations,
            }
        };
        let selected = |sys: &SystemOf<M>, bundle: &super::pilot::BundleOf<M>| {
            let aux = sys.track_or_concurrent(WeightTrack::Auxiliary);
            let paths = bundle.entries.iter().map(|e| e.selected_path().clone()).collect();
            let weights = bundle.entries.iter().zip(aux).map(|(e, a)| a + e.log_path_correction()).collect();
            (paths, weights)
        };
        match self {
            Strategy::Plain => {
                sis_step(sys, spec, ys, rng)?;
                Ok(outcome(0, WeightTrack::Concurrent, None, 1))
            }
            Strategy::Exact { delta } => {
                let d = clip(*delta);
                let m = exact_lookahead_step(sys, spec, ys, d, rng)?;
                Ok(outcome(d, WeightTrack::Concurrent, None, m.first().map_or(0, |x| x.support.len())))
            }
            Strategy::Pilot(cfg) => {
                let mut cfg = *cfg;
                cfg.delta = clip(cfg.delta);
                let bundle = pilot_step(sys, spec, ys, &cfg, rng)?;
                let evals = bundle.entries.first().map_or(0, |e| e.candidates.len() * cfg.pilots);
                Ok(outcome(cfg.delta, WeightTrack::Auxiliary, Some(selected(sys, &bundle)), evals))
            }
            Strategy::Adaptive { pilot, adaptive } => {
                let (bundle, d) = adaptive_pilot_step(sys, spec, ys, pilot, adaptive, rng)?;
                let evals = bundle.entries.first().map_or(0, |e| e.candidates.len() * pilot.pilots);
                Ok(outcome(d, WeightTrack::Auxiliary, Some(selected(sys, &bundle)), evals))
            }
            Strategy::Deterministic { delta } => {
                let d = clip(*delta);
                let scores = deterministic_pilot_step(sys, spec, ys, d, rng)?;
                let evals = scores.first().map_or(0, |s| s.candidates.len());
                Ok(outcome(d, WeightTrack::Resampling, None, evals))
            }
            Strategy::Multilevel { partition, delta, kind } => {
                let d = clip(*delta);
                let report = multilevel_step(sys, spec, ys, partition, d, *kind, rng)?;
                Ok(outcome(d, WeightTrack::Auxiliary, None, report.evaluations))
            }
        }
    }
}
