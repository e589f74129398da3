//! Experiment drivers behind the `smc` binary.
//!
//! Each repetition draws its data from `derive_seed(seed, 2 rep)` and its filter
//! randomness from `derive_seed(seed, 2 rep + 1)`, so two strategies run with the same
//! seed see identical data, and reference caches are keyed by the data seed.

pub mod config;
pub mod driver;
pub mod metrics;
pub mod nonlinear;
pub mod qam;
pub mod reference;
pub mod selftest;
pub mod tracking;

use rayon::prelude::*;

pub use config::{ExperimentConfig, ExperimentKind, Overrides, QamParams, ReferenceConfig, StrategyConfig, TrackingParams};
pub use driver::{run_filter, FilterTrace};
pub use metrics::{read_csv, summarize, write_csv, MetricsRow, RowKind};
pub use reference::ReferenceTable;

use crate::error::Result;
use crate::lookahead::OutcomeOf;
use crate::model::{Model, Trajectory};
use crate::numeric::normalize_log;
use crate::particle::SystemOf;
use crate::rng::derive_seed;

/// `(data seed, filter seed)` of repetition `rep`.
pub fn rep_seeds(seed: u64, rep: usize) -> (u64, u64) {
    (derive_seed(seed, 2 * rep as u64), derive_seed(seed, 2 * rep as u64 + 1))
}

/// Run every repetition of `cfg`; rows come back in `(rep, lag)` order, followed by
/// pooled rows for the tracking experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let reference = match &cfg.reference.path {
        Some(p) => Some(ReferenceTable::read(std::fs::File::open(p)?)?),
        None => None,
    };
    let reps = 0..cfg.reps;
    match cfg.experiment {
        ExperimentKind::Nonlinear => {
            let per_rep: Vec<Vec<MetricsRow>> = reps
                .into_par_iter()
                .map(|rep| nonlinear::run_rep(cfg, rep, reference.as_ref()))
                .collect::<Result<_>>()?;
            Ok(per_rep.into_iter().flatten().collect())
        }
        ExperimentKind::Tracking => {
            let per_rep: Vec<(Vec<MetricsRow>, Vec<Vec<f64>>)> = reps
                .into_par_iter()
                .map(|rep| tracking::run_rep(cfg, rep, reference.as_ref()))
                .collect::<Result<_>>()?;
            let (rows, errors): (Vec<_>, Vec<_>) = per_rep.into_iter().unzip();
            let mut out: Vec<MetricsRow> = rows.into_iter().flatten().collect();
            out.extend(tracking::pooled_rows(cfg, &errors));
            Ok(out)
        }
        ExperimentKind::Qam => {
            let per_rep: Vec<Vec<MetricsRow>> = reps.into_par_iter().map(|rep| qam::run_rep(cfg, rep)).collect::<Result<_>>()?;
            Ok(per_rep.into_iter().flatten().collect())
        }
    }
}

pub(crate) fn blank_row(cfg: &ExperimentConfig, rep: usize, lag: usize) -> MetricsRow {
    MetricsRow {
        kind: RowKind::Rep,
        rep: Some(rep),
        experiment: serde_json::to_value(cfg.experiment)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        strategy: cfg.strategy.label(),
        particles: cfg.particles,
        lag,
        lookahead: lag + cfg.strategy.delta(),
        rmse1: None,
        rmse2: None,
        mae1: None,
        mae2: None,
        abs_q05: None,
        abs_q25: None,
        abs_q75: None,
        abs_q95: None,
        ber: None,
        mean_ess: 0.0,
        mean_delta: 0.0,
        evaluations: 0.0,
        wall_time: None,
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn rmse(est: &[f64], truth: &[f64]) -> f64 {
    let sse: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    (sse / est.len() as f64).sqrt()
}

/// Normalised weights and the paths they belong to: the pilot paths when the step
/// drew them, otherwise the particle paths.
pub(crate) fn estimate_weights<'a, M: Model>(
    sys: &'a SystemOf<M>,
    outcome: &'a OutcomeOf<M>,
) -> (Vec<f64>, &'a [Trajectory<M::State, M::Carry>]) {
    match (&outcome.lookahead_paths, &outcome.lookahead_log_weights) {
        (Some(p), Some(w)) => (normalize_log(w), p),
        _ => (normalize_log(sys.track_or_concurrent(outcome.estimate_track)), &sys.paths),
    }
}

/// Weighted mean of `f` under [`estimate_weights`].
pub(crate) fn weighted_path_mean<M: Model>(
    sys: &SystemOf<M>,
    outcome: &OutcomeOf<M>,
    f: impl Fn(&Trajectory<M::State, M::Carry>) -> Result<f64>,
) -> Result<f64> {
    let (w, paths) = estimate_weights::<M>(sys, outcome);
    let mut acc = 0.0;
    for (p, path) in w.iter().zip(paths) {
        if *p > 0.0 {
            acc += p * f(path)?;
        }
    }
    Ok(acc)
}
