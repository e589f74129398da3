//! Nonlinear growth-model experiment: RMSE of the filtered or delayed mean.

use std::time::Instant;

use crate::error::{Result, SmcError};
use crate::lookahead::Strategy;
use crate::model::{ModelSpec, ObservationSeq};
use crate::models::GrowthModel;
use crate::particle::ResamplePolicy;
use crate::rng::seeded;

use super::config::ExperimentConfig;
use super::driver::{run_filter, FilterTrace};
use super::reference::ReferenceTable;
use super::{blank_row, rep_seeds, rmse, weighted_path_mean, MetricsRow};

/// `(x_{0:T}, y_{1:T})` of one repetition.
pub fn simulate(cfg: &ExperimentConfig, data_seed: u64) -> (Vec<f64>, ObservationSeq<f64>) {
    cfg.nonlinear.simulate(cfg.horizon, &mut seeded(data_seed))
}

/// Posterior-mean series `E(x_s | y_{1:s+δ+Δ})` for each lag.
pub fn filter_means(
    model: GrowthModel,
    ys: &ObservationSeq<f64>,
    strategy: &Strategy,
    policy: &ResamplePolicy,
    m: usize,
    lags: &[usize],
    filter_seed: u64,
) -> Result<FilterTrace<f64>> {
    let spec = ModelSpec::new(model);
    run_filter(&spec, ys, strategy, policy, m, lags, &mut seeded(filter_seed), |sys, out, s| {
        weighted_path_mean::<GrowthModel>(sys, out, |p| {
            p.state_at(s)
                .copied()
                .ok_or_else(|| SmcError::Numerical(format!("path misses time {s}")))
        })
    })
}

pub fn run_rep(cfg: &ExperimentConfig, rep: usize, reference: Option<&ReferenceTable>) -> Result<Vec<MetricsRow>> {
    let (data_seed, filter_seed) = rep_seeds(cfg.seed, rep);
    let (xs, ys) = simulate(cfg, data_seed);
    let strategy = cfg.strategy.build(None)?;
    let start = Instant::now();
    let trace = filter_means(cfg.nonlinear, &ys, &strategy, &cfg.resample, cfg.particles, &cfg.lags, filter_seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(cfg.lags.len());
    for (i, &lag) in cfg.lags.iter().enumerate() {
        let est: Vec<f64> = trace.series(i).into_iter().copied().collect();
        let mut row = blank_row(cfg, rep, lag);
        row.rmse1 = Some(rmse(&est, &xs[1..]));
        if let Some(r) = reference {
            row.rmse2 = Some(rmse(&est, r.series(data_seed, row.lookahead)?));
        }
        row.mean_ess = trace.mean_ess();
        row.mean_delta = trace.mean_delta();
        row.evaluations = trace.mean_evaluations();
        row.wall_time = cfg.timing.then_some(elapsed);
        rows.push(row);
    }
    Ok(rows)
}
