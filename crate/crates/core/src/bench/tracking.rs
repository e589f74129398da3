//! Target tracking in clutter: median absolute error of the smoothed position.

use std::time::Instant;

use nalgebra::{Matrix2, Vector2};

use crate::error::Result;
use crate::kalman::{fixed_lag_mean, GaussianBelief};
use crate::lookahead::Strategy;
use crate::model::{ModelSpec, ObservationSeq, PosteriorProposal};
use crate::models::tracking::TrackTruth;
use crate::models::TrackingModel;
use crate::particle::ResamplePolicy;
use crate::rng::seeded;

use super::config::{ExperimentConfig, TrackingParams};
use super::driver::{run_filter, FilterTrace};
use super::reference::ReferenceTable;
use super::{blank_row, quantile, rep_seeds, rmse, weighted_path_mean, MetricsRow, RowKind};

fn initial_belief(p: &TrackingParams) -> GaussianBelief<2> {
    GaussianBelief::new(Vector2::from(p.start), Matrix2::identity() * p.initial_var)
}

/// Truth and observations of one repetition; the start is drawn from the prior.
pub fn simulate(cfg: &ExperimentConfig, data_seed: u64) -> Result<(TrackTruth, ObservationSeq<Vec<f64>>)> {
    let p = &cfg.tracking;
    let mut rng = seeded(data_seed);
    let noise = Vector2::new(
        rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng),
        rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng),
    );
    let start = Vector2::from(p.start) + noise * p.initial_var.sqrt();
    p.clutter.simulate(start, cfg.horizon, &mut rng)
}

/// Smoothed position series `E(z_{s,1} | y_{1:s+δ+Δ})` for each lag.
pub fn filter_positions(
    params: &TrackingParams,
    ys: &ObservationSeq<Vec<f64>>,
    strategy: &Strategy,
    policy: &ResamplePolicy,
    m: usize,
    lags: &[usize],
    filter_seed: u64,
) -> Result<FilterTrace<f64>> {
    let model = TrackingModel::new(params.clutter, initial_belief(params))?;
    let dynamics = model.dynamics().clone();
    let spec = ModelSpec::new(model).with_trial(PosteriorProposal).with_pilot(PosteriorProposal);
    run_filter(&spec, ys, strategy, policy, m, lags, &mut seeded(filter_seed), |sys, out, s| {
        weighted_path_mean::<TrackingModel>(sys, out, |p| {
            let history = p.carries_from(s);
            let lag = history.len() - 1;
            Ok(fixed_lag_mean(&history, &dynamics.transition, &dynamics.process_cov, lag)?[0])
        })
    })
}

/// Rows of one repetition and its sorted absolute errors per lag.
pub fn run_rep(
    cfg: &ExperimentConfig,
    rep: usize,
    reference: Option<&ReferenceTable>,
) -> Result<(Vec<MetricsRow>, Vec<Vec<f64>>)> {
    let (data_seed, filter_seed) = rep_seeds(cfg.seed, rep);
    let (truth, ys) = simulate(cfg, data_seed)?;
    let positions: Vec<f64> = truth[1..].iter().map(|z| z[0]).collect();
    let strategy = cfg.strategy.build(None)?;
    let start = Instant::now();
    let trace = filter_positions(&cfg.tracking, &ys, &strategy, &cfg.resample, cfg.particles, &cfg.lags, filter_seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(cfg.lags.len());
    let mut errors = Vec::with_capacity(cfg.lags.len());
    for (i, &lag) in cfg.lags.iter().enumerate() {
        let est: Vec<f64> = trace.series(i).into_iter().copied().collect();
        let mut abs: Vec<f64> = est.iter().zip(&positions).map(|(a, b)| (a - b).abs()).collect();
        abs.sort_by(f64::total_cmp);
        let mut row = blank_row(cfg, rep, lag);
        row.rmse1 = Some(rmse(&est, &positions));
        row.mae1 = Some(quantile(&abs, 0.5));
        row.abs_q05 = Some(quantile(&abs, 0.05));
        row.abs_q25 = Some(quantile(&abs, 0.25));
        row.abs_q75 = Some(quantile(&abs, 0.75));
        row.abs_q95 = Some(quantile(&abs, 0.95));
        if let Some(r) = reference {
            let reference = r.series(data_seed, row.lookahead)?;
            let mut dev: Vec<f64> = est.iter().zip(reference).map(|(a, b)| (a - b).abs()).collect();
            dev.sort_by(f64::total_cmp);
            row.mae2 = Some(quantile(&dev, 0.5));
            row.rmse2 = Some(rmse(&est, reference));
        }
        row.mean_ess = trace.mean_ess();
        row.mean_delta = trace.mean_delta();
        row.evaluations = trace.mean_evaluations();
        row.wall_time = cfg.timing.then_some(elapsed);
        rows.push(row);
        errors.push(abs);
    }
    Ok((rows, errors))
}

/// One pooled row per lag from every repetition's absolute errors.
pub fn pooled_rows(cfg: &ExperimentConfig, errors: &[Vec<Vec<f64>>]) -> Vec<MetricsRow> {
    cfg.lags
        .iter()
        .enumerate()
        .map(|(i, &lag)| {
            let mut all: Vec<f64> = errors.iter().flat_map(|e| e[i].iter().copied()).collect();
            all.sort_by(f64::total_cmp);
            let mut row = blank_row(cfg, 0, lag);
            row.kind = RowKind::Pooled;
            row.rep = None;
            row.mae1 = Some(quantile(&all, 0.5));
            row.abs_q05 = Some(quantile(&all, 0.05));
            row.abs_q25 = Some(quantile(&all, 0.25));
            row.abs_q75 = Some(quantile(&all, 0.75));
            row.abs_q95 = Some(quantile(&all, 0.95));
            row.mean_ess = f64::NAN;
            row.mean_delta = f64::NAN;
            row.evaluations = f64::NAN;
            row
        })
        .collect()
}
