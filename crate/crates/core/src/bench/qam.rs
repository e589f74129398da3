//! Differential QAM over a fading channel: bit error ratio of delayed symbol decisions.

use std::time::Instant;

use crate::error::{Result, SmcError};
use crate::kalman::GaussianBelief;
use crate::lookahead::Strategy;
use crate::model::{ModelSpec, PosteriorProposal};
use crate::models::qam::{simulate_frame, ChannelBelief, ChannelSpec};
use crate::models::{Constellation, QamFrame, QamModel};
use crate::particle::ResamplePolicy;
use crate::rng::seeded;

use super::config::ExperimentConfig;
use super::driver::{run_filter, FilterTrace};
use super::{blank_row, estimate_weights, rep_seeds, MetricsRow};

/// Constellation, channel and its stationary belief for `cfg`.
pub struct QamSetup {
    pub constellation: Constellation,
    pub channel: ChannelSpec,
    pub stationary: ChannelBelief,
}

impl QamSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let constellation = Constellation::new(cfg.qam.order)?;
        let noise = cfg.qam.channel.noise_var_for_snr(&constellation, cfg.qam.snr_db)?;
        let channel = cfg.qam.channel.spec(noise)?;
        let stationary = channel.stationary_belief()?;
        Ok(QamSetup {
            constellation,
            channel,
            stationary,
        })
    }

    pub fn simulate(&self, cfg: &ExperimentConfig, data_seed: u64) -> QamFrame {
        simulate_frame(
            &self.constellation,
            &self.channel,
            &self.stationary,
            cfg.horizon,
            cfg.qam.known_period,
            &mut seeded(data_seed),
        )
    }

    /// Weighted-mode symbol decisions `x̂_s` for each lag.
    pub fn decode(
        &self,
        cfg: &ExperimentConfig,
        frame: &QamFrame,
        strategy: &Strategy,
        policy: &ResamplePolicy,
        lags: &[usize],
        filter_seed: u64,
    ) -> Result<FilterTrace<usize>> {
        let initial = if cfg.qam.known_channel_start {
            GaussianBelief::known(frame.initial_state)
        } else {
            self.stationary.clone()
        };
        let model = QamModel::new(self.constellation.clone(), self.channel.clone(), initial, frame.known.clone());
        let spec = ModelSpec::new(model).with_trial(PosteriorProposal).with_pilot(PosteriorProposal);
        let order = self.constellation.order();
        run_filter(
            &spec,
            &frame.observations,
            strategy,
            policy,
            cfg.particles,
            lags,
            &mut seeded(filter_seed),
            |sys, out, s| {
                let (w, paths) = estimate_weights::<QamModel>(sys, out);
                let mut tally = vec![0.0; order];
                for (p, path) in w.iter().zip(paths) {
                    let x = path
                        .state_at(s)
                        .ok_or_else(|| SmcError::Numerical(format!("path misses time {s}")))?;
                    tally[*x] += p;
                }
                // First maximum, so ties resolve to the lowest index.
                Ok(tally
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0)
            },
        )
    }
}

pub fn run_rep(cfg: &ExperimentConfig, rep: usize) -> Result<Vec<MetricsRow>> {
    let setup = QamSetup::new(cfg)?;
    let (data_seed, filter_seed) = rep_seeds(cfg.seed, rep);
    let frame = setup.simulate(cfg, data_seed);
    let strategy = cfg.strategy.build(Some(&setup.constellation.partition()))?;
    let start = Instant::now();
    let trace = setup.decode(cfg, &frame, &strategy, &cfg.resample, &cfg.lags, filter_seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(cfg.lags.len());
    for (i, &lag) in cfg.lags.iter().enumerate() {
        let mut decisions = vec![frame.symbols[0]];
        decisions.extend(trace.series(i).into_iter().copied());
        let mut row = blank_row(cfg, rep, lag);
        row.ber = Some(frame.bit_error_ratio(&setup.constellation, &decisions));
        row.mean_ess = trace.mean_ess();
        row.mean_delta = trace.mean_delta();
        row.evaluations = trace.mean_evaluations();
        row.wall_time = cfg.timing.then_some(elapsed);
        rows.push(row);
    }
    Ok(rows)
}
