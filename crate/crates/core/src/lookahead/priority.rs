//! Priority scores that look ahead to a future resampling time.
//!
//! For a gap of `T` steps the score `b_j = w_j η̂_j^{1/2}` uses
//! `η̂_j = K^{-1} Σ_k U_k^2`, where `U_k` is the incremental weight of a forward pilot
//! of length `T` drawn from the main trial distribution.

use rayon::prelude::*;

use crate::error::{Result, SmcError};
use crate::model::{Model, ModelSpec, ObservationSeq};
use crate::numeric::log_mean_exp;
use crate::particle::SystemOf;
use crate::rng::{SmcRng, StreamSet};

/// Log priority scores for every particle.
pub fn optimal_priority_scores<M: Model>(
    sys: &SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    gap: usize,
    pilots: usize,
    rng: &mut SmcRng,
) -> Result<Vec<f64>> {
    if pilots == 0 {
        return Err(SmcError::Config("at least one pilot is required".into()));
    }
    let n = sys.path_len();
    ys.check_horizon(n + gap - 1)?;
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    Ok(sys
        .paths
        .par_iter()
        .zip(sys.log_w.par_iter())
        .enumerate()
        .map(|(j, (path, &lw))| {
            let mut rng = streams.stream(j);
            let squares: Vec<f64> = (0..pilots)
                .map(|_| {
                    let mut p = path.clone();
                    let mut log_u = 0.0;
                    for _ in 0..gap {
                        let s = p.len();
                        let y = ys.at(s);
                        let (x, lq) = spec.trial_at(s).sample_with_log_density(model, p.last_carry(), s, y, &mut rng);
                        let ext = model.extend(p.last_carry(), s, &x, y);
                        log_u += ext.log_increment() - lq;
                        p = p.push(x, ext.carry);
                    }
                    2.0 * log_u
                })
                .collect();
            lw + 0.5 * log_mean_exp(&squares)
        })
        .collect())
}
