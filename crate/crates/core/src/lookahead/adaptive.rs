//! Adaptive lookahead horizon.
//!
//! Pilots are grown one step at a time, reusing the shorter ones, until the
//! candidates' lookahead distribution is decisive or a cap is reached. The same
//! horizon is used by every particle at a given time.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::model::{Model, ModelSpec, ObservationSeq};
use crate::numeric::{log_sum_exp, weighted_variance};
use crate::particle::SystemOf;
use crate::rng::SmcRng;

use super::pilot::{extend_pilots, finalize_pilots, generate_candidates, BundleOf, PilotConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once the most likely symbol has lookahead probability above this level.
    Probability(f64),
    /// Stop once the weighted variance of the candidates' summary falls below this level.
    Variance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub rule: StopRule,
    pub max_delta: usize,
}

/// Whether the rule is met by the pilots currently in `bundle`.
pub fn stop_rule_met<M: Model>(bundle: &BundleOf<M>, log_w: &[f64], model: &M, rule: StopRule) -> Result<bool> {
    match rule {
        StopRule::Probability(p0) => {
            let width = bundle.entries.first().map_or(0, |e| e.candidates.len());
            if bundle.entries.iter().any(|e| e.candidates.len() != width) {
                return Err(SmcError::Config("probability rule needs a common candidate set".into()));
            }
            let mut mass = vec![Vec::with_capacity(bundle.entries.len()); width];
            for (e, lw) in bundle.entries.iter().zip(log_w) {
                for (i, m) in mass.iter_mut().enumerate() {
                    m.push(lw + e.log_u(i));
                }
            }
            let per_symbol: Vec<f64> = mass.iter().map(|m| log_sum_exp(m)).collect();
            let total = log_sum_exp(&per_symbol);
            let best = per_symbol.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok(total.is_finite() && (best - total).exp() > p0)
        }
        StopRule::Variance(limit) => {
            let t = bundle.t;
            let mut lw_all = Vec::new();
            let mut vals = Vec::new();
            for (e, lw) in bundle.entries.iter().zip(log_w) {
                for (i, x) in e.candidates.iter().enumerate() {
                    let carry = e.pilots[i][0].carry_at(t).expect("pilot covers t");
                    let v = model
                        .summary_scalar(x, carry)
                        .ok_or_else(|| SmcError::Config("variance rule needs a scalar summary".into()))?;
                    lw_all.push(lw + e.log_u(i));
                    vals.push(v);
                }
            }
            if !log_sum_exp(&lw_all).is_finite() {
                return Ok(false);
            }
            Ok(weighted_variance(&lw_all, &vals) < limit)
        }
    }
}

/// One pilot step whose horizon is chosen adaptively; `cfg.delta` is ignored.
///
/// Returns the bundle and the horizon used.
pub fn adaptive_pilot_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    cfg: &PilotConfig,
    adaptive: &AdaptiveConfig,
    rng: &mut SmcRng,
) -> Result<(BundleOf<M>, usize)> {
    let t = sys.path_len();
    let mut bundle = generate_candidates(sys, spec, ys, cfg.candidates, cfg.pilots, rng)?;
    while bundle.delta < adaptive.max_delta
        && t + bundle.delta < ys.horizon()
        && !stop_rule_met(&bundle, &sys.log_w, &spec.model, adaptive.rule)?
    {
        extend_pilots(&mut bundle, spec, ys)?;
    }
    let delta = bundle.delta;
    finalize_pilots(&mut bundle, sys, spec, cfg.smoothing)?;
    Ok((bundle, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookahead::testing::{grown, hmm};
    use crate::rng::seeded;

    fn horizon_used(p0: f64, max_delta: usize, t: usize) -> usize {
        let (spec, ys) = hmm(8, 6);
        let mut sys = grown(&spec, &ys, 6, t);
        let adaptive = AdaptiveConfig {
            rule: StopRule::Probability(p0),
            max_delta,
        };
        adaptive_pilot_step(&mut sys, &spec, &ys, &PilotConfig::finite(0, 1), &adaptive, &mut seeded(2))
            .unwrap()
            .1
    }

    #[test]
    fn trivial_rule_stops_at_once() {
        assert_eq!(horizon_used(0.0, 5, 2), 0);
    }

    #[test]
    fn unreachable_rule_grows_to_the_cap_or_the_data() {
        assert_eq!(horizon_used(1.0, 2, 1), 2);
        assert_eq!(horizon_used(1.0, 10, 2), 4);
    }
}
