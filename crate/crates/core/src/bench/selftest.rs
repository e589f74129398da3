//! Quick internal consistency checks run by `smc selftest`.

use crate::error::Result;
use crate::lookahead::exact_lookahead_marginal;
use crate::model::{grow, Trajectory};
use crate::models::DiscreteHmm;
use crate::oracle::{conditional_lookahead, forward_backward, posterior_marginal};
use crate::rng::seeded;

use super::config::{ExperimentConfig, ExperimentKind};
use super::{run_experiment, write_csv};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn lookahead_matches_enumeration() -> Result<Check> {
    let mut rng = seeded(11);
    let hmm = DiscreteHmm::random(3, 3, &mut rng);
    let (_, ys) = hmm.simulate(6, &mut rng);
    let prefix = [0usize, 2, 1];
    let mut path = Trajectory::empty();
    for x in prefix {
        path = grow(&hmm, &path, x, &ys).0;
    }
    let engine = exact_lookahead_marginal(&hmm, &path, &ys, 2)?;
    let (_, oracle) = conditional_lookahead(&hmm, &ys, &prefix, 2)?;
    let gap = max_gap(&engine.probs, &oracle);
    Ok(Check {
        name: "exact lookahead marginal vs enumeration",
        passed: gap < 1e-12,
        detail: format!("max gap {gap:.2e}"),
    })
}

fn forward_backward_matches_enumeration() -> Result<Check> {
    let mut rng = seeded(12);
    let hmm = DiscreteHmm::random(3, 4, &mut rng);
    let (_, ys) = hmm.simulate(6, &mut rng);
    let fb = forward_backward(&hmm, &ys, 3, 2)?;
    let (_, en) = posterior_marginal(&hmm, &ys, 3, 5)?;
    let gap = max_gap(&fb, &en);
    Ok(Check {
        name: "forward-backward vs enumeration",
        passed: gap < 1e-12,
        detail: format!("max gap {gap:.2e}"),
    })
}

fn repeatable_output() -> Result<Check> {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::Nonlinear);
    cfg.particles = 100;
    cfg.reps = 3;
    cfg.horizon = 20;
    let render = |cfg: &ExperimentConfig| -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_csv(&run_experiment(cfg)?, &mut buf)?;
        Ok(buf)
    };
    let same = render(&cfg)? == render(&cfg)?;
    Ok(Check {
        name: "same seed gives identical CSV",
        passed: same,
        detail: String::new(),
    })
}

fn config_round_trip() -> Result<Check> {
    let mut ok = true;
    for kind in [ExperimentKind::Nonlinear, ExperimentKind::Tracking, ExperimentKind::Qam] {
        let cfg = ExperimentConfig::preset(kind);
        let text = serde_json::to_string(&cfg)?;
        ok &= ExperimentConfig::from_json(&text)? == cfg;
    }
    Ok(Check {
        name: "presets survive a JSON round trip",
        passed: ok,
        detail: String::new(),
    })
}

/// Run every check; an error inside one check is reported as a failure.
pub fn run_selftest() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Result<Check>); 4] = [
        ("exact lookahead marginal vs enumeration", lookahead_matches_enumeration),
        ("forward-backward vs enumeration", forward_backward_matches_enumeration),
        ("same seed gives identical CSV", repeatable_output),
        ("presets survive a JSON round trip", config_round_trip),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| Check {
                name,
                passed: false,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
