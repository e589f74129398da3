//! Invariants of the sampling machinery, checked over random models and weights.

use proptest::prelude::*;

use lookahead_smc::lookahead::{
    block_sampling_step, deterministic_pilot_step, exact_lookahead_marginal, multilevel_step, pilot_step, OptimalBlock,
    Partition, PilotConfig, PilotKind, Strategy,
};
use lookahead_smc::model::{ModelSpec, ObservationSeq};
use lookahead_smc::models::{Constellation, DiscreteHmm};
use lookahead_smc::numeric::log_sum_exp;
use lookahead_smc::oracle::forward_backward_conditional;
use lookahead_smc::particle::{ess, select, sis_step, ParticleSystem, ResampleScheme, WeightTrack};
use lookahead_smc::rng::seeded;

type System = ParticleSystem<usize, usize>;

fn random_fixture(seed: u64, states: usize, horizon: usize) -> (DiscreteHmm, ObservationSeq<usize>) {
    let mut rng = seeded(seed);
    let model = DiscreteHmm::random(states, 3, &mut rng);
    let (_, ys) = model.simulate(horizon, &mut rng);
    (model, ys)
}

/// `steps` SIS steps from scratch.
fn grown(spec: &ModelSpec<DiscreteHmm>, ys: &ObservationSeq<usize>, m: usize, steps: usize, seed: u64) -> System {
    let mut sys = ParticleSystem::new(m);
    let mut rng = seeded(seed);
    for _ in 0..steps {
        sis_step(&mut sys, spec, ys, &mut rng).unwrap();
    }
    sys
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

const SCHEMES: [ResampleScheme; 5] = [
    ResampleScheme::Multinomial,
    ResampleScheme::Residual,
    ResampleScheme::Stratified,
    ResampleScheme::Systematic,
    ResampleScheme::OptimalFinite,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ess_lies_between_one_and_m(w in prop::collection::vec(-30.0f64..30.0, 1..200)) {
        let e = ess(&w);
        prop_assert!(e >= 1.0 - 1e-9 && e <= w.len() as f64 + 1e-9);
    }

    #[test]
    fn ess_is_m_for_equal_weights(m in 1usize..500, level in -50.0f64..50.0) {
        prop_assert!((ess(&vec![level; m]) - m as f64).abs() < 1e-8 * m as f64);
    }

    #[test]
    fn resampling_returns_n_valid_ancestors(
        w in prop::collection::vec(-10.0f64..10.0, 1..60),
        n in 1usize..80,
        scheme in 0usize..5,
        seed in any::<u64>(),
    ) {
        let sel = select(&w, n, SCHEMES[scheme], &mut seeded(seed)).unwrap();
        prop_assert_eq!(sel.len(), n);
        prop_assert!(sel.iter().all(|s| s.ancestor < w.len()));
        // Only the optimal scheme pads surplus slots with zero-mass copies.
        let padded = sel.iter().filter(|s| s.log_factor == f64::NEG_INFINITY).count();
        let surplus = if SCHEMES[scheme] == ResampleScheme::OptimalFinite { n.saturating_sub(w.len()) } else { 0 };
        prop_assert_eq!(padded, surplus);
        prop_assert!(sel.iter().all(|s| s.log_factor.is_finite() || s.log_factor == f64::NEG_INFINITY));
    }

    #[test]
    fn optimal_finite_keeps_distinct_particles_and_preserves_mass(
        w in prop::collection::vec(-6.0f64..6.0, 2..50),
        frac in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let n = ((w.len() as f64 * frac).ceil() as usize).clamp(1, w.len());
        let sel = select(&w, n, ResampleScheme::OptimalFinite, &mut seeded(seed)).unwrap();
        let mut a: Vec<usize> = sel.iter().map(|s| s.ancestor).collect();
        a.dedup();
        prop_assert_eq!(a.len(), n);
        // New weights sum to the old total mass.
        let factors: Vec<f64> = sel.iter().map(|s| s.log_factor).collect();
        prop_assert!(log_sum_exp(&factors).abs() < 1e-6);
    }

    #[test]
    fn residual_keeps_floor_of_expected_counts(
        w in prop::collection::vec(-5.0f64..5.0, 1..40),
        n in 1usize..100,
        seed in any::<u64>(),
    ) {
        let lse = log_sum_exp(&w);
        let sel = select(&w, n, ResampleScheme::Residual, &mut seeded(seed)).unwrap();
        for (i, wi) in w.iter().enumerate() {
            let expected = n as f64 * (wi - lse).exp();
            let copies = sel.iter().filter(|s| s.ancestor == i).count() as f64;
            prop_assert!(copies >= (expected - 1e-9).floor());
        }
        let kept: usize = w.iter().map(|wi| (n as f64 * (wi - lse).exp() + 1e-9).floor() as usize).sum();
        prop_assert!(kept <= n);
    }

    #[test]
    fn systematic_counts_are_within_one_of_expected(
        w in prop::collection::vec(-5.0f64..5.0, 1..40),
        n in 1usize..100,
        seed in any::<u64>(),
    ) {
        let lse = log_sum_exp(&w);
        let sel = select(&w, n, ResampleScheme::Systematic, &mut seeded(seed)).unwrap();
        for (i, wi) in w.iter().enumerate() {
            let expected = n as f64 * (wi - lse).exp();
            let copies = sel.iter().filter(|s| s.ancestor == i).count() as f64;
            prop_assert!((copies - expected).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn resampling_preserves_weighted_estimates_of_tracks(seed in any::<u64>(), scheme in 0usize..4) {
        let (model, ys) = random_fixture(seed, 3, 4);
        let spec = ModelSpec::new(model);
        let mut sys = grown(&spec, &ys, 4000, 3, seed);
        let h = |p: &lookahead_smc::model::Trajectory<usize, usize>| *p.last_state().unwrap() as f64;
        let before = sys.estimate(WeightTrack::Concurrent, h);
        sys.resample(WeightTrack::Concurrent, SCHEMES[scheme], &mut seeded(seed ^ 1)).unwrap();
        prop_assert_eq!(sys.len(), 4000);
        prop_assert!((sys.estimate(WeightTrack::Concurrent, h) - before).abs() < 0.1);
    }

    #[test]
    fn exact_marginal_is_normalized_and_matches_forward_backward(seed in any::<u64>(), delta in 0usize..3) {
        let (model, ys) = random_fixture(seed, 3, 5);
        let spec = ModelSpec::new(model.clone());
        let sys = grown(&spec, &ys, 3, 2, seed);
        for path in &sys.paths {
            let m = exact_lookahead_marginal(&model, path, &ys, delta).unwrap();
            prop_assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let fb = forward_backward_conditional(&model, &ys, path.last_state(), 2, delta).unwrap();
            for (a, b) in m.probs.iter().zip(&fb) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn optimal_block_weights_equal_exact_lookahead_weights(seed in any::<u64>(), delta in 1usize..3) {
        let (model, ys) = random_fixture(seed, 2, 6);
        let spec = ModelSpec::new(model.clone());
        let steps = 2 + delta;
        let mut sys = grown(&spec, &ys, 16, steps, seed);
        let before = sys.log_w.clone();
        let prefixes: Vec<_> = sys.paths.iter().map(|p| p.truncated(steps - delta)).collect();
        block_sampling_step(&mut sys, &spec, &ys, delta, &OptimalBlock, &mut seeded(seed ^ 7)).unwrap();
        for ((prefix, b), a) in prefixes.iter().zip(&before).zip(&sys.log_w) {
            let exact = exact_lookahead_marginal(&model, prefix, &ys, delta).unwrap().log_weight_ratio();
            prop_assert!(close(a - b, exact), "{} vs {}", a - b, exact);
        }
    }

    #[test]
    fn zero_horizon_pilots_reduce_to_exact_one_step_weights(seed in any::<u64>(), pilots in 1usize..4) {
        let (model, ys) = random_fixture(seed, 3, 4);
        let spec = ModelSpec::new(model.clone());
        let base = grown(&spec, &ys, 12, 2, seed);
        let want: Vec<f64> = base
            .paths
            .iter()
            .zip(&base.log_w)
            .map(|(p, w)| w + exact_lookahead_marginal(&model, p, &ys, 0).unwrap().log_z)
            .collect();

        let mut random = base.clone();
        pilot_step(&mut random, &spec, &ys, &PilotConfig::finite(0, pilots), &mut seeded(seed ^ 3)).unwrap();
        let mut greedy = base.clone();
        deterministic_pilot_step(&mut greedy, &spec, &ys, 0, &mut seeded(seed ^ 5)).unwrap();
        let mut flat = base.clone();
        multilevel_step(&mut flat, &spec, &ys, &Partition::flat(3), 0, PilotKind::Random, &mut seeded(seed ^ 9)).unwrap();
        for (j, w) in want.iter().enumerate() {
            prop_assert!(close(random.track(WeightTrack::Auxiliary).unwrap()[j], *w));
            prop_assert!(close(greedy.track(WeightTrack::Resampling).unwrap()[j], *w));
            prop_assert!(close(flat.track(WeightTrack::Auxiliary).unwrap()[j], *w));
        }
    }

    #[test]
    fn exact_strategy_at_zero_horizon_is_sis_with_the_optimal_trial(seed in any::<u64>()) {
        let (model, ys) = random_fixture(seed, 3, 4);
        let spec = ModelSpec::new(model.clone());
        let mut sys = grown(&spec, &ys, 8, 2, seed);
        let prefixes = sys.paths.clone();
        let before = sys.log_w.clone();
        Strategy::Exact { delta: 0 }.advance(&mut sys, &spec, &ys, &mut seeded(seed)).unwrap();
        for ((p, b), a) in prefixes.iter().zip(&before).zip(&sys.log_w) {
            let m = exact_lookahead_marginal(&model, p, &ys, 0).unwrap();
            prop_assert!(close(a - b, m.log_z));
        }
    }

    #[test]
    fn strategies_are_reproducible(seed in any::<u64>(), which in 0usize..5) {
        let (model, ys) = random_fixture(seed, 3, 6);
        let spec = ModelSpec::new(model);
        let strategy = match which {
            0 => Strategy::Plain,
            1 => Strategy::Exact { delta: 2 },
            2 => Strategy::Pilot(PilotConfig::finite(2, 2)),
            3 => Strategy::Deterministic { delta: 2 },
            _ => Strategy::Multilevel { partition: Partition::flat(3), delta: 1, kind: PilotKind::Random },
        };
        let run = || {
            let mut sys: System = ParticleSystem::new(30);
            let mut rng = seeded(seed);
            for _ in 0..=4 {
                strategy.advance(&mut sys, &spec, &ys, &mut rng).unwrap();
            }
            (sys.paths.iter().map(|p| p.states()).collect::<Vec<_>>(), sys.log_w.clone(), sys.log_aux.clone())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn quadrant_partitions_nest(levels in 1usize..4) {
        let order = 4usize.pow(levels as u32);
        let p = Constellation::new(order).unwrap().partition();
        prop_assert_eq!(p.depth(), levels);
        prop_assert_eq!(p.size(), order);
        for l in 0..levels {
            let n = 4usize.pow(l as u32);
            for i in 0..n {
                let kids = p.children(l, i);
                prop_assert_eq!(kids.len(), 4);
                let mut union: Vec<usize> = kids.iter().flat_map(|&c| p.subset(l + 1, c).to_vec()).collect();
                union.sort_unstable();
                prop_assert_eq!(union, p.subset(l, i).to_vec());
            }
        }
    }
}

#[test]
fn partitions_reject_overlaps_and_gaps() {
    assert!(Partition::new(3, vec![vec![vec![0, 1], vec![1, 2]], vec![vec![0], vec![1], vec![2]]]).is_err());
    assert!(Partition::new(3, vec![vec![vec![0], vec![1]]]).is_err());
    assert!(Partition::new(4, vec![vec![vec![0, 1], vec![2, 3]], vec![vec![0], vec![2], vec![1], vec![3]]]).is_ok());
    assert!(Partition::new(4, vec![vec![vec![0, 2], vec![1, 3]], vec![vec![0, 1], vec![2, 3]]]).is_err());
}
