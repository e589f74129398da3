//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are printed in order and
//! the process exits non-zero when any criterion fails. Positional arguments select
//! criteria by number, e.g. `cargo test --test acceptance -- 1 2 4`.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use lookahead_smc::bench::{run_experiment, write_csv, ExperimentConfig, ExperimentKind, MetricsRow, RowKind, StrategyConfig};
use lookahead_smc::lookahead::{
    block_sampling_step, exact_lookahead_marginal, pilot_step, OptimalBlock, Partition, PilotConfig, PilotKind, Strategy,
};
use lookahead_smc::model::{grow, ModelSpec, ObservationSeq, Trajectory};
use lookahead_smc::models::{Constellation, DiscreteHmm};
use lookahead_smc::numeric::normalize_log;
use lookahead_smc::oracle::{
    conditional_lookahead, enumerate_paths, forward_backward, forward_backward_conditional, paired_difference, summarize, TabularHmm,
};
use lookahead_smc::particle::{sis_step, ParticleSystem, WeightTrack};
use lookahead_smc::rng::{derive_seed, seeded};
use lookahead_smc::Result;

/// One-sided normal quantiles.
const Z_1PCT: f64 = 2.326;
const Z_5PCT: f64 = 1.645;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

type Hmm = DiscreteHmm;
type Path = Trajectory<usize, usize>;

/// The 2-state, binary-output fixture shared by criteria 2-4.
fn two_state() -> Hmm {
    DiscreteHmm::new(
        vec![0.5, 0.5],
        vec![vec![0.85, 0.15], vec![0.25, 0.75]],
        vec![vec![0.8, 0.2], vec![0.3, 0.7]],
    )
    .expect("valid fixture")
}

fn two_state_obs() -> ObservationSeq<usize> {
    ObservationSeq::new(vec![0, 1, 1, 0, 1])
}

fn path_of(model: &Hmm, states: &[usize], ys: &ObservationSeq<usize>) -> Path {
    states.iter().fold(Trajectory::empty(), |p, &x| grow(model, &p, x, ys).0)
}

// ---------------------------------------------------------------------------
// 1. Exact lookahead marginal against forward-backward.

fn oracle_exactness() -> Result<Verdict> {
    let horizon = 6;
    let mut worst: f64 = 0.0;
    let mut worst_brute: f64 = 0.0;
    let mut checked = 0;
    for draw in 0..100u64 {
        let mut rng = seeded(derive_seed(0xc1, draw));
        let model = DiscreteHmm::random(3, 3, &mut rng);
        let (xs, ys) = model.simulate(horizon, &mut rng);
        for delta in [1, 2] {
            for t in 0..=horizon - delta {
                let prevs: Vec<Option<usize>> = if t == 0 { vec![None] } else { (0..3).map(Some).collect() };
                for prev in prevs {
                    let mut states = xs[..t].to_vec();
                    if let Some(a) = prev {
                        states[t - 1] = a;
                    }
                    let prefix = path_of(&model, &states, &ys);
                    let got = exact_lookahead_marginal(&model, &prefix, &ys, delta)?;
                    let want = forward_backward_conditional(&model, &ys, prev.as_ref(), t, delta)?;
                    // Brute-force enumeration as a second, independent reference.
                    let (_, brute) = conditional_lookahead(&model, &ys, &states, delta)?;
                    for ((g, w), b) in got.probs.iter().zip(&want).zip(&brute) {
                        worst = worst.max((g - w).abs());
                        worst_brute = worst_brute.max((g - b).abs());
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(Verdict::new(
        worst <= 1e-10 && worst_brute <= 1e-10,
        format!("{checked} conditionals, max |diff| vs forward-backward {worst:.2e}, vs enumeration {worst_brute:.2e} (tol 1e-10)"),
    ))
}

// ---------------------------------------------------------------------------
// 2. Proper weighting.

/// Self-normalised estimate of `P(x_t = 1)` and its delta-method standard error.
/// Particles are independent (no resampling), so the delta method applies.
fn indicator(log_w: &[f64], paths: &[Path], t: usize) -> (f64, f64) {
    let w = normalize_log(log_w);
    let h: Vec<f64> = paths.iter().map(|p| (*p.state_at(t).expect("path reaches t") == 1) as u8 as f64).collect();
    let est: f64 = w.iter().zip(&h).map(|(w, h)| w * h).sum();
    let var: f64 = w.iter().zip(&h).map(|(w, h)| w * w * (h - est).powi(2)).sum();
    (est, var.sqrt())
}

const PW_DELTA: usize = 2;
const PW_TIMES: [usize; 3] = [1, 2, 3];
const PW_PARTICLES: usize = 50_000;

/// Run `strategy` from `t = 0` and estimate at each of [`PW_TIMES`] right after its step.
fn strategy_estimates(strategy: &Strategy, seed: u64) -> Result<Vec<(f64, f64)>> {
    let spec = ModelSpec::new(two_state());
    let ys = two_state_obs();
    let mut rng = seeded(seed);
    let mut sys: ParticleSystem<usize, usize> = ParticleSystem::new(PW_PARTICLES);
    let mut out = Vec::new();
    for t in 0..=*PW_TIMES.last().unwrap() {
        let step = strategy.advance(&mut sys, &spec, &ys, &mut rng)?;
        if PW_TIMES.contains(&t) {
            out.push(match (&step.lookahead_paths, &step.lookahead_log_weights) {
                (Some(p), Some(w)) => indicator(w, p, t),
                _ => indicator(sys.track_or_concurrent(step.estimate_track), &sys.paths, t),
            });
        }
    }
    Ok(out)
}

/// Plain SIS to `t + Δ`, reading `x_t` from the delayed weights.
fn weighting_estimates(seed: u64) -> Result<Vec<(f64, f64)>> {
    let spec = ModelSpec::new(two_state());
    let ys = two_state_obs();
    let mut rng = seeded(seed);
    let mut sys: ParticleSystem<usize, usize> = ParticleSystem::new(PW_PARTICLES);
    let mut out = Vec::new();
    for n in 0..=PW_TIMES.last().unwrap() + PW_DELTA {
        sis_step(&mut sys, &spec, &ys, &mut rng)?;
        if n >= PW_DELTA && PW_TIMES.contains(&(n - PW_DELTA)) {
            out.push(indicator(&sys.log_w, &sys.paths, n - PW_DELTA));
        }
    }
    Ok(out)
}

/// Block sampling with the optimal block proposal; paths are held `Δ` steps ahead.
fn block_estimates(seed: u64) -> Result<Vec<(f64, f64)>> {
    let spec = ModelSpec::new(two_state());
    let ys = two_state_obs();
    let mut rng = seeded(seed);
    let mut sys: ParticleSystem<usize, usize> = ParticleSystem::new(PW_PARTICLES);
    for _ in 0..PW_DELTA {
        sis_step(&mut sys, &spec, &ys, &mut rng)?;
    }
    let mut out = Vec::new();
    for t in 0..=*PW_TIMES.last().unwrap() {
        block_sampling_step(&mut sys, &spec, &ys, PW_DELTA, &OptimalBlock, &mut rng)?;
        if PW_TIMES.contains(&t) {
            out.push(indicator(&sys.log_w, &sys.paths, t));
        }
    }
    Ok(out)
}

fn proper_weighting() -> Result<Verdict> {
    let model = two_state();
    let ys = two_state_obs();
    let truth: Vec<f64> = PW_TIMES
        .iter()
        .map(|&t| forward_backward(&model, &ys, t, PW_DELTA).map(|p| p[1]))
        .collect::<Result<_>>()?;
    let methods: Vec<(&str, Vec<(f64, f64)>)> = vec![
        ("weighting", weighting_estimates(11)?),
        ("exact", strategy_estimates(&Strategy::Exact { delta: PW_DELTA }, 12)?),
        ("block", block_estimates(13)?),
        ("pilot-K1", strategy_estimates(&Strategy::Pilot(PilotConfig::finite(PW_DELTA, 1)), 14)?),
        ("pilot-K4", strategy_estimates(&Strategy::Pilot(PilotConfig::finite(PW_DELTA, 4)), 15)?),
        ("deterministic-aux", strategy_estimates(&Strategy::Deterministic { delta: PW_DELTA }, 16)?),
        (
            "multilevel-aux",
            strategy_estimates(
                &Strategy::Multilevel {
                    partition: Partition::flat(2),
                    delta: PW_DELTA,
                    kind: PilotKind::Random,
                },
                17,
            )?,
        ),
    ];
    let mut passed = true;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (name, est) in &methods {
        for ((e, se), (want, t)) in est.iter().zip(truth.iter().zip(PW_TIMES)) {
            let z = (e - want).abs() / se;
            worst = worst.max(z);
            if z > 3.0 {
                passed = false;
                failures.push(format!("{name}@t={t}: {e:.4} vs {want:.4} ({z:.2} se)"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{} methods x {} times, worst |z| = {worst:.2} (tol 3)", methods.len(), PW_TIMES.len())
    } else {
        failures.join("; ")
    };
    Ok(Verdict::new(passed, detail))
}

// ---------------------------------------------------------------------------
// 3. Variance orderings.

const VO_T: usize = 2;
const VO_DELTA: usize = 2;
const VO_PARTICLES: usize = 1000;
const VO_REPLICATES: usize = 200;
const VO_PILOTS: [usize; 4] = [1, 4, 16, 64];

fn sample_variance(x: &[f64]) -> f64 {
    summarize(x).variance
}

/// Per-replicate variances of `w1, w2, w3` and `w_aux` for each pilot count, all
/// starting from the same prefixes drawn exactly from `π_{t-1}` with unit weight.
fn weight_variances(seed: u64) -> Result<Vec<f64>> {
    let model = two_state();
    let ys = two_state_obs();
    let spec = ModelSpec::new(two_state());
    let mut rng = seeded(seed);
    let table = enumerate_paths(&model, &ys, VO_T)?;
    let probs = normalize_log(&table.iter().map(|(_, l)| *l).collect::<Vec<_>>());
    let prefixes: Vec<Path> = (0..VO_PARTICLES)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let i = probs.iter().position(|p| {
                acc += p;
                u < acc
            });
            path_of(&model, &table[i.unwrap_or(probs.len() - 1)].0, &ys)
        })
        .collect();
    let start = || {
        let mut sys: ParticleSystem<usize, usize> = ParticleSystem::new(VO_PARTICLES);
        sys.paths = prefixes.clone();
        sys
    };

    // Exact lookahead: w1 = π_{t+Δ}(x_{0:t-1}) / π_{t-1}(x_{0:t-1}).
    let w1: Vec<f64> = prefixes
        .iter()
        .map(|p| exact_lookahead_marginal(&model, p, &ys, VO_DELTA).map(|m| m.log_z.exp()))
        .collect::<Result<_>>()?;

    // Trial draw without future information, weighted to the lookahead marginal.
    let mut sys = start();
    sis_step(&mut sys, &spec, &ys, &mut rng)?;
    let w2: Vec<f64> = sys
        .paths
        .iter()
        .zip(&sys.log_w)
        .map(|(p, lw)| exact_lookahead_marginal(&model, p, &ys, VO_DELTA - 1).map(|m| (lw + m.log_z).exp()))
        .collect::<Result<_>>()?;

    // The same draw extended by the trial for Δ more steps (lookahead weighting).
    for _ in 0..VO_DELTA {
        sis_step(&mut sys, &spec, &ys, &mut rng)?;
    }
    let w3: Vec<f64> = sys.log_w.iter().map(|l| l.exp()).collect();

    let mut out = vec![sample_variance(&w1), sample_variance(&w2), sample_variance(&w3)];
    for k in VO_PILOTS {
        let mut sys = start();
        pilot_step(&mut sys, &spec, &ys, &PilotConfig::finite(VO_DELTA, k), &mut rng)?;
        let aux: Vec<f64> = sys.track(WeightTrack::Auxiliary).expect("pilot step sets aux").iter().map(|l| l.exp()).collect();
        out.push(sample_variance(&aux));
    }
    Ok(out)
}

fn variance_orderings() -> Result<Verdict> {
    let rows: Vec<Vec<f64>> = (0..VO_REPLICATES)
        .map(|r| weight_variances(derive_seed(0xc3, r as u64)))
        .collect::<Result<_>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let (v1, v2, v3) = (col(0), col(1), col(2));
    let mut passed = true;
    let mut parts = Vec::new();
    // "a >= b" is confirmed when the paired mean difference is significantly positive.
    let mut confirm = |name: &str, a: &[f64], b: &[f64]| {
        let (d, se) = paired_difference(a, b);
        let ok = d - Z_1PCT * se > 0.0;
        passed &= ok;
        parts.push(format!("{name}: {d:.3e}±{se:.1e}"));
    };
    confirm("var3-var2", &v3, &v2);
    confirm("var2-var1", &v2, &v1);
    let gaps: Vec<Vec<f64>> = (0..VO_PILOTS.len())
        .map(|i| col(3 + i).iter().zip(&v1).map(|(a, b)| a - b).collect())
        .collect();
    for i in 1..VO_PILOTS.len() {
        confirm(&format!("gap(K={})-gap(K={})", VO_PILOTS[i - 1], VO_PILOTS[i]), &gaps[i - 1], &gaps[i]);
    }
    let gap_means: Vec<String> = gaps
        .iter()
        .zip(VO_PILOTS)
        .map(|(g, k)| format!("K={k}:{:.3e}", summarize(g).mean))
        .collect();
    parts.push(format!("var(aux)-var1 {}", gap_means.join(" ")));
    Ok(Verdict::new(passed, parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 4. Information loss is non-increasing in the lookahead.

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn information_monotone() -> Result<Verdict> {
    let hmm = TabularHmm {
        initial: vec![rational(1, 2), rational(1, 2)],
        transition: vec![vec![rational(17, 20), rational(3, 20)], vec![rational(1, 4), rational(3, 4)]],
        emission: vec![vec![rational(4, 5), rational(1, 5)], vec![rational(3, 10), rational(7, 10)]],
    };
    let h = vec![rational(0, 1), rational(1, 1)];
    let t = 2;
    let losses: Vec<BigRational> = (0..=4).map(|d| hmm.information_loss(t, d, &h)).collect();
    let monotone = losses.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = losses
        .iter()
        .map(|v| format!("{:.6}", num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)))
        .collect();
    Ok(Verdict::new(monotone, format!("II(0..4) = [{}] (exact rationals)", shown.join(", "))))
}

// ---------------------------------------------------------------------------
// Experiment helpers.

fn config(kind: ExperimentKind, strategy: serde_json::Value) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(kind);
    cfg.strategy = serde_json::from_value::<StrategyConfig>(strategy).expect("valid strategy");
    cfg
}

fn rep_rows(rows: &[MetricsRow], lookahead: usize) -> Vec<&MetricsRow> {
    let mut v: Vec<&MetricsRow> = rows.iter().filter(|r| r.kind == RowKind::Rep && r.lookahead == lookahead).collect();
    v.sort_by_key(|r| r.rep);
    v
}

fn mean_of(rows: &[MetricsRow], lookahead: usize, f: impl Fn(&MetricsRow) -> Option<f64>) -> f64 {
    let v: Vec<f64> = rep_rows(rows, lookahead).into_iter().filter_map(f).collect();
    summarize(&v).mean
}

fn column(rows: &[MetricsRow], lookahead: usize, f: impl Fn(&MetricsRow) -> Option<f64>) -> Vec<f64> {
    rep_rows(rows, lookahead).into_iter().map(|r| f(r).expect("metric present")).collect()
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

// ---------------------------------------------------------------------------
// 5. Nonlinear growth model.

fn nonlinear() -> Result<Verdict> {
    let plain = run_experiment(&config(ExperimentKind::Nonlinear, serde_json::json!({"kind": "plain"})))?;
    let mut pilot_cfg = config(
        ExperimentKind::Nonlinear,
        serde_json::json!({"kind": "pilot", "delta": 1, "candidates": 1, "smoothing": {"width": 0.5}}),
    );
    pilot_cfg.lags = vec![0, 1, 2];
    let pilot = run_experiment(&pilot_cfg)?;
    let rmse = |r: &MetricsRow| r.rmse1;
    let plain0 = mean_of(&plain, 0, rmse);
    let plain3 = mean_of(&plain, 3, rmse);
    let pilot3 = mean_of(&pilot, 3, rmse);
    let curve: Vec<String> = (0..=3).map(|d| format!("{:.3}", mean_of(&plain, d, rmse))).collect();
    let passed = within(plain0, 3.128, 0.4) && within(plain3, 0.817, 0.05) && within(pilot3, 0.815, 0.05);
    Ok(Verdict::new(
        passed,
        format!(
            "SMC RMSE1 δ=0 {plain0:.3} (3.128±0.4), δ=3 {plain3:.3} (0.817±0.05); SMC-S δ+Δ'=3 {pilot3:.3} (0.815±0.05); SMC curve [{}]",
            curve.join(", ")
        ),
    ))
}

// ---------------------------------------------------------------------------
// 6. Adaptive lookahead.

const ADAPTIVE_REPS: usize = 50;

fn adaptive() -> Result<Verdict> {
    let mut cfg = config(
        ExperimentKind::Nonlinear,
        serde_json::json!({"kind": "adaptive", "candidates": 1, "smoothing": {"width": 0.5}, "rule": {"variance": 4.0}}),
    );
    cfg.reps = ADAPTIVE_REPS;
    cfg.lags = vec![0];
    let rows = run_experiment(&cfg)?;
    let steps = mean_of(&rows, cfg.strategy.delta(), |r| Some(r.mean_delta));
    Ok(Verdict::new(
        within(steps, 0.244, 0.10),
        format!("mean lookahead {steps:.3} over {ADAPTIVE_REPS} reps (0.244±0.10)"),
    ))
}

// ---------------------------------------------------------------------------
// 7. Tracking in clutter.

fn pooled_mae(rows: &[MetricsRow], lookahead: usize) -> f64 {
    rows.iter()
        .find(|r| r.kind == RowKind::Pooled && r.lookahead == lookahead)
        .and_then(|r| r.mae1)
        .unwrap_or(f64::NAN)
}

fn tracking() -> Result<Verdict> {
    let plain = run_experiment(&config(ExperimentKind::Tracking, serde_json::json!({"kind": "plain"})))?;
    let mut mkf_s = config(
        ExperimentKind::Tracking,
        serde_json::json!({"kind": "pilot", "delta": 3, "pilots": 1, "smoothing": {"count": 10}}),
    );
    mkf_s.lags = vec![12];
    let smoothed = run_experiment(&mkf_s)?;
    let at0 = pooled_mae(&plain, 0);
    let at15 = pooled_mae(&plain, 15);
    let s15 = pooled_mae(&smoothed, 15);
    // Paired over repetitions (same data seeds): S is not significantly worse than MKF.
    let mae = |r: &MetricsRow| r.mae1;
    let (d, se) = paired_difference(&column(&smoothed, 15, mae), &column(&plain, 15, mae));
    let not_worse = d - Z_5PCT * se <= 0.0;
    let passed = within(at0, 1.030, 0.06) && within(at15, 0.445, 0.04) && not_worse;
    Ok(Verdict::new(
        passed,
        format!(
            "MKF MAE1 Δ+δ=0 {at0:.3} (1.030±0.06), Δ+δ=15 {at15:.3} (0.445±0.04); MKF-S Δ'+δ=15 {s15:.3}, per-rep diff {d:+.4}±{se:.4}"
        ),
    ))
}

// ---------------------------------------------------------------------------
// 8. Differential 16-QAM.

/// Differential encoding, a noiseless identity channel, nearest-point detection and
/// differential decoding recover every bit.
fn qam_codec_identity(runs: usize, symbols: usize) -> Result<(usize, usize)> {
    let c = Constellation::new(16)?;
    let all: Vec<usize> = (0..c.order()).collect();
    let mut errors = 0;
    let mut bits = 0;
    for run in 0..runs {
        let mut rng = seeded(derive_seed(0xc8a, run as u64));
        let mut prev = rng.gen_range(0..c.order());
        let mut prev_hat = all[c.nearest_in(c.point(prev), &all)];
        for _ in 0..symbols {
            let info = rng.gen_range(0..c.order());
            let x = c.differential_encode(prev, info);
            let x_hat = all[c.nearest_in(c.point(x), &all)];
            errors += c.bit_errors(info, c.differential_decode(prev_hat, x_hat));
            bits += c.bits_per_symbol();
            prev = x;
            prev_hat = x_hat;
        }
    }
    Ok((errors, bits))
}

/// Least-squares slope of per-repetition BER against `δ`, with its standard error
/// from the per-repetition slopes.
fn ber_slope(rows: &[MetricsRow], lags: &[usize]) -> (f64, f64) {
    let mean_lag = lags.iter().sum::<usize>() as f64 / lags.len() as f64;
    let sxx: f64 = lags.iter().map(|&l| (l as f64 - mean_lag).powi(2)).sum();
    let cols: Vec<Vec<f64>> = lags.iter().map(|&l| column(rows, l, |r| r.ber)).collect();
    let slopes: Vec<f64> = (0..cols[0].len())
        .map(|rep| {
            lags.iter()
                .zip(&cols)
                .map(|(&l, c)| (l as f64 - mean_lag) * c[rep])
                .sum::<f64>()
                / sxx
        })
        .collect();
    let s = summarize(&slopes);
    (s.mean, s.se_mean)
}

fn qam() -> Result<Verdict> {
    let (errors, bits) = qam_codec_identity(20, 500)?;
    let codec_ok = errors == 0;

    let base_cfg = config(ExperimentKind::Qam, serde_json::json!({"kind": "multilevel", "delta": 0}));
    let lags = base_cfg.lags.clone();
    let base = run_experiment(&base_cfg)?;
    let pilot = run_experiment(&config(ExperimentKind::Qam, serde_json::json!({"kind": "multilevel", "delta": 1})))?;
    let ber = |r: &MetricsRow| r.ber;

    // (b) no significant increase between consecutive lags, and a significantly negative trend.
    let mut steps_ok = true;
    for w in lags.windows(2) {
        let (d, se) = paired_difference(&column(&base, w[1], ber), &column(&base, w[0], ber));
        steps_ok &= d - Z_5PCT * se <= 0.0;
    }
    let (slope, slope_se) = ber_slope(&base, &lags);
    let trend_ok = steps_ok && slope + Z_5PCT * slope_se < 0.0;
    let curve: Vec<String> = lags.iter().map(|&l| format!("{:.4}", mean_of(&base, l, ber))).collect();

    // (c) the pilot improves on the baseline at the same δ.
    let mut pilot_ok = true;
    let mut diffs = Vec::new();
    for &l in &lags {
        let (d, se) = paired_difference(&column(&pilot, l + 1, ber), &column(&base, l, ber));
        if l == lags[0] || l == *lags.last().unwrap() {
            pilot_ok &= d + Z_5PCT * se < 0.0;
        }
        diffs.push(format!("δ={l}:{d:+.4}±{se:.4}"));
    }
    Ok(Verdict::new(
        codec_ok && trend_ok && pilot_ok,
        format!(
            "(a) {errors} bit errors in {bits}; (b) BER(δ) [{}], slope {slope:.2e}±{slope_se:.1e}; (c) Δ'=1 minus Δ'=0 [{}]",
            curve.join(", "),
            diffs.join(" ")
        ),
    ))
}

// ---------------------------------------------------------------------------
// 9. Determinism across thread counts.

fn csv_bytes(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let rows = pool.install(|| run_experiment(cfg))?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    Ok(buf)
}

fn determinism() -> Result<Verdict> {
    let mut configs = vec![
        config(
            ExperimentKind::Nonlinear,
            serde_json::json!({"kind": "pilot", "delta": 1, "candidates": 1, "smoothing": {"width": 0.5}}),
        ),
        config(ExperimentKind::Tracking, serde_json::json!({"kind": "pilot", "delta": 3, "smoothing": {"count": 10}})),
        config(ExperimentKind::Qam, serde_json::json!({"kind": "multilevel", "delta": 1})),
    ];
    for c in &mut configs {
        c.reps = 4;
        c.particles = c.particles.min(300);
    }
    let mut identical = 0;
    for cfg in &configs {
        let single = csv_bytes(cfg, 1)?;
        if csv_bytes(cfg, 1)? == single && csv_bytes(cfg, 4)? == single {
            identical += 1;
        }
    }
    Ok(Verdict::new(
        identical == configs.len(),
        format!("{identical}/{} runs byte-identical on repeat and across 1 vs 4 threads", configs.len()),
    ))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Verdict>); 9] = [
        ("oracle-exactness", oracle_exactness),
        ("proper-weighting", proper_weighting),
        ("variance-orderings", variance_orderings),
        ("information-monotone", information_monotone),
        ("nonlinear-benchmark", nonlinear),
        ("adaptive-lookahead", adaptive),
        ("tracking-clutter", tracking),
        ("qam-16", qam),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let verdict = run().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        let status = if verdict.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} [{number}] {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            verdict.detail
        );
        failed += usize::from(!verdict.passed);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
