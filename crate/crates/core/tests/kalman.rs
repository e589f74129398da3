//! Kalman layer against brute-force joint Gaussian conditioning.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, SMatrix, Vector1, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use lookahead_smc::kalman::{fixed_lag_smooth, kf_step, CdlmSpec, GaussianBelief, RealCdlm};
use lookahead_smc::lookahead::Strategy;
use lookahead_smc::model::{log_target, ModelSpec, ObservationSeq};
use lookahead_smc::models::{Constellation, QamModel};
use lookahead_smc::numeric::log_sum_exp;
use lookahead_smc::oracle::enumerate_paths;
use lookahead_smc::particle::ParticleSystem;
use lookahead_smc::rng::seeded;

/// Joint mean and covariance of `(z_0, …, z_T, y_1, …, y_T)` for
/// `z_t = F z_{t-1} + w_t`, `y_t = H_t z_t + v_t`.
fn joint<const N: usize, const P: usize>(
    prior: &GaussianBelief<N>,
    f: &SMatrix<f64, N, N>,
    q: &SMatrix<f64, N, N>,
    h: &[SMatrix<f64, P, N>],
    r: &SMatrix<f64, P, P>,
) -> (DVector<f64>, DMatrix<f64>) {
    let horizon = h.len();
    let nz = N * (horizon + 1);
    let dim = nz + P * horizon;
    let mut means = vec![prior.mean];
    let mut covs = vec![prior.cov];
    for t in 1..=horizon {
        means.push(f * means[t - 1]);
        covs.push(f * covs[t - 1] * f.transpose() + q);
    }
    // Cov(z_s, z_t) = Σ_s (F')^{t-s} for s <= t.
    let cross = |s: usize, t: usize| -> SMatrix<f64, N, N> {
        let (a, b, flip) = if s <= t { (s, t, false) } else { (t, s, true) };
        let mut c = covs[a];
        for _ in a..b {
            c *= f.transpose();
        }
        if flip {
            c.transpose()
        } else {
            c
        }
    };
    let mut mean = DVector::zeros(dim);
    let mut cov = DMatrix::zeros(dim, dim);
    for s in 0..=horizon {
        mean.rows_mut(N * s, N).copy_from(&means[s]);
        for t in 0..=horizon {
            cov.view_mut((N * s, N * t), (N, N)).copy_from(&cross(s, t));
        }
    }
    for t in 1..=horizon {
        let yi = nz + P * (t - 1);
        let ht = &h[t - 1];
        mean.rows_mut(yi, P).copy_from(&(ht * means[t]));
        for s in 0..=horizon {
            let zy = cross(s, t) * ht.transpose();
            cov.view_mut((N * s, yi), (N, P)).copy_from(&zy);
            cov.view_mut((yi, N * s), (P, N)).copy_from(&zy.transpose());
        }
        for u in 1..=horizon {
            let yu = nz + P * (u - 1);
            let mut c = ht * cross(t, u) * h[u - 1].transpose();
            if u == t {
                c += r;
            }
            cov.view_mut((yi, yu), (P, P)).copy_from(&c);
        }
    }
    (mean, cov)
}

/// `E(z_k | y)` and `Cov(z_k | y)` from the joint.
fn condition<const N: usize>(mean: &DVector<f64>, cov: &DMatrix<f64>, nz: usize, k: usize, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let ny = y.len();
    let czy = cov.view((N * k, nz), (N, ny)).into_owned();
    let cyy = cov.view((nz, nz), (ny, ny)).into_owned();
    let inv = cyy.cholesky().expect("observation covariance is positive definite").inverse();
    let innovation = y - mean.rows(nz, ny);
    let m = mean.rows(N * k, N) + &czy * &inv * innovation;
    let c = cov.view((N * k, N * k), (N, N)) - &czy * &inv * czy.transpose();
    (m, c)
}

fn log_normal(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = cov.clone().cholesky().expect("positive definite");
    let d = y - mean;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (y.len() as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + d.dot(&chol.solve(&d)))
}

#[test]
fn fixed_lag_smoother_matches_joint_conditioning() {
    let mut rng = seeded(41);
    for trial in 0..20 {
        let f = Matrix2::new(0.9, 0.2, -0.1, 0.7) * (0.5 + 0.5 * rng.gen::<f64>());
        let spec = RealCdlm::<2>::real(f, Vector2::new(1.0, 0.3), 0.8, Vector2::new(1.0, 0.5), 0.4).unwrap();
        let prior = GaussianBelief::new(Vector2::new(0.5, -1.0), Matrix2::new(1.0, 0.2, 0.2, 0.5));
        let horizon = 6;
        let symbols: Vec<f64> = (0..horizon).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let h: Vec<SMatrix<f64, 1, 2>> = symbols.iter().map(|s| spec.observation_matrix(Complex::new(*s, 0.0))).collect();
        let ys: Vec<f64> = (0..horizon).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();

        let mut history = vec![prior.clone()];
        for (s, y) in symbols.iter().zip(&ys) {
            let (next, _) = kf_step(history.last().unwrap(), &spec, Complex::new(*s, 0.0), &Vector1::new(*y)).unwrap();
            history.push(next);
        }
        let (mean, cov) = joint(&prior, &spec.transition, &spec.process_cov, &h, &spec.obs_cov());
        let y = DVector::from_vec(ys.clone());
        for lag in 0..=3 {
            let smoothed = fixed_lag_smooth(&history, &spec.transition, &spec.process_cov, lag).unwrap();
            let (m, c) = condition::<2>(&mean, &cov, 2 * (horizon + 1), horizon - lag, &y);
            for i in 0..2 {
                assert!((smoothed.mean[i] - m[i]).abs() < 1e-8, "trial {trial} lag {lag}: mean");
                for j in 0..2 {
                    assert!((smoothed.cov[(i, j)] - c[(i, j)]).abs() < 1e-8, "trial {trial} lag {lag}: cov");
                }
            }
        }
    }
}

type Channel = CdlmSpec<8, 2>;

fn channel() -> Channel {
    CdlmSpec::<8, 2>::complex(
        &[
            0.9, -0.2, 0.05, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
        &[0.3, 0.0, 0.0, 0.0],
        &[1.0, 0.4, 0.2, 0.1],
        0.2,
    )
    .unwrap()
}

fn frame(spec: &Channel, horizon: usize, seed: u64) -> Vec<Vector2<f64>> {
    let mut rng = seeded(seed);
    (0..horizon)
        .map(|_| Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * (1.0 + spec.obs_noise_var))
        .collect()
}

#[test]
fn mixture_likelihood_matches_enumeration_over_symbols() {
    let spec = channel();
    let prior = spec.stationary_belief().unwrap();
    let c = Constellation::new(4).unwrap();
    let horizon = 3;
    let ys = frame(&spec, horizon, 5);
    let obs = ObservationSeq::new(ys.clone());
    let model = QamModel::new(c.clone(), spec.clone(), prior.clone(), vec![Some(2)]);

    let paths = enumerate_paths(&model, &obs, horizon + 1).unwrap();
    assert_eq!(paths.len(), 4usize.pow(horizon as u32));
    let y = DVector::from_iterator(2 * horizon, ys.iter().flat_map(|v| [v[0], v[1]]));
    let mut brute = Vec::new();
    for (states, lp) in &paths {
        let h: Vec<SMatrix<f64, 2, 8>> = states[1..].iter().map(|&x| spec.observation_matrix(c.point(x))).collect();
        let (mean, cov) = joint(&prior, &spec.transition, &spec.process_cov, &h, &spec.obs_cov());
        let nz = 8 * (horizon + 1);
        let ll = log_normal(&y, &mean.rows(nz, 2 * horizon).into_owned(), &cov.view((nz, nz), (2 * horizon, 2 * horizon)).into_owned());
        let log_prior = -(horizon as f64) * 4f64.ln();
        assert!((lp - (ll + log_prior)).abs() < 1e-8, "{states:?}: {lp} vs {}", ll + log_prior);
        brute.push(ll + log_prior);
    }
    let enumerated: Vec<f64> = paths.iter().map(|(_, l)| *l).collect();
    assert!((log_sum_exp(&enumerated) - log_sum_exp(&brute)).abs() < 1e-8);
}

#[test]
fn single_branch_mixture_filter_is_the_kalman_filter() {
    let spec = channel();
    let prior = spec.stationary_belief().unwrap();
    let c = Constellation::new(16).unwrap();
    let horizon = 12;
    let symbols: Vec<usize> = (0..=horizon).map(|t| (t * 7) % 16).collect();
    let ys = frame(&spec, horizon, 9);
    let obs = ObservationSeq::new(ys.clone());
    let model = QamModel::new(c.clone(), spec.clone(), prior.clone(), symbols.iter().map(|&s| Some(s)).collect());
    let mspec = ModelSpec::new(model.clone());
    let mut sys: ParticleSystem<usize, _> = ParticleSystem::new(5);
    let mut rng = seeded(3);
    for _ in 0..=horizon {
        Strategy::Plain.advance(&mut sys, &mspec, &obs, &mut rng).unwrap();
    }

    let mut belief = prior;
    let mut log_lik = 0.0;
    for t in 1..=horizon {
        let (next, ll) = kf_step(&belief, &spec, c.point(symbols[t]), &ys[t - 1]).unwrap();
        belief = next;
        log_lik += ll;
    }
    assert!((log_target(&model, &symbols, &obs) - log_lik).abs() < 1e-9);
    for (path, lw) in sys.paths.iter().zip(&sys.log_w) {
        assert_eq!(path.states(), symbols);
        assert!((lw - log_lik).abs() < 1e-9);
        let carry = path.last_carry().unwrap();
        assert!((carry.mean - belief.mean).abs().max() < 1e-10);
        assert!((carry.cov - belief.cov).abs().max() < 1e-10);
    }
}
