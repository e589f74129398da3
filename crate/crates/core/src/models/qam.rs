//! QAM symbols over a flat-fading ARMA channel.
//!
//! A `4^L`-QAM symbol is a sum of `L` QPSK components,
//! `x = Σ_l 2^{L-l} r_l (1 + i)` with `r_l ∈ {1, i, -1, -i}`, which places the points on
//! the odd grid `{±1, ±3, …}²`. Symbol index `Σ_l k_l 4^{L-l}` stores the exponent
//! `k_l` of `r_l = i^{k_l}` as base-4 digits, most significant first, so the nested
//! quadrant partition used by multilevel sampling groups indices by leading digits.
//!
//! Differential coding multiplies components: `r_{x_t,l} = r_{d_t,l} r_{x_{t-1},l}`,
//! i.e. digit-wise addition mod 4. Each digit carries two Gray-coded bits.
//!
//! The channel `ξ_t = h' z_t` follows a complex ARMA process written as a CDLM with
//! state `z_t = (ζ_t, ζ_{t-1}, …)`, `ζ_t = Σ a_i ζ_{t-i} + u_t`.

use std::borrow::Cow;

use nalgebra::{Complex, SVector, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::kalman::{kf_step, CdlmSpec, GaussianBelief};
use crate::lookahead::Partition;
use crate::model::{Extension, Model, ObservationSeq};
use crate::rng::SmcRng;

/// Packed channel state: four complex lags.
pub const CHANNEL_DIM: usize = 8;

pub type ChannelSpec = CdlmSpec<CHANNEL_DIM, 2>;
pub type ChannelBelief = GaussianBelief<CHANNEL_DIM>;

const GRAY: [[bool; 2]; 4] = [[false, false], [false, true], [true, true], [true, false]];

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    levels: usize,
    points: Vec<Complex<f64>>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        let mut levels = 0;
        let mut n = order;
        while n > 1 && n % 4 == 0 {
            n /= 4;
            levels += 1;
        }
        if n != 1 || levels == 0 {
            return Err(SmcError::Config(format!("QAM order {order} is not a power of 4")));
        }
        let mut c = Constellation {
            levels,
            points: Vec::with_capacity(order),
        };
        for i in 0..order {
            let p = c
                .digits(i)
                .iter()
                .enumerate()
                .map(|(l, &k)| Complex::<f64>::i().powu(k as u32) * Complex::new(1.0, 1.0) * f64::from(1u32 << (levels - 1 - l)))
                .sum::<Complex<f64>>();
            c.points.push(p);
        }
        Ok(c)
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn point(&self, i: usize) -> Complex<f64> {
        self.points[i]
    }

    pub fn points(&self) -> &[Complex<f64>] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.levels
    }

    /// Average `|x|²` over the constellation.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    /// QPSK exponents, most significant first.
    pub fn digits(&self, i: usize) -> Vec<u8> {
        (0..self.levels)
            .map(|l| ((i >> (2 * (self.levels - 1 - l))) & 3) as u8)
            .collect()
    }

    pub fn from_digits(&self, digits: &[u8]) -> usize {
        digits.iter().fold(0, |acc, &k| (acc << 2) | (k as usize & 3))
    }

    pub fn differential_encode(&self, prev: usize, info: usize) -> usize {
        let d: Vec<u8> = self
            .digits(prev)
            .iter()
            .zip(self.digits(info))
            .map(|(a, b)| (a + b) % 4)
            .collect();
        self.from_digits(&d)
    }

    pub fn differential_decode(&self, prev: usize, current: usize) -> usize {
        let d: Vec<u8> = self
            .digits(current)
            .iter()
            .zip(self.digits(prev))
            .map(|(a, b)| (a + 4 - b) % 4)
            .collect();
        self.from_digits(&d)
    }

    pub fn bits(&self, i: usize) -> Vec<bool> {
        self.digits(i).iter().flat_map(|&k| GRAY[k as usize]).collect()
    }

    pub fn bit_errors(&self, a: usize, b: usize) -> usize {
        self.bits(a).iter().zip(self.bits(b)).filter(|(x, y)| **x != *y).count()
    }

    /// Index into `candidates` of the point nearest to `z`; ties go to the first.
    pub fn nearest_in(&self, z: Complex<f64>, candidates: &[usize]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &c) in candidates.iter().enumerate() {
            let d = (self.points[c] - z).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Nested quadrants: level `l` groups symbols sharing their first `l` digits.
    pub fn partition(&self) -> Partition {
        let order = self.order();
        let levels = (1..=self.levels)
            .map(|l| {
                let width = 1usize << (2 * (self.levels - l));
                (0..order / width).map(|g| (g * width..(g + 1) * width).collect()).collect()
            })
            .collect();
        Partition::new(order, levels).expect("quadrant partition is valid")
    }
}

/// ARMA channel coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaChannel {
    /// `a_i` in `ζ_t = Σ a_i ζ_{t-i} + u_t`.
    pub ar: [f64; 3],
    /// `θ_0..θ_3` with `ξ_t = Σ θ_i ζ_{t-i}`.
    pub ma: [f64; 4],
}

impl Default for ArmaChannel {
    fn default() -> Self {
        ArmaChannel {
            ar: [2.37409, -1.92936, 0.53208],
            ma: [0.0089409, 0.0268227, 0.0268227, 0.0089409],
        }
    }
}

impl ArmaChannel {
    pub fn spec(&self, obs_noise_var: f64) -> Result<ChannelSpec> {
        let f = [
            self.ar[0], self.ar[1], self.ar[2], 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        ChannelSpec::complex(&f, &[1.0, 0.0, 0.0, 0.0], &self.ma, obs_noise_var)
    }

    /// Stationary `E|ξ|²`.
    pub fn gain_power(&self) -> Result<f64> {
        let spec = self.spec(1.0)?;
        let s = spec.stationary_belief()?;
        Ok(spec.loading.dot(&(s.cov * spec.loading)))
    }

    /// Per-symbol noise variance `σ²` giving `E|ξ|² E|x|² / σ² = 10^{snr/10}`.
    pub fn noise_var_for_snr(&self, constellation: &Constellation, snr_db: f64) -> Result<f64> {
        Ok(self.gain_power()? * constellation.mean_energy() / 10f64.powf(snr_db / 10.0))
    }
}

/// One transmitted frame.
#[derive(Debug, Clone)]
pub struct QamFrame {
    /// Transmitted symbols `x_0..x_T`; `x_0` is the differential reference.
    pub symbols: Vec<usize>,
    /// Information symbols `d_t`, `None` where a known symbol was inserted.
    pub info: Vec<Option<usize>>,
    /// Symbols the receiver knows in advance.
    pub known: Vec<Option<usize>>,
    pub channel: Vec<Complex<f64>>,
    pub initial_state: SVector<f64, CHANNEL_DIM>,
    pub observations: ObservationSeq<Vector2<f64>>,
}

impl QamFrame {
    /// Bit error ratio of differentially decoded estimates `x̂_{0:T}`.
    pub fn bit_error_ratio(&self, constellation: &Constellation, estimates: &[usize]) -> f64 {
        let mut errors = 0;
        let mut total = 0;
        for t in 1..self.symbols.len() {
            if let Some(d) = self.info[t] {
                let decoded = constellation.differential_decode(estimates[t - 1], estimates[t]);
                errors += constellation.bit_errors(d, decoded);
                total += constellation.bits_per_symbol();
            }
        }
        if total == 0 {
            0.0
        } else {
            errors as f64 / total as f64
        }
    }
}

fn sample_belief<R: Rng + ?Sized>(belief: &ChannelBelief, rng: &mut R) -> SVector<f64, CHANNEL_DIM> {
    let noise = SVector::<f64, CHANNEL_DIM>::from_fn(|_, _| rng.sample(StandardNormal));
    let factor = (belief.cov + nalgebra::SMatrix::<f64, CHANNEL_DIM, CHANNEL_DIM>::identity() * 1e-14)
        .cholesky()
        .expect("stabilised covariance")
        .l();
    belief.mean + factor * noise
}

/// Simulate a frame of `horizon` symbols; every `known_period`-th symbol starting at
/// `t = 1` is known (`0` disables known symbols).
pub fn simulate_frame<R: Rng + ?Sized>(
    constellation: &Constellation,
    spec: &ChannelSpec,
    initial: &ChannelBelief,
    horizon: usize,
    known_period: usize,
    rng: &mut R,
) -> QamFrame {
    let order = constellation.order();
    let mut z = sample_belief(initial, rng);
    let initial_state = z;
    let x0 = rng.gen_range(0..order);
    let mut symbols = vec![x0];
    let mut info = vec![None];
    let mut known = vec![Some(x0)];
    let mut channel = vec![spec.channel(&z)];
    let mut ys = Vec::with_capacity(horizon);
    let half = (0.5f64).sqrt();
    let noise_sd = (0.5 * spec.obs_noise_var).sqrt();
    for t in 1..=horizon {
        let u = Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * half;
        let mut next = spec.transition * z;
        next[0] += u.re;
        next[1] += u.im;
        z = next;
        let is_known = known_period > 0 && (t - 1) % known_period == 0;
        let x = if is_known {
            let k = rng.gen_range(0..order);
            info.push(None);
            known.push(Some(k));
            k
        } else {
            let d = rng.gen_range(0..order);
            info.push(Some(d));
            known.push(None);
            constellation.differential_encode(*symbols.last().unwrap(), d)
        };
        let xi = spec.channel(&z);
        let v = Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * noise_sd;
        let y = xi * constellation.point(x) + v;
        ys.push(Vector2::new(y.re, y.im));
        symbols.push(x);
        channel.push(xi);
    }
    QamFrame {
        symbols,
        info,
        known,
        channel,
        initial_state,
        observations: ObservationSeq::new(ys),
    }
}

/// Mixture Kalman filter model over transmitted symbols.
#[derive(Debug, Clone)]
pub struct QamModel {
    constellation: Constellation,
    spec: ChannelSpec,
    initial: ChannelBelief,
    known: Vec<Option<usize>>,
    all: Vec<usize>,
}

impl QamModel {
    pub fn new(constellation: Constellation, spec: ChannelSpec, initial: ChannelBelief, known: Vec<Option<usize>>) -> Self {
        let all = (0..constellation.order()).collect();
        QamModel {
            constellation,
            spec,
            initial,
            known,
            all,
        }
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    fn known_at(&self, t: usize) -> Option<usize> {
        self.known.get(t).copied().flatten()
    }

    fn log_prior(&self, t: usize, x: usize) -> f64 {
        match self.known_at(t) {
            Some(k) if k == x => 0.0,
            Some(_) => f64::NEG_INFINITY,
            None => -(self.constellation.order() as f64).ln(),
        }
    }
}

impl Model for QamModel {
    type State = usize;
    type Obs = Vector2<f64>;
    type Carry = ChannelBelief;

    fn sample_transition(&self, _prev: Option<&ChannelBelief>, t: usize, rng: &mut SmcRng) -> usize {
        self.known_at(t).unwrap_or_else(|| rng.gen_range(0..self.constellation.order()))
    }

    fn extend(&self, prev: Option<&ChannelBelief>, t: usize, x: &usize, y: Option<&Vector2<f64>>) -> Extension<ChannelBelief> {
        let log_transition = self.log_prior(t, *x);
        let Some(prev) = prev else {
            return Extension {
                log_transition,
                log_observation: 0.0,
                carry: self.initial.clone(),
            };
        };
        match y {
            None => Extension {
                log_transition,
                log_observation: 0.0,
                carry: prev.predict(&self.spec.transition, &self.spec.process_cov),
            },
            Some(y) => {
                let (carry, ll) =
                    kf_step(prev, &self.spec, self.constellation.point(*x), y).expect("observation noise is positive");
                Extension {
                    log_transition,
                    log_observation: ll,
                    carry,
                }
            }
        }
    }

    fn support(&self, t: usize, _y: Option<&Vector2<f64>>) -> Option<Cow<'_, [usize]>> {
        match self.known_at(t) {
            Some(k) => Some(Cow::Owned(vec![k])),
            None => Some(Cow::Borrowed(&self.all)),
        }
    }

    /// The symbol nearest to `y_t / ξ̂_t`, with `ξ̂_t` the predicted channel.
    fn greedy_choice(&self, prev: Option<&ChannelBelief>, _t: usize, y: Option<&Vector2<f64>>, candidates: &[usize]) -> usize {
        let (Some(prev), Some(y)) = (prev, y) else {
            return 0;
        };
        let xi = self.spec.channel(&(self.spec.transition * prev.mean));
        if xi.norm_sqr() < 1e-300 {
            return 0;
        }
        self.constellation.nearest_in(Complex::new(y[0], y[1]) / xi, candidates)
    }

    fn summary_scalar(&self, x: &usize, _carry: &ChannelBelief) -> Option<f64> {
        Some(*x as f64)
    }
}
