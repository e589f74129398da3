//! Conditional dynamic linear models.
//!
//! `z_t = F z_{t-1} + g u_t`, `y_t = (h' z_t) x_t + v_t` where `x_t` is the discrete
//! symbol. A complex system with `d` coordinates is packed as a real one with
//! `N = 2d`: coordinate `i` occupies slots `2i` (real) and `2i+1` (imaginary), and the
//! observation has `P = 2` real components. Complex noises are circular with unit
//! variance for `u_t` and `σ²` for `v_t`, so each real component carries half.

use nalgebra::{Complex, SMatrix, SVector};

use crate::error::{Result, SmcError};

use super::belief::GaussianBelief;

#[derive(Debug, Clone, PartialEq)]
pub struct CdlmSpec<const N: usize, const P: usize> {
    /// Real-packed `F`.
    pub transition: SMatrix<f64, N, N>,
    /// Covariance of `g u_t` in the packed coordinates.
    pub process_cov: SMatrix<f64, N, N>,
    /// Real `h`; for complex systems `h_i` is stored at both slots of coordinate `i`.
    pub loading: SVector<f64, N>,
    pub obs_noise_var: f64,
    pub complex: bool,
}

/// Real-valued system with a scalar observation.
pub type RealCdlm<const N: usize> = CdlmSpec<N, 1>;

impl<const N: usize> CdlmSpec<N, 1> {
    /// `u_t ~ N(0, noise_var)`.
    pub fn real(
        transition: SMatrix<f64, N, N>,
        noise_loading: SVector<f64, N>,
        noise_var: f64,
        loading: SVector<f64, N>,
        obs_noise_var: f64,
    ) -> Result<Self> {
        let spec = CdlmSpec {
            transition,
            process_cov: noise_loading * noise_loading.transpose() * noise_var,
            loading,
            obs_noise_var,
            complex: false,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<const N: usize> CdlmSpec<N, 2> {
    /// Complex system with real coefficients; `transition` is `d x d` row-major with `N = 2d`.
    pub fn complex(transition: &[f64], noise_loading: &[f64], loading: &[f64], obs_noise_var: f64) -> Result<Self> {
        let d = N / 2;
        if N % 2 != 0 || transition.len() != d * d || noise_loading.len() != d || loading.len() != d {
            return Err(SmcError::Config(format!("complex system of dimension {d} needs N = {N} even and matching coefficients")));
        }
        let mut f = SMatrix::<f64, N, N>::zeros();
        let mut q = SMatrix::<f64, N, N>::zeros();
        let mut h = SVector::<f64, N>::zeros();
        for i in 0..d {
            h[2 * i] = loading[i];
            h[2 * i + 1] = loading[i];
            for j in 0..d {
                for c in 0..2 {
                    f[(2 * i + c, 2 * j + c)] = transition[i * d + j];
                    q[(2 * i + c, 2 * j + c)] = 0.5 * noise_loading[i] * noise_loading[j];
                }
            }
        }
        let spec = CdlmSpec {
            transition: f,
            process_cov: q,
            loading: h,
            obs_noise_var,
            complex: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unpack `h' z` of a packed state.
    pub fn channel(&self, z: &SVector<f64, N>) -> Complex<f64> {
        let mut c = Complex::new(0.0, 0.0);
        for i in 0..N / 2 {
            c.re += self.loading[2 * i] * z[2 * i];
            c.im += self.loading[2 * i] * z[2 * i + 1];
        }
        c
    }
}

impl<const N: usize, const P: usize> CdlmSpec<N, P> {
    pub fn validate(&self) -> Result<()> {
        if !(self.obs_noise_var > 0.0) {
            return Err(SmcError::Config("observation noise variance must be positive".into()));
        }
        let ok = if self.complex { P == 2 && N % 2 == 0 } else { P == 1 };
        if !ok {
            return Err(SmcError::Config(format!("inconsistent dimensions N={N}, P={P} for complex={}", self.complex)));
        }
        Ok(())
    }

    /// `H` with `y = H z + v` once the symbol is fixed.
    pub fn observation_matrix(&self, symbol: Complex<f64>) -> SMatrix<f64, P, N> {
        let mut m = SMatrix::<f64, P, N>::zeros();
        if self.complex {
            for i in 0..N / 2 {
                let h = self.loading[2 * i];
                m[(0, 2 * i)] = symbol.re * h;
                m[(0, 2 * i + 1)] = -symbol.im * h;
                m[(1, 2 * i)] = symbol.im * h;
                m[(1, 2 * i + 1)] = symbol.re * h;
            }
        } else {
            for i in 0..N {
                m[(0, i)] = symbol.re * self.loading[i];
            }
        }
        m
    }

    pub fn obs_cov(&self) -> SMatrix<f64, P, P> {
        let per = if self.complex { 0.5 * self.obs_noise_var } else { self.obs_noise_var };
        SMatrix::identity() * per
    }

    /// Stationary belief of `z`, solving `Σ = F Σ F' + Q` by doubling.
    pub fn stationary_belief(&self) -> Result<GaussianBelief<N>> {
        let mut a = self.transition;
        let mut sigma = self.process_cov;
        for _ in 0..200 {
            let next = sigma + a * sigma * a.transpose();
            a = a * a;
            let change = (next - sigma).abs().max();
            sigma = next;
            if change <= 1e-13 * sigma.abs().max().max(1.0) && a.abs().max() < 1e-12 {
                return Ok(GaussianBelief::new(SVector::zeros(), sigma));
            }
            if !sigma.iter().all(|v| v.is_finite()) {
                break;
            }
        }
        Err(SmcError::Numerical("state transition is not stable".into()))
    }
}

/// Predict then update with symbol `x_t`; returns the posterior and `log p(y_t | x_t, past)`.
pub fn kf_step<const N: usize, const P: usize>(
    belief: &GaussianBelief<N>,
    spec: &CdlmSpec<N, P>,
    symbol: Complex<f64>,
    y: &SVector<f64, P>,
) -> Result<(GaussianBelief<N>, f64)> {
    belief
        .predict(&spec.transition, &spec.process_cov)
        .update(&spec.observation_matrix(symbol), &spec.obs_cov(), y)
}
