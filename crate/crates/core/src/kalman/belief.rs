//! Gaussian beliefs over a fixed-dimension linear state.

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};

use crate::error::{Result, SmcError};

/// Eigenvalues below this are treated as numerical noise and clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief<const N: usize> {
    pub mean: SVector<f64, N>,
    pub cov: SMatrix<f64, N, N>,
}

impl<const N: usize> GaussianBelief<N> {
    pub fn new(mean: SVector<f64, N>, cov: SMatrix<f64, N, N>) -> Self {
        let mut b = GaussianBelief { mean, cov };
        b.stabilize();
        b
    }

    /// A point mass at `mean`.
    pub fn known(mean: SVector<f64, N>) -> Self {
        GaussianBelief {
            mean,
            cov: SMatrix::zeros(),
        }
    }

    /// Symmetrise the covariance and clamp negative eigenvalues when needed.
    pub fn stabilize(&mut self) {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
        let shifted = self.cov + SMatrix::<f64, N, N>::identity() * PSD_TOLERANCE;
        if shifted.cholesky().is_none() {
            let eig = SymmetricEigen::new(dynamic(&self.cov));
            let clamped = eig.eigenvalues.map(|v| v.max(0.0));
            let fixed = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
            self.cov = SMatrix::from_fn(|i, j| 0.5 * (fixed[(i, j)] + fixed[(j, i)]));
        }
    }

    /// True when the covariance is symmetric and PSD within [`PSD_TOLERANCE`].
    pub fn is_valid(&self) -> bool {
        let asym = (self.cov - self.cov.transpose()).abs().max();
        asym <= PSD_TOLERANCE && SymmetricEigen::new(dynamic(&self.cov)).eigenvalues.min() >= -PSD_TOLERANCE
    }

    /// `z' = F z + w`, `w ~ N(0, Q)`.
    pub fn predict(&self, transition: &SMatrix<f64, N, N>, process_cov: &SMatrix<f64, N, N>) -> Self {
        let mut b = GaussianBelief {
            mean: transition * self.mean,
            cov: transition * self.cov * transition.transpose() + process_cov,
        };
        b.stabilize();
        b
    }

    /// Condition on `y = H z + v`, `v ~ N(0, R)`; returns the posterior and `log p(y)`.
    ///
    /// The covariance update uses the Joseph form.
    pub fn update<const P: usize>(
        &self,
        obs_matrix: &SMatrix<f64, P, N>,
        obs_cov: &SMatrix<f64, P, P>,
        y: &SVector<f64, P>,
    ) -> Result<(Self, f64)> {
        let innovation = y - obs_matrix * self.mean;
        let s = obs_matrix * self.cov * obs_matrix.transpose() + obs_cov;
        let s = (s + s.transpose()) * 0.5;
        let chol = s
            .cholesky()
            .ok_or_else(|| SmcError::Numerical("innovation covariance is not positive definite".into()))?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let solved = chol.solve(&innovation);
        let log_lik = -0.5 * (P as f64 * LN_2PI + log_det + innovation.dot(&solved));
        // K = P H' S^{-1}
        let gain = (chol.solve(&(obs_matrix * self.cov))).transpose();
        let mean = self.mean + gain * innovation;
        let ikh = SMatrix::<f64, N, N>::identity() - gain * obs_matrix;
        let cov = ikh * self.cov * ikh.transpose() + gain * obs_cov * gain.transpose();
        Ok((GaussianBelief::new(mean, cov), log_lik))
    }

    /// `log p(y)` under the belief without forming the posterior.
    pub fn log_predictive<const P: usize>(
        &self,
        obs_matrix: &SMatrix<f64, P, N>,
        obs_cov: &SMatrix<f64, P, P>,
        y: &SVector<f64, P>,
    ) -> Result<f64> {
        let innovation = y - obs_matrix * self.mean;
        let s = obs_matrix * self.cov * obs_matrix.transpose() + obs_cov;
        let chol = ((s + s.transpose()) * 0.5)
            .cholesky()
            .ok_or_else(|| SmcError::Numerical("innovation covariance is not positive definite".into()))?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(-0.5 * (P as f64 * LN_2PI + log_det + innovation.dot(&chol.solve(&innovation))))
    }
}

// Decompositions are only implemented for dimensions known to typenum, so the rare
// fallback paths go through heap matrices.
pub(crate) fn dynamic<const N: usize>(m: &SMatrix<f64, N, N>) -> DMatrix<f64> {
    DMatrix::from_column_slice(N, N, m.as_slice())
}
