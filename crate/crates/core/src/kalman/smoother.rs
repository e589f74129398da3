//! Fixed-lag smoothing over a particle's belief history.

use nalgebra::SMatrix;

use crate::error::{Result, SmcError};

use super::belief::{dynamic, GaussianBelief};

/// Smoothed belief of the state `lag` steps back.
///
/// `history` holds the filtered beliefs of one indicator path in time order, most
/// recent last; only the last `lag + 1` entries are read. The backward pass is the
/// Rauch-Tung-Striebel recursion, so the result is exact for the linear-Gaussian
/// model conditional on the indicators.
pub fn fixed_lag_smooth<const N: usize>(
    history: &[GaussianBelief<N>],
    transition: &SMatrix<f64, N, N>,
    process_cov: &SMatrix<f64, N, N>,
    lag: usize,
) -> Result<GaussianBelief<N>> {
    if lag >= history.len() {
        return Err(SmcError::LagExceedsHistory { lag, depth: history.len() });
    }
    let n = history.len();
    let mut smoothed = history[n - 1].clone();
    for filtered in history[n - 1 - lag..n - 1].iter().rev() {
        let predicted = filtered.predict(transition, process_cov);
        let cross = filtered.cov * transition.transpose();
        let gain = match predicted.cov.cholesky() {
            Some(c) => c.solve(&cross.transpose()).transpose(),
            None => {
                let pinv = dynamic(&predicted.cov)
                    .pseudo_inverse(1e-12)
                    .map_err(|e| SmcError::Numerical(e.to_string()))?;
                cross * SMatrix::<f64, N, N>::from_column_slice(pinv.as_slice())
            }
        };
        let mean = filtered.mean + gain * (smoothed.mean - predicted.mean);
        let cov = filtered.cov + gain * (smoothed.cov - predicted.cov) * gain.transpose();
        smoothed = GaussianBelief::new(mean, cov);
    }
    Ok(smoothed)
}

/// Mean of [`fixed_lag_smooth`].
pub fn fixed_lag_mean<const N: usize>(
    history: &[GaussianBelief<N>],
    transition: &SMatrix<f64, N, N>,
    process_cov: &SMatrix<f64, N, N>,
    lag: usize,
) -> Result<nalgebra::SVector<f64, N>> {
    Ok(fixed_lag_smooth(history, transition, process_cov, lag)?.mean)
}
