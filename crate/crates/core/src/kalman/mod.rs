//! Kalman machinery for conditional dynamic linear models.
//!
//! A mixture Kalman filter is a particle system over the discrete indicators whose
//! carries are [`GaussianBelief`]s: the linear state is integrated out exactly and
//! only the indicators are sampled. Any [`Strategy`] can drive it.

pub mod belief;
pub mod cdlm;
pub mod smoother;

pub use belief::GaussianBelief;
pub use cdlm::{kf_step, CdlmSpec, RealCdlm};
pub use smoother::{fixed_lag_mean, fixed_lag_smooth};

use crate::error::Result;
use crate::lookahead::strategy::{OutcomeOf, Strategy};
use crate::model::{Model, ModelSpec, ObservationSeq};
use crate::particle::SystemOf;
use crate::rng::SmcRng;

/// One mixture Kalman filter step: sample the indicator at the current time with
/// `strategy` and fold the observation into each particle's belief.
pub fn mkf_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    strategy: &Strategy,
    rng: &mut SmcRng,
) -> Result<OutcomeOf<M>> {
    strategy.advance(sys, spec, ys, rng)
}
