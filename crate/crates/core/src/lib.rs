//! Sequential Monte Carlo with lookahead strategies.
//!
//! The crate is organised bottom-up:
//! - [`model`]: the state-space model trait, trial distributions and persistent paths;
//! - [`particle`]: weighted populations, ESS, resampling and the plain SIS step;
//! - [`lookahead`]: delayed weighting, exact lookahead, block sampling, pilot
//!   schemes, multilevel sampling, priority scores and adaptive horizons;
//! - [`kalman`]: Gaussian beliefs and conditional dynamic linear models for mixture filtering;
//! - [`oracle`]: exact references used to validate the samplers;
//! - [`models`]: concrete models used by the experiments;
//! - [`bench`]: experiment drivers and the configuration/CSV layer behind the `smc` binary.

pub mod bench;
pub mod error;
pub mod kalman;
pub mod lookahead;
pub mod model;
pub mod models;
pub mod numeric;
pub mod oracle;
pub mod particle;
pub mod rng;

pub use error::{Result, SmcError};
