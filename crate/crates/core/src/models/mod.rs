//! Concrete models.

pub mod hmm;
pub mod nonlinear;
pub mod qam;
pub mod tracking;

pub use hmm::DiscreteHmm;
pub use nonlinear::GrowthModel;
pub use qam::{ArmaChannel, Constellation, QamFrame, QamModel};
pub use tracking::{ClutterModel, TrackingModel};
