//! Lookahead strategies.
//!
//! Every strategy advances a [`ParticleSystem`](crate::particle::ParticleSystem)
//! by one time step and leaves weights that are proper for a target using
//! observations beyond the current time:
//! - [`weighting`]: keep paths `Δ` steps ahead and read delayed estimates;
//! - [`exact`]: sample from the exact lookahead marginal of a finite model;
//! - [`block`]: redraw the last `Δ+1` states as a block;
//! - [`pilot`]: score candidates with random pilot paths, optionally smoothed;
//! - [`deterministic`]: score symbols with greedy pilot paths;
//! - [`multilevel`]: walk a nested partition of the support with one pilot per subset;
//! - [`priority`]: resampling scores for a future resampling time;
//! - [`adaptive`]: grow pilot horizons until a stopping rule holds.

pub mod adaptive;
pub mod block;
pub mod deterministic;
pub mod exact;
pub mod multilevel;
pub mod pilot;
pub mod priority;
pub mod smoother;
pub mod strategy;
pub mod weighting;

pub use adaptive::{adaptive_pilot_step, AdaptiveConfig, StopRule};
pub use block::{block_sampling_step, BlockProposal, OptimalBlock, SequentialBlock};
pub use deterministic::deterministic_pilot_step;
pub use exact::{exact_lookahead_marginal, exact_lookahead_step, rao_blackwell_estimate, LookaheadMarginal};
pub use multilevel::{multilevel_step, Partition, PilotKind};
pub use pilot::{pilot_step, pilot_step_continuous, pilot_step_finite, CandidateSet, PilotBundle, PilotConfig};
pub use priority::optimal_priority_scores;
pub use smoother::{BinSpec, PooledSmoother};
pub use weighting::{delayed_estimate, delayed_mode, lookahead_weighting_step};
pub use strategy::{OutcomeOf, StepOutcome, Strategy};
