//! Exact references for validating the samplers.
//!
//! These routines avoid the sampling machinery entirely: they enumerate paths,
//! run forward-backward recursions, or sum over every observation sequence.

pub mod enumerate;
pub mod forward_backward;
pub mod information;
pub mod replicate;

pub use enumerate::{conditional_lookahead, enumerate_paths, expectation, posterior_marginal};
pub use forward_backward::{forward_backward, forward_backward_conditional};
pub use information::TabularHmm;
pub use replicate::{paired_difference, replicate, replicate_variance, summarize, variance_difference, ReplicateSummary};
