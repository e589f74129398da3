use std::sync::Arc;

use super::{Model, PriorProposal, Proposal};

/// A model bundled with its initial, main and pilot trial distributions.
///
/// All three default to the prior `g_t`.
pub struct ModelSpec<M: Model> {
    pub model: M,
    pub initial: Arc<dyn Proposal<M>>,
    pub trial: Arc<dyn Proposal<M>>,
    pub pilot: Arc<dyn Proposal<M>>,
}

impl<M: Model + 'static> ModelSpec<M> {
    pub fn new(model: M) -> Self {
        ModelSpec {
            model,
            initial: Arc::new(PriorProposal),
            trial: Arc::new(PriorProposal),
            pilot: Arc::new(PriorProposal),
        }
    }

    pub fn with_trial(mut self, trial: impl Proposal<M> + 'static) -> Self {
        self.trial = Arc::new(trial);
        self
    }

    pub fn with_pilot(mut self, pilot: impl Proposal<M> + 'static) -> Self {
        self.pilot = Arc::new(pilot);
        self
    }

    pub fn with_initial(mut self, initial: impl Proposal<M> + 'static) -> Self {
        self.initial = Arc::new(initial);
        self
    }
}

impl<M: Model> ModelSpec<M> {
    /// The trial used to draw `x_t`: `initial` at `t = 0`, `trial` afterwards.
    pub fn trial_at(&self, t: usize) -> &dyn Proposal<M> {
        if t == 0 {
            self.initial.as_ref()
        } else {
            self.trial.as_ref()
        }
    }

    /// The pilot trial at time `t`, with `initial` at `t = 0`.
    pub fn pilot_at(&self, t: usize) -> &dyn Proposal<M> {
        if t == 0 {
            self.initial.as_ref()
        } else {
            self.pilot.as_ref()
        }
    }
}
