use std::fmt;
use std::sync::Arc;

use crate::dual::Dual;
use crate::error::{DacError, Result};
use crate::policy::DynamicPolicy;
use crate::instance::Instance;
use crate::observation::{Observation, ObservationSchema};
use crate::space::{Configuration, ConfigurationSpace};

/// A step-wise reconfigurable target algorithm `⟨init, step, is_final⟩` with a
/// step-wise decomposable cost `⟨init_cost, step_cost⟩`.
///
/// `step` must be deterministic given the state, instance and configuration;
/// any randomness is carried inside `State` as a seeded stream.
pub trait TargetAlgorithm: Send + Sync {
    type Payload: Clone + fmt::Debug + Send + Sync;
    type State: Clone + Send;

    fn name(&self) -> &str;

    fn config_space(&self) -> &ConfigurationSpace;

    fn observation_schema(&self) -> &Arc<ObservationSchema>;

    /// Rejects payloads this benchmark cannot run.
    fn validate(&self, _instance: &Instance<Self::Payload>) -> Result<()> {
        Ok(())
    }

    /// Initial state for an episode; `seed` keys the episode's random stream.
    fn init(&self, instance: &Instance<Self::Payload>, seed: u64) -> Self::State;

    fn init_cost(&self, _instance: &Instance<Self::Payload>) -> f64 {
        0.0
    }

    /// Advances one step under `config`, returning the successor and the step cost.
    fn step(
        &self,
        state: &Self::State,
        instance: &Instance<Self::Payload>,
        config: &Configuration,
    ) -> (Self::State, f64);

    fn is_final(&self, state: &Self::State, instance: &Instance<Self::Payload>) -> bool;

    fn observe(&self, state: &Self::State, instance: &Instance<Self::Payload>) -> Result<Observation>;

    /// Whether [`Self::differentiable_cost`] is implemented.
    fn is_differentiable(&self) -> bool {
        false
    }

    /// Total episode cost with `lambda` carried as dual numbers, so the tangent of
    /// the result is the directional derivative of c(π_λ, i) along the seeded direction.
    fn differentiable_cost(
        &self,
        _instance: &Instance<Self::Payload>,
        _policy: &DynamicPolicy,
        _lambda: &[Dual],
        _run_seed: u64,
        _cutoff: usize,
    ) -> Result<Dual> {
        Err(DacError::Unsupported(format!(
            "`{}` has no differentiable rollout",
            self.name()
        )))
    }
}

/// Algorithm state plus the number of steps taken to reach it.
#[derive(Debug, Clone)]
pub struct AlgorithmState<S> {
    pub payload: S,
    pub step_index: usize,
}

impl<S> AlgorithmState<S> {
    pub fn new(payload: S) -> Self {
        Self {
            payload,
            step_index: 0,
        }
    }
}
