//! Exact tabulation of benchmarks whose reachable states can be enumerated.

use crate::algorithm::TargetAlgorithm;
use crate::error::{DacError, Result};
use crate::instance::Instance;
use crate::policy::PolicySpaceSpec;
use crate::space::Configuration;

/// Finite MDP for one instance (one context of the contextual MDP), phrased in costs.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub actions: Vec<Configuration>,
    /// `transitions[s][a]`: successor distribution as `(state, probability)`.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    /// `costs[s][a]`: expected step cost.
    pub costs: Vec<Vec<f64>>,
    /// Absorbing states where `is_final` holds.
    pub terminal: Vec<bool>,
    pub initial: Vec<(usize, f64)>,
    pub init_cost: f64,
}

impl TabularMdp {
    pub fn num_states(&self) -> usize {
        self.terminal.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        let m = self.num_actions();
        if self.transitions.len() != n || self.costs.len() != n {
            return Err(DacError::Config("mdp tables do not cover every state".into()));
        }
        for s in 0..n {
            if self.transitions[s].len() != m || self.costs[s].len() != m {
                return Err(DacError::Config(format!("state {s} does not cover every action")));
            }
            for a in 0..m {
                let total: f64 = self.transitions[s][a].iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-9 || self.transitions[s][a].iter().any(|(t, _)| *t >= n) {
                    return Err(DacError::Config(format!("bad transition row at state {s}, action {a}")));
                }
            }
        }
        Ok(())
    }
}

/// Benchmarks whose dynamics can be written down exactly as a [`TabularMdp`].
pub trait Enumerable: TargetAlgorithm {
    fn tabulate(&self, instance: &Instance<Self::Payload>) -> Result<TabularMdp>;

    /// Tabular policy space whose cells tell apart every (instance, state) pair.
    fn tabular_spec(&self, instances: &[Instance<Self::Payload>]) -> Result<PolicySpaceSpec>;

    /// Cell of `spec` that the policy consults in tabulated state `state`.
    fn cell_of_state(
        &self,
        spec: &PolicySpaceSpec,
        instance: &Instance<Self::Payload>,
        state: usize,
    ) -> usize;
}
