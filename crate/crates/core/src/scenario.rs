//! DAC scenarios ⟨A, Θ, D, Π, c⟩ and policy evaluation.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::TargetAlgorithm;
use crate::dual::Dual;
use crate::error::{DacError, Result};
use crate::execute::{check_policy, execute_with, Controller, Trajectory};
use crate::instance::{Instance, InstanceSet};
use crate::observation::ObservationSchema;
use crate::policy::{DynamicPolicy, PolicySpaceSpec};
use crate::seed::derive_seed;
use crate::space::ConfigurationSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOutcome {
    pub cost: f64,
    /// Episodes run by the functional itself (e.g. a reference baseline).
    pub extra_episodes: u64,
}

/// Cost defined on a batch of completed runs instead of a per-step sum.
pub trait BatchCost<A: TargetAlgorithm>: Send + Sync {
    /// Number of policy runs per evaluation.
    fn batch_size(&self) -> usize;

    /// Episodes the functional runs itself per evaluation, reported in
    /// [`BatchOutcome::extra_episodes`].
    fn extra_episodes(&self) -> u64 {
        0
    }

    fn evaluate(
        &self,
        algorithm: &A,
        instance: &Instance<A::Payload>,
        cutoff: usize,
        batch_seed: u64,
        runs: &[Trajectory],
    ) -> Result<BatchOutcome>;
}

pub enum CostMode<A: TargetAlgorithm> {
    DecomposedSum,
    TrajectoryFunctional(Arc<dyn BatchCost<A>>),
}

impl<A: TargetAlgorithm> Clone for CostMode<A> {
    fn clone(&self) -> Self {
        match self {
            CostMode::DecomposedSum => CostMode::DecomposedSum,
            CostMode::TrajectoryFunctional(f) => CostMode::TrajectoryFunctional(Arc::clone(f)),
        }
    }
}

impl<A: TargetAlgorithm> fmt::Debug for CostMode<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostMode::DecomposedSum => write!(f, "DecomposedSum"),
            CostMode::TrajectoryFunctional(b) => {
                write!(f, "TrajectoryFunctional(batch={})", b.batch_size())
            }
        }
    }
}

/// Seed of the `run`-th policy run inside a batch evaluation.
pub fn batch_run_seed(batch_seed: u64, run: usize) -> u64 {
    derive_seed(batch_seed, &[0, run as u64])
}

pub struct DacScenario<A: TargetAlgorithm> {
    pub name: String,
    pub algorithm: A,
    pub instances: InstanceSet<A::Payload>,
    pub policy_space: Arc<PolicySpaceSpec>,
    pub cutoff: usize,
    pub cost_mode: CostMode<A>,
}

impl<A: TargetAlgorithm> DacScenario<A> {
    pub fn new(
        name: impl Into<String>,
        algorithm: A,
        instances: InstanceSet<A::Payload>,
        policy_space: PolicySpaceSpec,
        cutoff: usize,
        cost_mode: CostMode<A>,
    ) -> Result<Self> {
        if cutoff == 0 {
            return Err(DacError::Argument("scenario cutoff must be at least 1".into()));
        }
        if let CostMode::TrajectoryFunctional(f) = &cost_mode {
            if f.batch_size() == 0 {
                return Err(DacError::Argument("batch cost needs batch size >= 1".into()));
            }
        }
        for inst in instances.instances() {
            algorithm.validate(inst)?;
        }
        policy_space.validate()?;
        let scenario = Self {
            name: name.into(),
            algorithm,
            instances,
            policy_space: Arc::new(policy_space),
            cutoff,
            cost_mode,
        };
        check_policy(&scenario.algorithm, &DynamicPolicy::zeros(Arc::clone(&scenario.policy_space)))?;
        Ok(scenario)
    }

    fn instance(&self, index: usize) -> Result<&Instance<A::Payload>> {
        self.instances
            .get(index)
            .ok_or_else(|| DacError::Argument(format!("instance index {index} out of range")))
    }

    pub fn execute(&self, policy: &DynamicPolicy, instance: usize, seed: u64) -> Result<Trajectory> {
        check_policy(&self.algorithm, policy)?;
        execute_with(&self.algorithm, &mut &*policy, self.instance(instance)?, seed, self.cutoff)
    }
}

/// Cost of one policy on one (instance, seed) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    /// Target-algorithm episodes consumed.
    pub episodes: u64,
}

/// Object-safe view of a scenario, used by solvers, oracles and the harness.
pub trait Scenario: Send + Sync {
    fn name(&self) -> &str;
    fn config_space(&self) -> &ConfigurationSpace;
    fn observation_schema(&self) -> &Arc<ObservationSchema>;
    fn policy_space(&self) -> &Arc<PolicySpaceSpec>;
    fn cutoff(&self) -> usize;
    fn instance_ids(&self) -> Vec<String>;
    fn num_instances(&self) -> usize;
    fn is_decomposed(&self) -> bool;

    /// Target-algorithm episodes consumed by one call to [`Scenario::evaluate`].
    fn episodes_per_evaluation(&self) -> u64;

    /// Training instance for the `draw`-th sample under the set's sampling scheme.
    fn sample_instance(&self, draw: u64, random: u64) -> usize;

    /// c(π, i) for one evaluation seed. In functional mode the seed keys a whole batch.
    fn evaluate(&self, policy: &DynamicPolicy, instance: usize, seed: u64) -> Result<Evaluation>;

    /// One raw episode driven by an arbitrary controller.
    fn run_episode(
        &self,
        instance: usize,
        seed: u64,
        controller: &mut dyn Controller,
    ) -> Result<Trajectory>;

    fn is_differentiable(&self) -> bool {
        false
    }

    /// Cost and its partial derivatives with respect to `lambda[coords[j]]`,
    /// one forward-mode pass per coordinate.
    fn cost_gradient(
        &self,
        _policy: &DynamicPolicy,
        _instance: usize,
        _seed: u64,
        _coords: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        Err(DacError::Unsupported(format!("scenario `{}` is not differentiable", self.name())))
    }
}

impl<A: TargetAlgorithm> Scenario for DacScenario<A> {
    fn name(&self) -> &str {
        &self.name
    }

    fn config_space(&self) -> &ConfigurationSpace {
        self.algorithm.config_space()
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        self.algorithm.observation_schema()
    }

    fn policy_space(&self) -> &Arc<PolicySpaceSpec> {
        &self.policy_space
    }

    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn instance_ids(&self) -> Vec<String> {
        self.instances.instances().iter().map(|i| i.id.clone()).collect()
    }

    fn num_instances(&self) -> usize {
        self.instances.len()
    }

    fn is_decomposed(&self) -> bool {
        matches!(self.cost_mode, CostMode::DecomposedSum)
    }

    fn episodes_per_evaluation(&self) -> u64 {
        match &self.cost_mode {
            CostMode::DecomposedSum => 1,
            CostMode::TrajectoryFunctional(f) => f.batch_size() as u64 + f.extra_episodes(),
        }
    }

    fn sample_instance(&self, draw: u64, random: u64) -> usize {
        self.instances.sample_index(draw, random)
    }

    fn evaluate(&self, policy: &DynamicPolicy, instance: usize, seed: u64) -> Result<Evaluation> {
        check_policy(&self.algorithm, policy)?;
        let inst = self.instance(instance)?;
        match &self.cost_mode {
            CostMode::DecomposedSum => {
                let traj = execute_with(&self.algorithm, &mut &*policy, inst, seed, self.cutoff)?;
                Ok(Evaluation {
                    cost: traj.total_cost,
                    episodes: 1,
                })
            }
            CostMode::TrajectoryFunctional(functional) => {
                let runs = (0..functional.batch_size())
                    .map(|j| {
                        execute_with(
                            &self.algorithm,
                            &mut &*policy,
                            inst,
                            batch_run_seed(seed, j),
                            self.cutoff,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let outcome = functional.evaluate(&self.algorithm, inst, self.cutoff, seed, &runs)?;
                if outcome.extra_episodes != functional.extra_episodes() {
                    return Err(DacError::Execution {
                        step: 0,
                        message: "batch cost ran a different number of episodes than declared".into(),
                    });
                }
                Ok(Evaluation {
                    cost: outcome.cost,
                    episodes: runs.len() as u64 + outcome.extra_episodes,
                })
            }
        }
    }

    fn run_episode(
        &self,
        instance: usize,
        seed: u64,
        controller: &mut dyn Controller,
    ) -> Result<Trajectory> {
        execute_with(&self.algorithm, controller, self.instance(instance)?, seed, self.cutoff)
    }

    fn is_differentiable(&self) -> bool {
        self.algorithm.is_differentiable() && self.is_decomposed()
    }

    fn cost_gradient(
        &self,
        policy: &DynamicPolicy,
        instance: usize,
        seed: u64,
        coords: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        if !self.is_differentiable() {
            return Err(DacError::Unsupported(format!("scenario `{}` is not differentiable", self.name)));
        }
        check_policy(&self.algorithm, policy)?;
        let inst = self.instance(instance)?;
        let n = policy.lambda.len();
        if let Some(&bad) = coords.iter().find(|&&j| j >= n) {
            return Err(DacError::Argument(format!("gradient coordinate {bad} out of range")));
        }
        let seeded = |direction: Option<usize>| {
            let lambda: Vec<Dual> = policy
                .lambda
                .iter()
                .enumerate()
                .map(|(k, &l)| Dual::new(l, if Some(k) == direction { 1.0 } else { 0.0 }))
                .collect();
            self.algorithm
                .differentiable_cost(inst, policy, &lambda, seed, self.cutoff)
        };
        let mut value = None;
        let mut grad = Vec::with_capacity(coords.len());
        for &j in coords {
            let d = seeded(Some(j))?;
            value.get_or_insert(d.re);
            grad.push(d.eps);
        }
        let value = match value {
            Some(v) => v,
            None => seeded(None)?.re,
        };
        Ok((value, grad))
    }
}

/// One measurement of a policy: instance, evaluation seed and cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub instance: usize,
    pub instance_id: String,
    pub seed: u64,
    pub cost: f64,
    pub episodes: u64,
}

/// Evaluates `policy` on every (instance, seed) pair, instance-major order.
///
/// Pairs run in parallel; results are returned in logical order.
pub fn evaluate_policy(
    scenario: &dyn Scenario,
    policy: &DynamicPolicy,
    instances: &[usize],
    seeds: &[u64],
) -> Result<Vec<PolicyEvaluation>> {
    if instances.is_empty() || seeds.is_empty() {
        return Err(DacError::Argument("evaluation needs at least one instance and one seed".into()));
    }
    let ids = scenario.instance_ids();
    if let Some(&bad) = instances.iter().find(|&&i| i >= ids.len()) {
        return Err(DacError::Argument(format!("instance index {bad} not in scenario")));
    }
    let pairs: Vec<(usize, u64)> = instances
        .iter()
        .flat_map(|&i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, s)| {
            scenario.evaluate(policy, i, s).map(|e| PolicyEvaluation {
                instance: i,
                instance_id: ids[i].clone(),
                seed: s,
                cost: e.cost,
                episodes: e.episodes,
            })
        })
        .collect()
}

/// Mean cost of a set of evaluations (NaN for an empty set).
pub fn mean_cost(evals: &[PolicyEvaluation]) -> f64 {
    evals.iter().map(|e| e.cost).sum::<f64>() / evals.len() as f64
}
