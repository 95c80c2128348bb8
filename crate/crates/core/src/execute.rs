//! The canonical step-wise execution loop.

use serde::{Deserialize, Serialize};

use crate::algorithm::{AlgorithmState, TargetAlgorithm};
use crate::error::{DacError, Result};
use crate::instance::Instance;
use crate::observation::Observation;
use crate::policy::DynamicPolicy;
use crate::seed::episode_seed;
use crate::space::Configuration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    IsFinal,
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub observation: Observation,
    pub configuration: Configuration,
    pub cost: f64,
}

/// One execution of a dynamically configured algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instance_id: String,
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
    pub init_cost: f64,
    pub total_cost: f64,
    pub terminated_by: Termination,
}

impl Trajectory {
    /// `init_cost + Σ step costs`, accumulated in step order.
    pub fn decomposed_sum(&self) -> f64 {
        self.steps.iter().fold(self.init_cost, |acc, s| acc + s.cost)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_cost(&self) -> Option<f64> {
        self.steps.last().map(|s| s.cost)
    }
}

/// Something that picks configurations at reconfiguration points.
///
/// Learning agents use `feedback` to see the cost of their last choice.
pub trait Controller {
    fn act(&mut self, obs: &Observation) -> Result<Configuration>;

    fn feedback(&mut self, _cost: f64, _next: Option<&Observation>) {}
}

impl Controller for &DynamicPolicy {
    fn act(&mut self, obs: &Observation) -> Result<Configuration> {
        DynamicPolicy::act(self, obs)
    }
}

impl Controller for DynamicPolicy {
    fn act(&mut self, obs: &Observation) -> Result<Configuration> {
        DynamicPolicy::act(self, obs)
    }
}

/// Runs `controller` on `instance` until `is_final` or `cutoff` steps.
///
/// `run_seed` selects the episode's random stream together with the instance seed.
pub fn execute_with<A: TargetAlgorithm, C: Controller + ?Sized>(
    algorithm: &A,
    controller: &mut C,
    instance: &Instance<A::Payload>,
    run_seed: u64,
    cutoff: usize,
) -> Result<Trajectory> {
    if cutoff == 0 {
        return Err(DacError::Argument("cutoff must be at least 1".into()));
    }
    let mut state = AlgorithmState::new(algorithm.init(instance, episode_seed(instance.seed, run_seed)));
    let init_cost = algorithm.init_cost(instance);
    if !init_cost.is_finite() {
        return Err(DacError::Execution {
            step: 0,
            message: format!("non-finite init cost {init_cost}"),
        });
    }
    let mut total_cost = init_cost;
    let mut steps = Vec::new();
    let space = algorithm.config_space();
    let mut pending: Option<Observation> = None;
    let terminated_by = loop {
        if algorithm.is_final(&state.payload, instance) {
            break Termination::IsFinal;
        }
        if state.step_index >= cutoff {
            break Termination::Cutoff;
        }
        let observation = match pending.take() {
            Some(obs) => obs,
            None => algorithm.observe(&state.payload, instance)?,
        };
        let configuration = controller.act(&observation)?;
        space.check(&configuration)?;
        let (next, cost) = algorithm.step(&state.payload, instance, &configuration);
        if !cost.is_finite() {
            return Err(DacError::Execution {
                step: state.step_index,
                message: format!("non-finite step cost {cost}"),
            });
        }
        state = AlgorithmState {
            payload: next,
            step_index: state.step_index + 1,
        };
        total_cost += cost;
        let done = algorithm.is_final(&state.payload, instance) || state.step_index >= cutoff;
        if done {
            controller.feedback(cost, None);
        } else {
            let next_obs = algorithm.observe(&state.payload, instance)?;
            controller.feedback(cost, Some(&next_obs));
            pending = Some(next_obs);
        }
        steps.push(TrajectoryStep {
            observation,
            configuration,
            cost,
        });
    };
    Ok(Trajectory {
        instance_id: instance.id.clone(),
        seed: run_seed,
        steps,
        init_cost,
        total_cost,
        terminated_by,
    })
}

/// Executes `policy`, first checking that its observation and output contracts
/// match the algorithm.
pub fn execute<A: TargetAlgorithm>(
    algorithm: &A,
    policy: &DynamicPolicy,
    instance: &Instance<A::Payload>,
    run_seed: u64,
    cutoff: usize,
) -> Result<Trajectory> {
    check_policy(algorithm, policy)?;
    execute_with(algorithm, &mut &*policy, instance, run_seed, cutoff)
}

pub fn check_policy<A: TargetAlgorithm>(algorithm: &A, policy: &DynamicPolicy) -> Result<()> {
    policy.spec.check_schema(algorithm.observation_schema().names())?;
    if &policy.spec.space != algorithm.config_space() {
        return Err(DacError::Config(format!(
            "policy output space differs from the configuration space of `{}`",
            algorithm.name()
        )));
    }
    Ok(())
}

/// Static evaluation c(θ, i): run with θ fixed at every step, no policy involved.
pub fn execute_static<A: TargetAlgorithm>(
    algorithm: &A,
    config: &Configuration,
    instance: &Instance<A::Payload>,
    run_seed: u64,
    cutoff: usize,
) -> Result<Trajectory> {
    struct Fixed<'a>(&'a Configuration);
    impl Controller for Fixed<'_> {
        fn act(&mut self, _obs: &Observation) -> Result<Configuration> {
            Ok(self.0.clone())
        }
    }
    algorithm.config_space().check(config)?;
    execute_with(algorithm, &mut Fixed(config), instance, run_seed, cutoff)
}
