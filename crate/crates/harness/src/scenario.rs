//! Scenario references in experiment configs, resolved to runnable scenarios.

use std::sync::Arc;

use dac_benchmarks::generators::{
    cma_instances, leading_ones_instances, luby_instances, sigmoid_instances, toygd_polynomials, toygd_quadratics,
};
use dac_benchmarks::{CmaEnv, CmaFunction, LeadingOnesEnv, LubyEnv, SigmoidEnv, ToyGdEnv, WinRateVsCsa};
use dac_core::{
    CostMode, DacError, DacScenario, Enumerable, Instance, InstanceSet, InputFeature, PolicySpaceSpec, Result, Scenario,
    TargetAlgorithm,
};
use dac_oracles::{value_iteration_optimal, ValueIterationResult};
use serde::{Deserialize, Serialize};

/// Benchmark ids with one-line descriptions, in listing order.
pub const BENCHMARK_IDS: [(&str, &str); 5] = [
    ("sigmoid", "k-dimensional sigmoid tracking with categorical actions"),
    ("luby", "guess the exponent of the next Luby restart term"),
    ("leading_ones", "RLS on LeadingOnes, choosing how many bits to flip"),
    ("toygd", "gradient descent on 1-d polynomials, choosing the learning rate"),
    ("cma_step_size", "CMA-ES step size, scored by win rate against CSA"),
];

/// Policy representation for a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyChoice {
    Constant,
    /// The benchmark's own state discretization; finite-state benchmarks only.
    Tabular,
    LogLinear {
        #[serde(default)]
        features: Vec<InputFeature>,
    },
    Mlp {
        hidden: Vec<usize>,
        #[serde(default)]
        features: Vec<InputFeature>,
    },
}

fn default_cma_function() -> CmaFunction {
    CmaFunction::Sphere
}

/// A benchmark plus generator arguments. Instances are regenerated from
/// `generator_seed`, so a spec fully determines its scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "benchmark", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Sigmoid {
        instances: usize,
        action_counts: Vec<usize>,
        horizon: usize,
        #[serde(default)]
        generator_seed: u64,
        #[serde(default)]
        policy: Option<PolicyChoice>,
    },
    Luby {
        instances: usize,
        horizon: usize,
        #[serde(default)]
        max_shift: u64,
        #[serde(default)]
        generator_seed: u64,
        #[serde(default)]
        policy: Option<PolicyChoice>,
    },
    LeadingOnes {
        instances: usize,
        n: usize,
        #[serde(default)]
        k_choices: Option<Vec<usize>>,
        #[serde(default)]
        generator_seed: u64,
        #[serde(default)]
        policy: Option<PolicyChoice>,
    },
    #[serde(rename = "toygd")]
    ToyGd {
        instances: usize,
        horizon: usize,
        /// Even polynomial degree; quadratics when absent.
        #[serde(default)]
        degree: Option<usize>,
        #[serde(default)]
        generator_seed: u64,
        #[serde(default)]
        policy: Option<PolicyChoice>,
    },
    CmaStepSize {
        instances: usize,
        dim: usize,
        #[serde(default = "default_cma_function")]
        function: CmaFunction,
        #[serde(default)]
        generations: Option<usize>,
        #[serde(default)]
        population: Option<usize>,
        #[serde(default)]
        batch: Option<usize>,
        #[serde(default)]
        generator_seed: u64,
        #[serde(default)]
        policy: Option<PolicyChoice>,
    },
}

fn policy_spec<A: TargetAlgorithm>(
    algorithm: &A,
    choice: &PolicyChoice,
    tabular: impl FnOnce() -> Result<PolicySpaceSpec>,
) -> Result<PolicySpaceSpec> {
    let space = algorithm.config_space().clone();
    let names = algorithm.observation_schema().names().to_vec();
    match choice {
        PolicyChoice::Constant => Ok(PolicySpaceSpec::constant(space, names)),
        PolicyChoice::Tabular => tabular(),
        PolicyChoice::LogLinear { features } => PolicySpaceSpec::log_linear(space, names, features.clone()),
        PolicyChoice::Mlp { hidden, features } => PolicySpaceSpec::mlp(space, names, features.clone(), hidden.clone()),
    }
}

fn not_tabular(benchmark: &str) -> Result<PolicySpaceSpec> {
    Err(DacError::Config(format!("scenario.policy: `{benchmark}` has no finite state space for a tabular policy")))
}

fn first<P>(instances: &[Instance<P>]) -> Result<&P> {
    instances
        .first()
        .map(|i| &i.payload)
        .ok_or_else(|| DacError::Config("scenario.instances must be at least 1".into()))
}

fn enumerable<A: Enumerable + 'static>(
    name: &str,
    algorithm: A,
    instances: Vec<Instance<A::Payload>>,
    horizon: usize,
    choice: &PolicyChoice,
) -> Result<Arc<dyn Scenario>> {
    let spec = policy_spec(&algorithm, choice, || algorithm.tabular_spec(&instances))?;
    let set = InstanceSet::uniform(instances)?;
    Ok(Arc::new(DacScenario::new(name, algorithm, set, spec, horizon, CostMode::DecomposedSum)?))
}

impl ScenarioSpec {
    pub fn benchmark(&self) -> &'static str {
        match self {
            ScenarioSpec::Sigmoid { .. } => "sigmoid",
            ScenarioSpec::Luby { .. } => "luby",
            ScenarioSpec::LeadingOnes { .. } => "leading_ones",
            ScenarioSpec::ToyGd { .. } => "toygd",
            ScenarioSpec::CmaStepSize { .. } => "cma_step_size",
        }
    }

    /// The configured policy, or the benchmark's default: tabular where the
    /// state space is finite, constant otherwise.
    pub fn policy(&self) -> PolicyChoice {
        let (choice, finite) = match self {
            ScenarioSpec::Sigmoid { policy, .. } | ScenarioSpec::Luby { policy, .. } | ScenarioSpec::LeadingOnes { policy, .. } => {
                (policy, true)
            }
            ScenarioSpec::ToyGd { policy, .. } | ScenarioSpec::CmaStepSize { policy, .. } => (policy, false),
        };
        choice.clone().unwrap_or(if finite { PolicyChoice::Tabular } else { PolicyChoice::Constant })
    }

    pub fn build(&self) -> Result<Arc<dyn Scenario>> {
        let choice = self.policy();
        match self {
            ScenarioSpec::Sigmoid { instances, action_counts, horizon, generator_seed, .. } => {
                let insts = sigmoid_instances(*generator_seed, *instances, action_counts, *horizon);
                let env = SigmoidEnv::for_instance(first(&insts)?)?;
                enumerable("sigmoid", env, insts, *horizon, &choice)
            }
            ScenarioSpec::Luby { instances, horizon, max_shift, generator_seed, .. } => {
                let insts = luby_instances(*generator_seed, *instances, *horizon, *max_shift);
                let env = LubyEnv::for_instance(first(&insts)?);
                enumerable("luby", env, insts, *horizon, &choice)
            }
            ScenarioSpec::LeadingOnes { instances, n, k_choices, generator_seed, .. } => {
                let insts = leading_ones_instances(*generator_seed, *instances, *n, k_choices.clone());
                let env = LeadingOnesEnv::for_instance(first(&insts)?)?;
                // RLS needs no cutoff of its own; cap far beyond the expected runtime
                let cutoff = 100 * n * n + 1000;
                enumerable("leading_ones", env, insts, cutoff, &choice)
            }
            ScenarioSpec::ToyGd { instances, horizon, degree, generator_seed, .. } => {
                let insts = match degree {
                    None | Some(2) => toygd_quadratics(*generator_seed, *instances, *horizon),
                    Some(d) => toygd_polynomials(*generator_seed, *instances, *d, *horizon)?,
                };
                first(&insts)?;
                let env = ToyGdEnv::new();
                let spec = policy_spec(&env, &choice, || not_tabular("toygd"))?;
                let set = InstanceSet::uniform(insts)?;
                Ok(Arc::new(DacScenario::new("toygd", env, set, spec, *horizon, CostMode::DecomposedSum)?))
            }
            ScenarioSpec::CmaStepSize { instances, dim, function, generations, population, batch, generator_seed, .. } => {
                let mut insts = cma_instances(*generator_seed, *instances, *function, *dim);
                for inst in &mut insts {
                    let p = &mut inst.payload;
                    p.generations = generations.unwrap_or(p.generations);
                    p.population = population.unwrap_or(p.population);
                    p.batch = batch.unwrap_or(p.batch);
                }
                let p = first(&insts)?.clone();
                let env = CmaEnv::for_instance(&p)?;
                let spec = policy_spec(&env, &choice, || not_tabular("cma_step_size"))?;
                let cost = CostMode::TrajectoryFunctional(Arc::new(WinRateVsCsa::new(&env, p.batch)));
                let set = InstanceSet::uniform(insts)?;
                Ok(Arc::new(DacScenario::new("cma_step_size", env, set, spec, p.generations, cost)?))
            }
        }
    }

    /// Exact optimum by value iteration on benchmarks with a finite tabulation;
    /// `None` for the others.
    pub fn value_iteration(&self) -> Result<Option<ValueIterationResult>> {
        match self {
            ScenarioSpec::Sigmoid { instances, action_counts, horizon, generator_seed, .. } => {
                let insts = sigmoid_instances(*generator_seed, *instances, action_counts, *horizon);
                let env = SigmoidEnv::for_instance(first(&insts)?)?;
                value_iteration_optimal(&env, &insts).map(Some)
            }
            ScenarioSpec::Luby { instances, horizon, max_shift, generator_seed, .. } => {
                let insts = luby_instances(*generator_seed, *instances, *horizon, *max_shift);
                let env = LubyEnv::for_instance(first(&insts)?);
                value_iteration_optimal(&env, &insts).map(Some)
            }
            ScenarioSpec::LeadingOnes { instances, n, k_choices, generator_seed, .. } => {
                let insts = leading_ones_instances(*generator_seed, *instances, *n, k_choices.clone());
                let env = LeadingOnesEnv::for_instance(first(&insts)?)?;
                value_iteration_optimal(&env, &insts).map(Some)
            }
            ScenarioSpec::ToyGd { .. } | ScenarioSpec::CmaStepSize { .. } => Ok(None),
        }
    }
}
