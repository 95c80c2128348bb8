//! Runs a micro DAC through the general framework, so solvers built on
//! `dac_core::Scenario` can be pointed at problems with a known optimum.

use std::sync::Arc;

use dac_core::{
    Binning, Configuration, ConfigurationSpace, CostMode, DacError, DacScenario, DynamicPolicy, Instance, InstanceSet,
    Observation, ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, TargetAlgorithm,
};

use crate::problem::{DacCost, DacPolicy, DacProblem};

/// Target algorithm whose states, transitions and step costs are read off a
/// [`DacProblem`]. The payload is the instance index.
#[derive(Debug, Clone)]
pub struct MicroDac {
    problem: Arc<DacProblem>,
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl MicroDac {
    pub fn new(problem: DacProblem) -> Result<Self> {
        if !matches!(problem.cost, DacCost::StepSum { .. }) {
            return Err(DacError::Unsupported("micro DAC adapter needs a step-wise decomposable cost".into()));
        }
        let space = ConfigurationSpace::new(vec![ParameterSpec::categorical(
            "theta",
            (0..problem.configs).map(|t| t.to_string()),
        )])?;
        Ok(Self {
            problem: Arc::new(problem),
            space,
            schema: ObservationSchema::new(["instance", "state"]),
        })
    }

    pub fn problem(&self) -> &DacProblem {
        &self.problem
    }

    /// Tabular policy space with one cell per (instance, state).
    pub fn tabular_spec(&self) -> Result<PolicySpaceSpec> {
        PolicySpaceSpec::tabular(
            self.space.clone(),
            self.schema.names().to_vec(),
            vec![
                Binning::integers(0, self.problem.instances()),
                Binning::integers(1, self.problem.states),
            ],
        )
    }

    /// The table `π[i][s]` a framework policy implements.
    pub fn table_of(&self, policy: &DynamicPolicy) -> DacPolicy {
        (0..self.problem.instances())
            .map(|i| {
                (0..self.problem.states)
                    .map(|s| policy.act_values(&[i as f64, s as f64]).values[0].as_index().expect("categorical"))
                    .collect()
            })
            .collect()
    }

    /// Scenario over every instance of the problem, cutoff at its horizon.
    pub fn into_scenario(self) -> Result<DacScenario<MicroDac>> {
        let spec = self.tabular_spec()?;
        let horizon = self.problem.horizon;
        let instances = (0..self.problem.instances())
            .map(|i| Instance::new(format!("i{i}"), i, i as u64))
            .collect();
        DacScenario::new("micro-dac", self, InstanceSet::uniform(instances)?, spec, horizon, CostMode::DecomposedSum)
    }
}

#[derive(Debug, Clone)]
pub struct MicroState {
    state: usize,
}

impl TargetAlgorithm for MicroDac {
    type Payload = usize;
    type State = MicroState;

    fn name(&self) -> &str {
        "micro-dac"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn validate(&self, instance: &Instance<usize>) -> Result<()> {
        if instance.payload >= self.problem.instances() {
            return Err(DacError::Instance {
                id: instance.id.clone(),
                message: format!("problem has {} instances", self.problem.instances()),
            });
        }
        Ok(())
    }

    fn init(&self, instance: &Instance<usize>, _seed: u64) -> MicroState {
        MicroState {
            state: self.problem.init[instance.payload],
        }
    }

    fn init_cost(&self, instance: &Instance<usize>) -> f64 {
        match &self.problem.cost {
            DacCost::StepSum { init, .. } => init[instance.payload] as f64,
            DacCost::MinOverCounts { .. } => 0.0,
        }
    }

    fn step(&self, state: &MicroState, instance: &Instance<usize>, config: &Configuration) -> (MicroState, f64) {
        let (i, s) = (instance.payload, state.state);
        let theta = config.values[0].as_index().expect("categorical theta");
        let cost = match &self.problem.cost {
            DacCost::StepSum { step, .. } => step[i][s][theta] as f64,
            DacCost::MinOverCounts { .. } => 0.0,
        };
        (MicroState { state: self.problem.next[i][s][theta] }, cost)
    }

    fn is_final(&self, state: &MicroState, instance: &Instance<usize>) -> bool {
        self.problem.finals[instance.payload][state.state]
    }

    fn observe(&self, state: &MicroState, instance: &Instance<usize>) -> Result<Observation> {
        Observation::new(vec![instance.payload as f64, state.state as f64], &self.schema)
    }
}
