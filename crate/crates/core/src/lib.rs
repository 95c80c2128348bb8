//! Core model for dynamic algorithm configuration (DAC).
//!
//! A DAC scenario combines a step-wise reconfigurable target algorithm, an
//! instance distribution, a space of dynamic configuration policies and a cost
//! metric. Policies see only observations of the algorithm state and choose a
//! configuration at every reconfiguration point; [`execute`] runs that loop.

pub mod algorithm;
pub mod dual;
pub mod error;
pub mod execute;
pub mod instance;
pub mod mdp;
pub mod observation;
pub mod policy;
pub mod scenario;
pub mod seed;
pub mod space;

pub use algorithm::{AlgorithmState, TargetAlgorithm};
pub use dual::{Dual, Scalar};
pub use error::{DacError, Result};
pub use execute::{
    check_policy, execute, execute_static, execute_with, Controller, Termination, Trajectory,
    TrajectoryStep,
};
pub use instance::{Instance, InstanceSet, Sampling};
pub use mdp::{Enumerable, TabularMdp};
pub use observation::{Observation, ObservationSchema};
pub use policy::{Binning, DynamicPolicy, InputFeature, PolicyKind, PolicySpaceSpec, Transform};
pub use scenario::{
    batch_run_seed, evaluate_policy, mean_cost, BatchCost, BatchOutcome, CostMode, DacScenario,
    Evaluation, PolicyEvaluation, Scenario,
};
pub use seed::{derive_seed, episode_seed, mix64};
pub use space::{Configuration, ConfigurationSpace, Domain, ParameterSpec, Value};
