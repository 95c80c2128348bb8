//! DAC solvers. Two families share one bookkeeping layer:
//!
//! * DAC by reinforcement learning — [`qlearning`] (tabular, reward = −step cost);
//! * DAC by optimization over λ — [`cem`] (noisy black-box), [`racing`]
//!   (static configuration of λ, or of θ with constant policies) and
//!   [`gradient`] (forward-mode derivatives).
//!
//! Every solver returns its incumbent and an [`IncumbentTrace`]; incumbents
//! are re-evaluated on a fixed seed block that is not charged to the budget.

pub mod cem;
pub mod gradient;
pub mod qlearning;
pub mod racing;
pub mod spec;
pub mod trace;

pub use cem::{cem_policy_search, CemParams};
pub use gradient::{gradient_policy_search, GradientParams};
pub use qlearning::{tabular_q_learning, QLearningParams, QTable};
pub use racing::{racing_configurator, RacingParams};
pub use spec::{Sampler, SolverSpec, SOLVER_IDS};
pub use trace::{
    default_eval_seeds, CheckpointDir, EvaluationEvent, EvaluationKind, IncumbentTrace,
    SolverBudget, SolverContext, SolverObserver, TracePoint,
};
