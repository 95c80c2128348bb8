//! Serializable solver selection, as read from experiment config files.

use std::sync::Arc;

use dac_core::{
    Configuration, ConfigurationSpace, DacError, Domain, DynamicPolicy, Result, Scenario, Value,
};
use serde::{Deserialize, Serialize};

use crate::cem::{cem_policy_search, CemParams};
use crate::gradient::{gradient_policy_search, GradientParams};
use crate::qlearning::{tabular_q_learning, QLearningParams};
use crate::racing::{constant_candidates, racing_configurator, uniform_candidates, RacingParams};
use crate::trace::{IncumbentTrace, SolverContext};

/// Registered solver ids, in listing order.
pub const SOLVER_IDS: [(&str, &str); 4] = [
    ("qlearning", "tabular Q-learning over the scenario's discretized observations"),
    ("cem", "cross-entropy method over policy parameters"),
    ("racing", "successive-halving racing over sampled parameters or a static grid"),
    ("gradient", "gradient descent with forward-mode derivatives (differentiable scenarios)"),
];

/// How racing obtains its candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Sampler {
    /// Constant policies over [`configuration_grid`] (classical AC).
    Grid { points_per_real: usize },
    /// λ uniform in `[low, high]` for the scenario's policy space.
    Uniform { count: usize, low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "id")]
pub enum SolverSpec {
    Qlearning {
        #[serde(default, flatten)]
        params: QLearningParams,
    },
    Cem {
        #[serde(default, flatten)]
        params: CemParams,
    },
    Racing {
        #[serde(default, flatten)]
        params: RacingParams,
        sampler: Sampler,
    },
    Gradient {
        #[serde(default, flatten)]
        params: GradientParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_lambda: Option<Vec<f64>>,
    },
}

impl SolverSpec {
    pub fn id(&self) -> &'static str {
        match self {
            SolverSpec::Qlearning { .. } => "qlearning",
            SolverSpec::Cem { .. } => "cem",
            SolverSpec::Racing { .. } => "racing",
            SolverSpec::Gradient { .. } => "gradient",
        }
    }

    /// Runs the solver against the scenario's own policy space.
    pub fn run(&self, scenario: &dyn Scenario, ctx: SolverContext<'_>) -> Result<(DynamicPolicy, IncumbentTrace)> {
        let spec = scenario.policy_space();
        match self {
            SolverSpec::Qlearning { params } => {
                tabular_q_learning(scenario, spec, params, ctx).map(|(p, t, _)| (p, t))
            }
            SolverSpec::Cem { params } => cem_policy_search(scenario, spec, params, ctx),
            SolverSpec::Racing { params, sampler } => {
                let candidates = match sampler {
                    Sampler::Grid { points_per_real } => {
                        let grid = configuration_grid(scenario.config_space(), *points_per_real)?;
                        constant_candidates(scenario, &grid)?
                    }
                    Sampler::Uniform { count, low, high } => {
                        let seed = dac_core::derive_seed(ctx.master_seed, &[crate::trace::streams::SOLVER_RNG]);
                        uniform_candidates(spec, *count, *low, *high, seed)?
                    }
                };
                racing_configurator(scenario, &candidates, params, ctx)
            }
            SolverSpec::Gradient {
                params,
                initial_lambda,
            } => {
                let initial = match initial_lambda {
                    Some(l) => DynamicPolicy::new(Arc::clone(spec), l.clone())?,
                    None => DynamicPolicy::zeros(Arc::clone(spec)),
                };
                gradient_policy_search(scenario, &initial, params, ctx)
            }
        }
    }
}

/// Cross product of per-parameter grids: every categorical value, every
/// integer (up to 10 000 values), and `points_per_real` points per real
/// parameter (log-spaced on log scale, else evenly spaced, endpoints included).
/// The last parameter varies fastest.
pub fn configuration_grid(space: &ConfigurationSpace, points_per_real: usize) -> Result<Vec<Configuration>> {
    let axes = space
        .params()
        .iter()
        .map(|p| match &p.domain {
            Domain::Categorical { values } => Ok((0..values.len()).map(Value::Categorical).collect()),
            Domain::Integer { lower, upper } => {
                if upper - lower >= 10_000 {
                    Err(DacError::Argument(format!("integer parameter `{}` is too wide for a grid", p.name)))
                } else {
                    Ok((*lower..=*upper).map(Value::Integer).collect())
                }
            }
            Domain::Real { lower, upper, log } => {
                if points_per_real == 0 {
                    return Err(DacError::Argument("real parameters need points_per_real >= 1".into()));
                }
                Ok(real_axis(*lower, *upper, *log, points_per_real).into_iter().map(Value::Real).collect())
            }
        })
        .collect::<Result<Vec<Vec<Value>>>>()?;
    let total: usize = axes.iter().map(|a| a.len()).product();
    if total > 1_000_000 {
        return Err(DacError::Argument(format!("grid of {total} configurations is too large")));
    }
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut values = vec![Value::Integer(0); axes.len()];
        for (d, axis) in axes.iter().enumerate().rev() {
            values[d] = axis[code % axis.len()].clone();
            code /= axis.len();
        }
        out.push(Configuration::new(values));
    }
    Ok(out)
}

fn real_axis(lower: f64, upper: f64, log: bool, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![if log { (lower * upper).sqrt() } else { (lower + upper) / 2.0 }];
    }
    (0..points)
        .map(|k| {
            if k == 0 {
                return lower;
            }
            if k == points - 1 {
                return upper;
            }
            let f = k as f64 / (points - 1) as f64;
            let v = if log {
                (lower.ln() + f * (upper.ln() - lower.ln())).exp()
            } else {
                lower + f * (upper - lower)
            };
            v.clamp(lower, upper)
        })
        .collect()
}
