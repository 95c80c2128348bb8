//! Gradient descent on λ with forward-mode derivatives of the episode cost.
//!
//! Each iteration averages per-instance gradients over the training set; one
//! forward pass per λ coordinate is charged as one episode.

use dac_core::{derive_seed, DacError, DynamicPolicy, Result, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trace::{streams, IncumbentTrace, Measurement, SolverContext, Tracker};

pub const MAX_HALVINGS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientParams {
    pub step_size: f64,
    /// Coordinates of λ to optimize; all when absent. Others stay frozen.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<usize>>,
}

impl Default for GradientParams {
    fn default() -> Self {
        Self {
            step_size: 1e-2,
            coordinates: None,
        }
    }
}

/// Mean cost and mean gradient over all training instances.
pub fn batch_gradient(
    scenario: &dyn Scenario,
    policy: &DynamicPolicy,
    coords: &[usize],
    seeds: &[u64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let per_instance = (0..scenario.num_instances())
        .into_par_iter()
        .map(|i| scenario.cost_gradient(policy, i, seeds[i], coords))
        .collect::<Result<Vec<_>>>()?;
    let n = per_instance.len() as f64;
    let costs: Vec<f64> = per_instance.iter().map(|(c, _)| *c).collect();
    let mut grad = vec![0.0; coords.len()];
    for (_, g) in &per_instance {
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((costs.iter().sum::<f64>() / n, grad, costs))
}

pub fn gradient_policy_search(
    scenario: &dyn Scenario,
    initial: &DynamicPolicy,
    params: &GradientParams,
    ctx: SolverContext<'_>,
) -> Result<(DynamicPolicy, IncumbentTrace)> {
    if !scenario.is_differentiable() || !initial.spec.is_differentiable() {
        return Err(DacError::Unsupported(format!(
            "scenario `{}` with this policy space is not differentiable",
            scenario.name()
        )));
    }
    if !(params.step_size > 0.0) {
        return Err(DacError::Argument("step size must be positive".into()));
    }
    let coords: Vec<usize> = match &params.coordinates {
        Some(c) => c.clone(),
        None => (0..initial.lambda.len()).collect(),
    };
    if coords.iter().any(|&c| c >= initial.lambda.len()) {
        return Err(DacError::Argument("gradient coordinate out of range".into()));
    }
    let n_inst = scenario.num_instances();
    let per_iter = (n_inst * coords.len().max(1)) as u64;
    let mut tracker = Tracker::new(scenario, ctx, "gradient")?;
    let seed = tracker.master_seed();
    let mut policy = initial.clone();
    let mut step = params.step_size;
    let mut halvings = 0;
    let mut last_good: Option<(DynamicPolicy, Vec<f64>)> = None;
    let mut iteration = 0u64;
    while tracker.fits(per_iter) {
        let seeds: Vec<u64> = (0..n_inst as u64)
            .map(|i| derive_seed(seed, &[streams::TRAINING, iteration, i]))
            .collect();
        let (_, grad, costs) = batch_gradient(scenario, &policy, &coords, &seeds)?;
        let id = tracker.policy_id(format!("i{iteration}"));
        let measurements: Vec<Measurement> = costs
            .iter()
            .enumerate()
            .map(|(i, &cost)| Measurement {
                policy_id: id.clone(),
                instance: i,
                seed: seeds[i],
                cost,
            })
            .collect();
        tracker.commit(per_iter, &measurements)?;
        iteration += 1;
        let finite = grad.iter().all(|g| g.is_finite()) && costs.iter().all(|c| c.is_finite());
        if finite {
            last_good = Some((policy.clone(), grad));
        } else {
            // reject: retry from the last finite point with half the step
            halvings += 1;
            step *= 0.5;
        }
        match &last_good {
            Some((base, g)) => {
                let mut next = base.clone();
                for (&c, gc) in coords.iter().zip(g) {
                    next.lambda[c] -= step * gc;
                }
                policy = next;
            }
            None => {
                tracker.stop_early("initial policy has a non-finite cost or gradient");
                break;
            }
        }
        let it = iteration;
        let id = tracker.policy_id(format!("i{it}"));
        tracker.maybe_checkpoint(|| id, || Ok(policy.clone()))?;
        if halvings > MAX_HALVINGS {
            tracker.stop_early(format!("step size halved {MAX_HALVINGS} times on non-finite gradients"));
            break;
        }
    }
    if tracker.used() == 0 {
        return Err(DacError::Argument(format!(
            "budget {} cannot pay for one gradient iteration of {per_iter} episodes",
            tracker.remaining()
        )));
    }
    let id = tracker.policy_id(format!("i{iteration}"));
    tracker.finish(id, &policy)
}
