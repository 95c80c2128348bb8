//! Cross-entropy method over the flat policy parameters λ.

use std::sync::Arc;

use dac_core::{derive_seed, DacError, DynamicPolicy, PolicySpaceSpec, Result, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trace::{streams, IncumbentTrace, Measurement, SolverContext, Tracker};

/// Standard deviations below this in every coordinate stop the search.
pub const SIGMA_COLLAPSE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CemParams {
    pub population: usize,
    pub elite_frac: f64,
    pub sigma_init: f64,
    /// Weight of the elite fit in each update; 1 replaces the distribution outright.
    pub smoothing: f64,
    /// (instance, seed) pairs per candidate evaluation, drawn round-robin.
    pub subsample: usize,
    /// Starting mean; zeros when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_mean: Option<Vec<f64>>,
}

impl Default for CemParams {
    fn default() -> Self {
        Self {
            population: 16,
            elite_frac: 0.25,
            sigma_init: 1.0,
            smoothing: 1.0,
            subsample: 1,
            initial_mean: None,
        }
    }
}

impl CemParams {
    pub fn elites(&self) -> usize {
        ((self.elite_frac * self.population as f64).ceil() as usize).clamp(1, self.population)
    }

    fn validate(&self) -> Result<()> {
        if self.population < 2
            || !(self.elite_frac > 0.0 && self.elite_frac <= 1.0)
            || !(self.sigma_init > 0.0)
            || !(self.smoothing > 0.0 && self.smoothing <= 1.0)
            || self.subsample == 0
        {
            return Err(DacError::Argument("invalid cross-entropy hyperparameters".into()));
        }
        Ok(())
    }
}

/// Diagonal Gaussian search distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Gaussian {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.sigma)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }

    /// Refits mean and per-coordinate deviation to `elites`.
    pub fn refit(&mut self, elites: &[&Vec<f64>]) {
        self.refit_smoothed(elites, 1.0);
    }

    /// Moves mean and deviation a fraction `alpha` of the way to the elite fit.
    pub fn refit_smoothed(&mut self, elites: &[&Vec<f64>], alpha: f64) {
        let k = elites.len() as f64;
        for d in 0..self.mean.len() {
            let m = elites.iter().map(|e| e[d]).sum::<f64>() / k;
            let var = elites.iter().map(|e| (e[d] - m).powi(2)).sum::<f64>() / k;
            self.mean[d] = alpha * m + (1.0 - alpha) * self.mean[d];
            self.sigma[d] = alpha * var.sqrt() + (1.0 - alpha) * self.sigma[d];
        }
    }

    pub fn collapsed(&self) -> bool {
        self.sigma.iter().all(|s| *s < SIGMA_COLLAPSE)
    }
}

/// Candidates of one generation sorted by cost, ties by sampling index.
pub fn rank(costs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order
}

pub fn cem_policy_search(
    scenario: &dyn Scenario,
    spec: &Arc<PolicySpaceSpec>,
    params: &CemParams,
    ctx: SolverContext<'_>,
) -> Result<(DynamicPolicy, IncumbentTrace)> {
    params.validate()?;
    let dim = spec.num_params();
    let mean = match &params.initial_mean {
        Some(m) if m.len() == dim => m.clone(),
        Some(m) => {
            return Err(DacError::Argument(format!(
                "initial mean has {} entries, policy needs {dim}",
                m.len()
            )))
        }
        None => vec![0.0; dim],
    };
    let mut dist = Gaussian {
        mean,
        sigma: vec![params.sigma_init; dim],
    };
    let mut tracker = Tracker::new(scenario, ctx, "cem")?;
    let seed = tracker.master_seed();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[streams::SOLVER_RNG]));
    let n_inst = scenario.num_instances() as u64;
    let per_eval = scenario.episodes_per_evaluation();
    let wave = (params.population * params.subsample) as u64 * per_eval;
    let mut cursor = 0u64;
    let mut generation = 0u64;
    let mean_policy = |d: &Gaussian| DynamicPolicy::new(Arc::clone(spec), d.mean.clone());
    while tracker.fits(wave) {
        let candidates: Vec<Vec<f64>> = (0..params.population).map(|_| dist.sample(&mut rng)).collect();
        // every candidate sees the same (instance, seed) pairs this generation
        let pairs: Vec<(usize, u64)> = (0..params.subsample as u64)
            .map(|j| {
                let k = cursor + j;
                ((k % n_inst) as usize, derive_seed(seed, &[streams::TRAINING, k / n_inst, k % n_inst]))
            })
            .collect();
        cursor += params.subsample as u64;
        let jobs: Vec<(usize, usize)> = (0..params.population)
            .flat_map(|c| (0..pairs.len()).map(move |p| (c, p)))
            .collect();
        let policies = candidates
            .iter()
            .map(|l| DynamicPolicy::new(Arc::clone(spec), l.clone()))
            .collect::<Result<Vec<_>>>()?;
        let costs = jobs
            .par_iter()
            .map(|&(c, p)| scenario.evaluate(&policies[c], pairs[p].0, pairs[p].1).map(|e| e.cost))
            .collect::<Result<Vec<f64>>>()?;
        let measurements: Vec<Measurement> = jobs
            .iter()
            .zip(&costs)
            .map(|(&(c, p), &cost)| Measurement {
                policy_id: tracker.policy_id(format!("g{generation}c{c}")),
                instance: pairs[p].0,
                seed: pairs[p].1,
                cost,
            })
            .collect();
        tracker.commit(wave, &measurements)?;
        let means: Vec<f64> = costs
            .chunks(pairs.len())
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let order = rank(&means);
        let elites: Vec<&Vec<f64>> = order[..params.elites()].iter().map(|&i| &candidates[i]).collect();
        dist.refit_smoothed(&elites, params.smoothing);
        generation += 1;
        let g = generation;
        let id = tracker.policy_id(format!("g{g}-mean"));
        tracker.maybe_checkpoint(|| id, || mean_policy(&dist))?;
        if dist.collapsed() {
            tracker.stop_early(format!("search distribution collapsed after {generation} generations"));
            break;
        }
    }
    if tracker.used() == 0 {
        return Err(DacError::Argument(format!(
            "budget {} cannot pay for one generation of {wave} episodes",
            tracker.remaining()
        )));
    }
    let final_policy = mean_policy(&dist)?;
    let id = tracker.policy_id(format!("g{generation}-mean"));
    tracker.finish(id, &final_policy)
}
