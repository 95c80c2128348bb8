//! Successive-halving racing over a fixed candidate list.
//!
//! Rung `r` evaluates its `N_r` survivors on the first `n_r = n₀·η^r` entries
//! of a fixed (instance, seed) pair list and keeps the best `⌊N_r/η⌋`
//! (at least one). The last rung has a single survivor.

use std::sync::Arc;

use dac_core::{
    derive_seed, Configuration, DacError, DynamicPolicy, PolicySpaceSpec, Result, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cem::rank;
use crate::trace::{streams, IncumbentTrace, Measurement, SolverContext, Tracker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RacingParams {
    pub eta: usize,
    pub initial_pairs: usize,
}

impl Default for RacingParams {
    fn default() -> Self {
        Self {
            eta: 3,
            initial_pairs: 1,
        }
    }
}

/// `(survivors, pairs)` per rung.
pub fn rung_schedule(candidates: usize, params: &RacingParams) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut n, mut pairs) = (candidates, params.initial_pairs);
    loop {
        out.push((n, pairs));
        if n <= 1 {
            return out;
        }
        n = (n / params.eta).max(1);
        pairs *= params.eta;
    }
}

/// Episodes needed for the whole schedule: `Σ_r N_r · n_r · episodes_per_evaluation`.
pub fn schedule_cost(schedule: &[(usize, usize)], per_eval: u64) -> u64 {
    schedule.iter().map(|&(n, p)| (n * p) as u64 * per_eval).sum()
}

/// Constant policies, one per configuration (classical AC mode).
pub fn constant_candidates(scenario: &dyn Scenario, grid: &[Configuration]) -> Result<Vec<DynamicPolicy>> {
    let names = scenario.observation_schema().names().to_vec();
    grid.iter()
        .map(|theta| DynamicPolicy::constant(scenario.config_space(), names.clone(), theta))
        .collect()
}

/// `count` parameter vectors drawn uniformly from `[low, high]^dim`.
pub fn uniform_candidates(spec: &Arc<PolicySpaceSpec>, count: usize, low: f64, high: f64, seed: u64) -> Result<Vec<DynamicPolicy>> {
    if !(low < high) {
        return Err(DacError::Argument("candidate range needs low < high".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let lambda = (0..spec.num_params()).map(|_| rng.gen_range(low..=high)).collect();
            DynamicPolicy::new(Arc::clone(spec), lambda)
        })
        .collect()
}

pub fn racing_configurator(
    scenario: &dyn Scenario,
    candidates: &[DynamicPolicy],
    params: &RacingParams,
    ctx: SolverContext<'_>,
) -> Result<(DynamicPolicy, IncumbentTrace)> {
    if candidates.is_empty() || params.eta < 2 || params.initial_pairs == 0 {
        return Err(DacError::Argument("racing needs candidates, eta >= 2 and initial_pairs >= 1".into()));
    }
    let per_eval = scenario.episodes_per_evaluation();
    let schedule = rung_schedule(candidates.len(), params);
    let first = schedule_cost(&schedule[..1], per_eval);
    if ctx.budget.max_evaluations < first {
        return Err(DacError::Argument(format!(
            "budget {} is below one full rung; at least {first} episodes are needed ({} candidates x {} pairs)",
            ctx.budget.max_evaluations,
            candidates.len(),
            params.initial_pairs
        )));
    }
    let mut tracker = Tracker::new(scenario, ctx, "racing")?;
    let seed = tracker.master_seed();
    let n_inst = scenario.num_instances() as u64;
    let pair = |k: usize| {
        let k = k as u64;
        ((k % n_inst) as usize, derive_seed(seed, &[streams::RACING_PAIRS, k / n_inst, k % n_inst]))
    };
    let mut alive: Vec<usize> = (0..candidates.len()).collect();
    let mut rungs_done = 0;
    for (r, &(size, pairs)) in schedule.iter().enumerate() {
        debug_assert_eq!(size, alive.len());
        let cost = (size * pairs) as u64 * per_eval;
        if !tracker.fits(cost) {
            tracker.stop_early(format!("budget exhausted before rung {r}"));
            break;
        }
        let jobs: Vec<(usize, usize)> = alive
            .iter()
            .flat_map(|&c| (0..pairs).map(move |k| (c, k)))
            .collect();
        let costs = jobs
            .par_iter()
            .map(|&(c, k)| {
                let (i, s) = pair(k);
                scenario.evaluate(&candidates[c], i, s).map(|e| e.cost)
            })
            .collect::<Result<Vec<f64>>>()?;
        let measurements: Vec<Measurement> = jobs
            .iter()
            .zip(&costs)
            .map(|(&(c, k), &cost)| {
                let (instance, seed) = pair(k);
                Measurement {
                    policy_id: tracker.policy_id(format!("c{c}")),
                    instance,
                    seed,
                    cost,
                }
            })
            .collect();
        tracker.commit(cost, &measurements)?;
        let means: Vec<f64> = costs
            .chunks(pairs)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let order = rank(&means);
        let keep = schedule.get(r + 1).map_or(1, |&(n, _)| n);
        alive = order[..keep].iter().map(|&i| alive[i]).collect();
        rungs_done += 1;
        let leader = alive[0];
        let id = tracker.policy_id(format!("c{leader}"));
        tracker.maybe_checkpoint(|| id, || Ok(candidates[leader].clone()))?;
    }
    debug_assert!(rungs_done > 0);
    let winner = alive[0];
    let id = tracker.policy_id(format!("c{winner}"));
    tracker.finish(id, &candidates[winner])
}
