//! Value iteration on the contextual MDP of an enumerable scenario.
//!
//! Each instance is a context with its own tabulated MDP (reward = −step cost,
//! finals absorbing with zero reward); the union over contexts is the flat MDP
//! with states `S × C`. Everything is phrased in costs, so "optimal" means minimal.

use std::sync::Arc;

use dac_core::{
    Configuration, DacError, DynamicPolicy, Enumerable, Instance, Result, TabularMdp,
};
use rayon::prelude::*;

use crate::static_bounds::CostMatrix;

/// Largest total number of tabulated states accepted.
pub const MAX_STATES: usize = 1_000_000;
/// Sweeps stop once no state value moves by more than this.
pub const TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    pub values: Vec<f64>,
    /// Greedy action per state (lowest index among near-ties); 0 on finals.
    pub actions: Vec<usize>,
    /// `init_cost + Σ initial(s)·V(s)`.
    pub expected_cost: f64,
    pub sweeps: usize,
}

/// Value of action `a` in `s` with the self-loop solved out:
/// `(c + Σ_{s'≠s} p V(s')) / (1 − p_ss)`. Infinite if `a` never leaves `s` at positive cost.
fn solved_q(mdp: &TabularMdp, values: &[f64], s: usize, a: usize) -> f64 {
    let mut stay = 0.0;
    let mut rest = mdp.costs[s][a];
    for &(t, p) in &mdp.transitions[s][a] {
        if t == s {
            stay += p;
        } else if p > 0.0 {
            rest += p * values[t];
        }
    }
    let leave = 1.0 - stay;
    if leave <= 1e-15 {
        if mdp.costs[s][a] == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        rest / leave
    }
}

fn changed(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        (old - new).abs()
    }
}

/// Gauss–Seidel sweeps in decreasing state order, optionally with a fixed policy.
/// Tabulations that number successors above their predecessors (time- or
/// level-indexed states) converge in a single sweep.
fn sweep_to_fixpoint(mdp: &TabularMdp, fixed: Option<&[usize]>) -> Result<(Vec<f64>, usize)> {
    let n = mdp.num_states();
    let mut values = vec![0.0; n];
    for sweep in 1..=MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in (0..n).rev() {
            if mdp.terminal[s] {
                continue;
            }
            let v = match fixed {
                Some(policy) => solved_q(mdp, &values, s, policy[s]),
                None => (0..mdp.num_actions())
                    .map(|a| solved_q(mdp, &values, s, a))
                    .fold(f64::INFINITY, f64::min),
            };
            delta = delta.max(changed(values[s], v));
            values[s] = v;
        }
        if delta < TOLERANCE {
            return Ok((values, sweep));
        }
    }
    Err(DacError::Execution {
        step: MAX_SWEEPS,
        message: "value iteration did not converge".into(),
    })
}

fn expected(mdp: &TabularMdp, values: &[f64]) -> f64 {
    mdp.initial
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .fold(mdp.init_cost, |acc, &(s, p)| acc + p * values[s])
}

pub fn solve_mdp(mdp: &TabularMdp) -> Result<MdpSolution> {
    mdp.validate()?;
    let (values, sweeps) = sweep_to_fixpoint(mdp, None)?;
    let actions: Vec<usize> = (0..mdp.num_states())
        .map(|s| {
            if mdp.terminal[s] {
                return 0;
            }
            let q: Vec<f64> = (0..mdp.num_actions()).map(|a| solved_q(mdp, &values, s, a)).collect();
            let best = q.iter().cloned().fold(f64::INFINITY, f64::min);
            let slack = 1e-12 * (1.0 + best.abs());
            q.iter().position(|&v| v <= best + slack).unwrap_or(0)
        })
        .collect();
    // exact cost of the extracted policy, not the approximate optimal values
    let (policy_values, _) = sweep_to_fixpoint(mdp, Some(&actions))?;
    Ok(MdpSolution {
        expected_cost: expected(mdp, &policy_values),
        values: policy_values,
        actions,
        sweeps,
    })
}

/// Expected cost of a stationary policy given as one action per state.
pub fn policy_cost(mdp: &TabularMdp, actions: &[usize]) -> Result<f64> {
    mdp.validate()?;
    if actions.len() != mdp.num_states() || actions.iter().any(|&a| a >= mdp.num_actions()) {
        return Err(DacError::Argument("policy must give a valid action for every state".into()));
    }
    let (values, _) = sweep_to_fixpoint(mdp, Some(actions))?;
    Ok(expected(mdp, &values))
}

#[derive(Debug, Clone)]
pub struct ValueIterationResult {
    /// Tabular policy over the benchmark's own cell layout.
    pub policy: DynamicPolicy,
    /// Mean over instances of the per-instance optimal expected cost.
    pub optimal_cost: f64,
    pub per_instance: Vec<f64>,
    pub solutions: Vec<MdpSolution>,
    pub num_states: usize,
    /// Cells where two (instance, state) pairs want different actions; the
    /// tabular policy then keeps the first and may fall short of `optimal_cost`.
    pub conflicts: usize,
}

fn tabulate_all<A: Enumerable>(algorithm: &A, instances: &[Instance<A::Payload>]) -> Result<Vec<TabularMdp>> {
    if instances.is_empty() {
        return Err(DacError::Argument("value iteration needs at least one instance".into()));
    }
    let mdps = instances
        .par_iter()
        .map(|i| algorithm.tabulate(i))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = mdps.iter().map(|m| m.num_states()).sum();
    if total > MAX_STATES {
        return Err(DacError::Unsupported(format!(
            "{total} tabulated states exceed the limit of {MAX_STATES}"
        )));
    }
    Ok(mdps)
}

pub fn value_iteration_optimal<A: Enumerable>(
    algorithm: &A,
    instances: &[Instance<A::Payload>],
) -> Result<ValueIterationResult> {
    let mdps = tabulate_all(algorithm, instances)?;
    let solutions = mdps.par_iter().map(solve_mdp).collect::<Result<Vec<_>>>()?;
    let spec = Arc::new(algorithm.tabular_spec(instances)?);
    let mut policy = DynamicPolicy::zeros(Arc::clone(&spec));
    let mut owner: Vec<Option<Configuration>> = vec![None; spec.cell_count()];
    let mut conflicts = 0;
    for ((inst, mdp), sol) in instances.iter().zip(&mdps).zip(&solutions) {
        for s in 0..mdp.num_states() {
            if mdp.terminal[s] {
                continue;
            }
            let cell = algorithm.cell_of_state(&spec, inst, s);
            let action = &mdp.actions[sol.actions[s]];
            match &owner[cell] {
                None => {
                    policy.set_cell(cell, action)?;
                    owner[cell] = Some(action.clone());
                }
                Some(existing) if existing != action => conflicts += 1,
                Some(_) => {}
            }
        }
    }
    let per_instance: Vec<f64> = solutions.iter().map(|s| s.expected_cost).collect();
    Ok(ValueIterationResult {
        policy,
        optimal_cost: per_instance.iter().sum::<f64>() / per_instance.len() as f64,
        per_instance,
        num_states: mdps.iter().map(|m| m.num_states()).sum(),
        solutions,
        conflicts,
    })
}

/// Exact expected cost of every constant configuration in `grid` on every
/// instance, computed on the tabulated MDPs (no sampling).
pub fn exact_static_costs<A: Enumerable>(
    algorithm: &A,
    instances: &[Instance<A::Payload>],
    grid: &[Configuration],
) -> Result<CostMatrix> {
    let mdps = tabulate_all(algorithm, instances)?;
    let entries = grid
        .iter()
        .map(|theta| {
            mdps.iter()
                .map(|mdp| {
                    let a = mdp.actions.iter().position(|c| c == theta).ok_or_else(|| {
                        DacError::Argument(format!("grid point {theta} is not an action of the tabulated MDP"))
                    })?;
                    policy_cost(mdp, &vec![a; mdp.num_states()])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CostMatrix::new(
        grid.iter().map(|c| c.to_string()).collect(),
        instances.iter().map(|i| i.id.clone()).collect(),
        1,
        entries,
    )
}
