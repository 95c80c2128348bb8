//! Seeded random micro problems, one generator per reduction source.
//!
//! Costs come from a small range so that ties, and therefore optimal sets with
//! several members, are common.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::problem::{
    all_vectors, AcProblem, CmdpProblem, Cost, DacCost, DacPolicy, DacProblem, MdpProblem, MicroProblem, PiacProblem,
    PolicySpace, SchedulingProblem, SelectionProblem,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub max_instances: usize,
    pub max_configs: usize,
    pub max_states: usize,
    pub max_horizon: usize,
    /// Costs are drawn from `0..=max_cost`, rewards from `-max_cost..=max_cost`.
    pub max_cost: Cost,
    pub max_policies: usize,
    pub max_contexts: usize,
    pub max_algorithm_states: usize,
    pub max_budget: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            max_instances: 4,
            max_configs: 4,
            max_states: 6,
            max_horizon: 5,
            max_cost: 5,
            max_policies: 6,
            max_contexts: 3,
            max_algorithm_states: 3,
            max_budget: 4,
        }
    }
}

fn size(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi.max(lo))
}

fn costs(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig, rows: usize, cols: usize) -> Vec<Vec<Cost>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..=cfg.max_cost)).collect()).collect()
}

pub fn ac(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (c, n) = (size(rng, 1, cfg.max_configs), size(rng, 1, cfg.max_instances));
    MicroProblem::Ac(AcProblem { cost: costs(rng, cfg, c, n) })
}

pub fn piac(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (c, n) = (size(rng, 1, cfg.max_configs), size(rng, 1, cfg.max_instances));
    let cost = costs(rng, cfg, c, n);
    let mut all = all_vectors(c, n);
    let mappings = if all.len() <= 64 && rng.gen_bool(0.5) {
        all
    } else {
        all.shuffle(rng);
        let k = size(rng, 1, 8.min(all.len()));
        all.truncate(k);
        all
    };
    MicroProblem::Piac(PiacProblem { cost, mappings })
}

pub fn selection(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (a, n) = (size(rng, 1, cfg.max_configs), size(rng, 1, cfg.max_instances));
    MicroProblem::Selection(SelectionProblem { cost: costs(rng, cfg, a, n) })
}

fn dac_cost(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig, n: usize, states: usize, configs: usize, horizon: usize, decomposed: bool) -> DacCost {
    if decomposed {
        DacCost::StepSum {
            init: (0..n).map(|_| rng.gen_range(0..=cfg.max_cost)).collect(),
            step: (0..n).map(|_| costs(rng, cfg, states, configs)).collect(),
        }
    } else {
        DacCost::MinOverCounts {
            table: (0..configs).map(|_| costs(rng, cfg, n, horizon + 1)).collect(),
        }
    }
}

fn random_policy(rng: &mut ChaCha8Rng, n: usize, states: usize, configs: usize) -> DacPolicy {
    (0..n).map(|_| (0..states).map(|_| rng.gen_range(0..configs)).collect()).collect()
}

/// DAC with arbitrary (possibly cyclic) dynamics.
fn free_dac(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng, n: usize, states: usize, configs: usize) -> DacProblem {
    let horizon = size(rng, 1, cfg.max_horizon);
    let decomposed = rng.gen_bool(0.5);
    DacProblem {
        states,
        configs,
        horizon,
        init: (0..n).map(|_| rng.gen_range(0..states)).collect(),
        next: (0..n)
            .map(|_| (0..states).map(|_| (0..configs).map(|_| rng.gen_range(0..states)).collect()).collect())
            .collect(),
        finals: (0..n).map(|_| (0..states).map(|_| rng.gen_bool(0.25)).collect()).collect(),
        cost: dac_cost(rng, cfg, n, states, configs, horizon, decomposed),
        policies: PolicySpace::Unconstrained,
    }
}

/// DAC with an explicit Λ; duplicate entries are allowed.
pub fn parametric_dac(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (n, s, c) = (size(rng, 1, cfg.max_instances), size(rng, 1, cfg.max_states), size(rng, 1, cfg.max_configs));
    let mut p = free_dac(cfg, rng, n, s, c);
    let count = size(rng, 1, cfg.max_policies);
    let mut list: Vec<DacPolicy> = (0..count).map(|_| random_policy(rng, n, s, c)).collect();
    if count > 1 && rng.gen_bool(0.2) {
        list[count - 1] = list[0].clone();
    }
    p.policies = PolicySpace::Parametric(list);
    MicroProblem::Dac(p)
}

/// Acyclic DAC with decomposed cost that always finishes within the horizon.
pub fn episodic_dac(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (n, c) = (size(rng, 1, cfg.max_instances), size(rng, 1, cfg.max_configs));
    let states = size(rng, 2, cfg.max_states.min(cfg.max_horizon + 1));
    let last = states - 1;
    let finals: Vec<Vec<bool>> = (0..n).map(|_| (0..states).map(|s| s == last || (s > 0 && rng.gen_bool(0.2))).collect()).collect();
    let next = (0..n)
        .map(|_| {
            (0..states)
                .map(|s| (0..c).map(|_| if s == last { s } else { rng.gen_range(s + 1..states) }).collect())
                .collect()
        })
        .collect();
    MicroProblem::Dac(DacProblem {
        states,
        configs: c,
        horizon: last,
        init: vec![0; n],
        next,
        finals,
        cost: dac_cost(rng, cfg, n, states, c, last, true),
        policies: PolicySpace::Unconstrained,
    })
}

/// DAC whose policy space is small enough to list: parametric, or a tiny
/// unconstrained table space.
pub fn enumerable_dac(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    if rng.gen_bool(0.7) {
        return parametric_dac(cfg, rng);
    }
    let (n, s, c) = (size(rng, 1, 2), size(rng, 1, 3), size(rng, 1, 2));
    MicroProblem::Dac(free_dac(cfg, rng, n, s, c))
}

fn random_mdp(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng, states: usize, actions: usize) -> MdpProblem {
    // states are topologically ordered; the last one is always final
    let last = states - 1;
    let finals: Vec<bool> = (0..states).map(|s| s == last || (s > 0 && rng.gen_bool(0.2))).collect();
    let next = (0..states)
        .map(|s| (0..actions).map(|_| if finals[s] { s } else { rng.gen_range(s + 1..states) }).collect())
        .collect();
    let reward = (0..states)
        .map(|s| {
            (0..actions)
                .map(|_| if finals[s] { 0 } else { rng.gen_range(-cfg.max_cost..=cfg.max_cost) })
                .collect()
        })
        .collect();
    MdpProblem {
        actions,
        next,
        reward,
        finals,
    }
}

pub fn mdp(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (s, a) = (size(rng, 2, cfg.max_states), size(rng, 1, cfg.max_configs));
    MicroProblem::Mdp(random_mdp(cfg, rng, s, a))
}

pub fn cmdp(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let (s, a, k) = (size(rng, 2, cfg.max_states), size(rng, 1, cfg.max_configs), size(rng, 1, cfg.max_contexts));
    MicroProblem::Cmdp(CmdpProblem {
        contexts: (0..k).map(|_| random_mdp(cfg, rng, s, a)).collect(),
    })
}

pub fn scheduling(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
    let k = size(rng, 1, cfg.max_configs.min(3));
    let n = size(rng, 1, cfg.max_instances.min(3));
    let budget = size(rng, 1, cfg.max_budget);
    let s = size(rng, 1, cfg.max_algorithm_states);
    MicroProblem::Scheduling(SchedulingProblem {
        budget,
        algorithm_states: s,
        init: (0..k).map(|_| (0..n).map(|_| rng.gen_range(0..s)).collect()).collect(),
        timestep: (0..k).map(|_| (0..n).map(|_| (0..s).map(|_| rng.gen_range(0..s)).collect()).collect()).collect(),
        cost: (0..k).map(|_| costs(rng, cfg, n, budget + 1)).collect(),
    })
}
