//! Tabular Q-learning over a discretized observation space (reward = −step cost).

use std::sync::Arc;

use dac_core::{
    derive_seed, Configuration, Controller, DacError, DynamicPolicy, Observation, PolicyKind,
    PolicySpaceSpec, Result, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::trace::{streams, IncumbentTrace, SolverContext, Tracker};

/// Largest Q-table (cells) the solver accepts.
pub const MAX_CELLS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QLearningParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episode budget over which ε decays linearly.
    pub epsilon_decay_fraction: f64,
    /// When set to ω, the step size for a (cell, action) pair on its n-th
    /// update is max(alpha, n^−ω); stochastic costs need the decay to settle.
    pub visit_exponent: Option<f64>,
}

impl Default for QLearningParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 1.0,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            visit_exponent: None,
        }
    }
}

impl QLearningParams {
    pub fn epsilon(&self, episode: u64, total: u64) -> f64 {
        let horizon = (self.epsilon_decay_fraction * total as f64).max(1.0);
        let frac = (episode as f64 / horizon).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.alpha > 0.0 && self.alpha <= 1.0)
            || !unit(self.gamma)
            || !unit(self.epsilon_start)
            || !unit(self.epsilon_end)
            || !(self.epsilon_decay_fraction > 0.0)
            || self.visit_exponent.is_some_and(|w| !(w > 0.5 && w <= 1.0))
        {
            return Err(DacError::Argument("invalid Q-learning hyperparameters".into()));
        }
        Ok(())
    }
}

/// Q-table over (cell, action) holding expected return (negated cost-to-go).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub actions: Vec<Configuration>,
    pub values: Vec<Vec<f64>>,
    /// Update counts per (cell, action).
    pub visits: Vec<Vec<u64>>,
}

impl QTable {
    /// Greedy action; ties go to the lowest index.
    pub fn greedy(&self, cell: usize) -> usize {
        let row = &self.values[cell];
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn greedy_policy(&self, spec: &Arc<PolicySpaceSpec>) -> Result<DynamicPolicy> {
        let mut policy = DynamicPolicy::zeros(Arc::clone(spec));
        for cell in 0..self.values.len() {
            policy.set_cell(cell, &self.actions[self.greedy(cell)])?;
        }
        Ok(policy)
    }
}

struct Agent<'q> {
    spec: &'q PolicySpaceSpec,
    table: &'q mut QTable,
    params: &'q QLearningParams,
    epsilon: f64,
    rng: &'q mut ChaCha8Rng,
    last: Option<(usize, usize)>,
}

impl Controller for Agent<'_> {
    fn act(&mut self, obs: &Observation) -> Result<Configuration> {
        let cell = self.spec.cell_of(&obs.values);
        let action = if self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..self.table.actions.len())
        } else {
            self.table.greedy(cell)
        };
        self.last = Some((cell, action));
        Ok(self.table.actions[action].clone())
    }

    fn feedback(&mut self, cost: f64, next: Option<&Observation>) {
        let (cell, action) = self.last.take().expect("feedback follows act");
        let future = match next {
            Some(obs) => {
                let n = self.spec.cell_of(&obs.values);
                self.table.values[n][self.table.greedy(n)]
            }
            None => 0.0,
        };
        let target = -cost + self.params.gamma * future;
        let visits = &mut self.table.visits[cell][action];
        *visits += 1;
        let alpha = match self.params.visit_exponent {
            Some(w) => self.params.alpha.max((*visits as f64).powf(-w)),
            None => self.params.alpha,
        };
        let q = &mut self.table.values[cell][action];
        *q += alpha * (target - *q);
    }
}

pub fn tabular_q_learning(
    scenario: &dyn Scenario,
    spec: &Arc<PolicySpaceSpec>,
    params: &QLearningParams,
    ctx: SolverContext<'_>,
) -> Result<(DynamicPolicy, IncumbentTrace, QTable)> {
    params.validate()?;
    if !matches!(spec.kind, PolicyKind::Tabular { .. }) {
        return Err(DacError::Argument("Q-learning needs a tabular policy space".into()));
    }
    if !scenario.is_decomposed() {
        return Err(DacError::Unsupported("Q-learning needs per-step costs".into()));
    }
    let cells = spec.cell_count();
    if cells > MAX_CELLS {
        return Err(DacError::Unsupported(format!(
            "discretization has {cells} cells, more than the {MAX_CELLS} a Q-table may hold"
        )));
    }
    let actions = spec
        .space
        .enumerate()
        .ok_or_else(|| DacError::Unsupported("Q-learning needs a finite configuration space".into()))?;
    let mut table = QTable {
        values: vec![vec![0.0; actions.len()]; cells],
        visits: vec![vec![0; actions.len()]; cells],
        actions,
    };
    let mut tracker = Tracker::new(scenario, ctx, "qlearning")?;
    let seed = tracker.master_seed();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[streams::SOLVER_RNG]));
    let total = tracker.remaining();
    let mut episode = 0u64;
    while tracker.fits(1) {
        let draw: u64 = rng.gen();
        let instance = scenario.sample_instance(episode, draw);
        let run_seed = derive_seed(seed, &[streams::TRAINING, episode]);
        let mut agent = Agent {
            spec,
            table: &mut table,
            params,
            epsilon: params.epsilon(episode, total),
            rng: &mut rng,
            last: None,
        };
        scenario.run_episode(instance, run_seed, &mut agent)?;
        tracker.charge(1);
        episode += 1;
        if tracker.checkpoint_due() {
            let policy = table.greedy_policy(spec)?;
            tracker.checkpoint(tracker.policy_id(format!("e{episode}")), &policy)?;
        }
    }
    let final_policy = table.greedy_policy(spec)?;
    let id = tracker.policy_id(format!("e{episode}"));
    let (policy, trace) = tracker.finish(id, &final_policy)?;
    Ok((policy, trace, table))
}
