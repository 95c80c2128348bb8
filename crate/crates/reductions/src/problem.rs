//! Micro problems: tiny, fully tabulated instances of each problem class.
//!
//! Costs and rewards are integers, so objectives are exact sums and optimal
//! sets are decided without tolerances. Every distribution over instances or
//! contexts is uniform, so "expected cost" is compared as a plain sum.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use dac_core::{DacError, Result};
use serde::{Deserialize, Serialize};

pub type Cost = i64;

/// Upper bound on how many optimal target solutions the verifier interprets.
pub const OPTIMAL_CAP: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Ac,
    Piac,
    Dac,
    Mdp,
    Cmdp,
    Selection,
    Scheduling,
    NoisyBbo,
}

fn malformed(msg: impl Into<String>) -> DacError {
    DacError::Argument(msg.into())
}

fn check_table(rows: &[Vec<Cost>], what: &str) -> Result<(usize, usize)> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(malformed(format!("{what} must be a non-empty rectangular table")));
    }
    Ok((rows.len(), cols))
}

/// All `radix^len` vectors over `0..radix`, last position fastest.
pub fn all_vectors(radix: usize, len: usize) -> Vec<Vec<usize>> {
    let total = radix.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let mut v = vec![0; len];
            for slot in v.iter_mut().rev() {
                *slot = code % radix;
                code /= radix;
            }
            v
        })
        .collect()
}

/// Picks at most [`OPTIMAL_CAP`] evenly spread indices out of `total`.
fn spread(total: usize) -> Vec<usize> {
    if total <= OPTIMAL_CAP {
        (0..total).collect()
    } else {
        (0..OPTIMAL_CAP).map(|k| k * total / OPTIMAL_CAP).collect()
    }
}

/// Decodes `code` into one choice per list (mixed radix, last list fastest).
fn mixed_radix<T: Clone>(lists: &[Vec<T>], mut code: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(lists.len());
    for list in lists.iter().rev() {
        out.push(list[code % list.len()].clone());
        code /= list.len();
    }
    out.reverse();
    out
}

fn product_len<T>(lists: &[Vec<T>]) -> usize {
    lists.iter().fold(1usize, |acc, l| acc.saturating_mul(l.len()))
}

/// AC: find θ minimizing `Σ_i cost[θ][i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcProblem {
    pub cost: Vec<Vec<Cost>>,
}

impl AcProblem {
    pub fn configs(&self) -> usize {
        self.cost.len()
    }

    pub fn instances(&self) -> usize {
        self.cost[0].len()
    }

    pub fn objective(&self, theta: usize) -> Cost {
        self.cost[theta].iter().sum()
    }
}

/// PIAC: find ψ in an explicit mapping space Ψ minimizing `Σ_i cost[ψ(i)][i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiacProblem {
    pub cost: Vec<Vec<Cost>>,
    pub mappings: Vec<Vec<usize>>,
}

impl PiacProblem {
    pub fn configs(&self) -> usize {
        self.cost.len()
    }

    pub fn instances(&self) -> usize {
        self.cost[0].len()
    }

    pub fn objective(&self, psi: &[usize]) -> Cost {
        psi.iter().enumerate().map(|(i, &t)| self.cost[t][i]).sum()
    }
}

/// Cost of a DAC episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DacCost {
    /// `init[i] + Σ step[i][s][θ]` over the visited (state, configuration) pairs.
    StepSum { init: Vec<Cost>, step: Vec<Vec<Vec<Cost>>> },
    /// Trajectory functional `min_k table[k][i][n_k]`, where `n_k` counts how
    /// often configuration `k` was chosen.
    MinOverCounts { table: Vec<Vec<Vec<Cost>>> },
}

/// Policy table `π[i][s] = θ`.
pub type DacPolicy = Vec<Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpace {
    /// Every table `S × I → Θ`.
    Unconstrained,
    /// An explicit finite parametrization Λ; λ indexes the list.
    Parametric(Vec<DacPolicy>),
}

/// DAC over a deterministic tabulated target algorithm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DacProblem {
    pub states: usize,
    pub configs: usize,
    /// Cutoff on the number of steps.
    pub horizon: usize,
    /// Initial state per instance.
    pub init: Vec<usize>,
    /// `next[i][s][θ]`.
    pub next: Vec<Vec<Vec<usize>>>,
    /// `finals[i][s]`.
    pub finals: Vec<Vec<bool>>,
    pub cost: DacCost,
    pub policies: PolicySpace,
}

impl DacProblem {
    pub fn instances(&self) -> usize {
        self.init.len()
    }

    pub fn is_decomposed(&self) -> bool {
        matches!(self.cost, DacCost::StepSum { .. })
    }

    fn validate(&self) -> Result<()> {
        let (n, s, c) = (self.instances(), self.states, self.configs);
        if n == 0 || s == 0 || c == 0 {
            return Err(malformed("DAC needs instances, states and configurations"));
        }
        let shape_ok = self.init.iter().all(|&x| x < s)
            && self.next.len() == n
            && self.next.iter().all(|r| r.len() == s && r.iter().all(|a| a.len() == c && a.iter().all(|&x| x < s)))
            && self.finals.len() == n
            && self.finals.iter().all(|r| r.len() == s);
        if !shape_ok {
            return Err(malformed("DAC transition tables do not match the declared sizes"));
        }
        match &self.cost {
            DacCost::StepSum { init, step } => {
                if init.len() != n || step.len() != n || step.iter().any(|r| r.len() != s || r.iter().any(|a| a.len() != c)) {
                    return Err(malformed("DAC step-cost table does not match the declared sizes"));
                }
            }
            DacCost::MinOverCounts { table } => {
                if table.len() != c || table.iter().any(|k| k.len() != n || k.iter().any(|t| t.len() != self.horizon + 1)) {
                    return Err(malformed("DAC count-cost table must be [configs][instances][horizon + 1]"));
                }
            }
        }
        if let PolicySpace::Parametric(list) = &self.policies {
            if list.is_empty() {
                return Err(malformed("parametric policy space is empty"));
            }
            for p in list {
                self.check_policy(p)?;
            }
        }
        Ok(())
    }

    fn check_policy(&self, p: &DacPolicy) -> Result<()> {
        if p.len() != self.instances() || p.iter().any(|r| r.len() != self.states || r.iter().any(|&t| t >= self.configs)) {
            return Err(malformed("policy table does not match the problem's sizes"));
        }
        Ok(())
    }

    /// Cost of one episode of `policy` on instance `i`.
    pub fn episode_cost(&self, policy: &DacPolicy, i: usize) -> Cost {
        let mut s = self.init[i];
        let mut counts = vec![0usize; self.configs];
        let mut total = match &self.cost {
            DacCost::StepSum { init, .. } => init[i],
            DacCost::MinOverCounts { .. } => 0,
        };
        for _ in 0..self.horizon {
            if self.finals[i][s] {
                break;
            }
            let theta = policy[i][s];
            if let DacCost::StepSum { step, .. } = &self.cost {
                total += step[i][s][theta];
            }
            counts[theta] += 1;
            s = self.next[i][s][theta];
        }
        match &self.cost {
            DacCost::StepSum { .. } => total,
            DacCost::MinOverCounts { table } => (0..self.configs).map(|k| table[k][i][counts[k]]).min().expect("configs > 0"),
        }
    }

    pub fn objective(&self, policy: &DacPolicy) -> Cost {
        (0..self.instances()).map(|i| self.episode_cost(policy, i)).sum()
    }

    /// Every behaviourally distinct choice pattern of a stationary policy on
    /// instance `i`: the configurations fixed on the states the episode visits,
    /// with its cost. A revisited state must repeat its earlier choice.
    pub fn instance_behaviours(&self, i: usize) -> Vec<(Vec<Option<usize>>, Cost)> {
        let mut out = Vec::new();
        let mut assign = vec![None; self.states];
        self.explore(i, self.init[i], 0, &mut assign, &mut out);
        out
    }

    fn explore(&self, i: usize, s: usize, depth: usize, assign: &mut Vec<Option<usize>>, out: &mut Vec<(Vec<Option<usize>>, Cost)>) {
        if depth == self.horizon || self.finals[i][s] {
            let table: DacPolicy = (0..self.instances())
                .map(|j| if j == i { assign.iter().map(|a| a.unwrap_or(0)).collect() } else { vec![0; self.states] })
                .collect();
            out.push((assign.clone(), self.episode_cost(&table, i)));
            return;
        }
        match assign[s] {
            Some(theta) => self.explore(i, self.next[i][s][theta], depth + 1, assign, out),
            None => {
                for theta in 0..self.configs {
                    assign[s] = Some(theta);
                    self.explore(i, self.next[i][s][theta], depth + 1, assign, out);
                }
                assign[s] = None;
            }
        }
    }

    /// The explicit policy list: Λ, or every table when unconstrained and
    /// `|Θ|^(|I|·|S|) <= limit`.
    pub fn enumerate_policies(&self, limit: usize) -> Option<Vec<DacPolicy>> {
        match &self.policies {
            PolicySpace::Parametric(list) => Some(list.clone()),
            PolicySpace::Unconstrained => {
                let cells = self.instances() * self.states;
                let count = (self.configs as u128).checked_pow(cells as u32)?;
                if count > limit as u128 {
                    return None;
                }
                Some(
                    all_vectors(self.configs, cells)
                        .into_iter()
                        .map(|flat| flat.chunks(self.states).map(<[usize]>::to_vec).collect())
                        .collect(),
                )
            }
        }
    }

    fn optimum(&self) -> Cost {
        match &self.policies {
            PolicySpace::Parametric(list) => list.iter().map(|p| self.objective(p)).min().expect("validated"),
            PolicySpace::Unconstrained => (0..self.instances())
                .map(|i| self.instance_behaviours(i).iter().map(|b| b.1).min().expect("at least one behaviour"))
                .sum(),
        }
    }

    fn optimal_solutions(&self) -> (Vec<Solution>, usize) {
        match &self.policies {
            PolicySpace::Parametric(list) => {
                let best = self.optimum();
                let opt: Vec<Solution> = list.iter().filter(|p| self.objective(p) == best).cloned().map(Solution::Dac).collect();
                let n = opt.len();
                (spread(n).into_iter().map(|k| opt[k].clone()).collect(), n)
            }
            PolicySpace::Unconstrained => {
                let per_instance: Vec<Vec<Vec<Option<usize>>>> = (0..self.instances())
                    .map(|i| {
                        let b = self.instance_behaviours(i);
                        let best = b.iter().map(|x| x.1).min().expect("non-empty");
                        b.into_iter().filter(|x| x.1 == best).map(|x| x.0).collect()
                    })
                    .collect();
                // unvisited states are free: fill them with the lowest and the highest configuration
                let fills: Vec<usize> = if self.configs == 1 { vec![0] } else { vec![0, self.configs - 1] };
                let combos = product_len(&per_instance);
                let total = combos.saturating_mul(fills.len());
                let sols = spread(total)
                    .into_iter()
                    .map(|code| {
                        let fill = fills[code % fills.len()];
                        let choice = mixed_radix(&per_instance, code / fills.len());
                        Solution::Dac(choice.iter().map(|row| row.iter().map(|a| a.unwrap_or(fill)).collect()).collect())
                    })
                    .collect();
                (sols, total)
            }
        }
    }

    fn is_optimal(&self, policy: &DacPolicy) -> Result<Membership> {
        self.check_policy(policy)?;
        if let PolicySpace::Parametric(list) = &self.policies {
            if !list.contains(policy) {
                return Ok(Membership::infeasible("policy is not in the parametric space Λ"));
            }
        }
        Ok(Membership::compare(self.objective(policy), self.optimum()))
    }

    /// Whether the non-final transition graph is acyclic and every episode from
    /// an initial state ends in a final state within the horizon.
    pub fn is_episodic(&self) -> bool {
        (0..self.instances()).all(|i| {
            let graph = |s: usize| -> Vec<usize> {
                if self.finals[i][s] {
                    Vec::new()
                } else {
                    self.next[i][s].clone()
                }
            };
            match longest_paths(self.states, graph) {
                Some(depth) => self.finals[i].iter().any(|&f| f) && depth[self.init[i]] <= self.horizon && {
                    // every maximal path must stop at a final state, not at a dead end
                    (0..self.states).all(|s| self.finals[i][s] || !self.next[i][s].is_empty())
                },
                None => false,
            }
        })
    }
}

/// Longest edge count from each node in a graph; `None` when a cycle exists.
/// Self-loops count as cycles.
fn longest_paths(n: usize, succ: impl Fn(usize) -> Vec<usize>) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(s: usize, succ: &dyn Fn(usize) -> Vec<usize>, mark: &mut [Mark], depth: &mut [usize]) -> bool {
        match mark[s] {
            Mark::Done => return true,
            Mark::Active => return false,
            Mark::New => {}
        }
        mark[s] = Mark::Active;
        let mut best = 0;
        for t in succ(s) {
            if !visit(t, succ, mark, depth) {
                return false;
            }
            best = best.max(depth[t] + 1);
        }
        depth[s] = best;
        mark[s] = Mark::Done;
        true
    }
    let mut mark = vec![Mark::New; n];
    let mut depth = vec![0; n];
    for s in 0..n {
        if !visit(s, &succ, &mut mark, &mut depth) {
            return None;
        }
    }
    Some(depth)
}

/// Episodic deterministic MDP maximizing total reward. Finals are absorbing
/// with zero reward; the non-final transition graph is acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpProblem {
    pub actions: usize,
    /// `next[s][a]`.
    pub next: Vec<Vec<usize>>,
    /// `reward[s][a]`.
    pub reward: Vec<Vec<Cost>>,
    pub finals: Vec<bool>,
}

impl MdpProblem {
    pub fn states(&self) -> usize {
        self.next.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.states();
        if n == 0 || self.actions == 0 {
            return Err(malformed("MDP needs states and actions"));
        }
        if self.reward.len() != n
            || self.finals.len() != n
            || self.next.iter().any(|r| r.len() != self.actions || r.iter().any(|&t| t >= n))
            || self.reward.iter().any(|r| r.len() != self.actions)
        {
            return Err(malformed("MDP tables do not match the declared sizes"));
        }
        for s in (0..n).filter(|&s| self.finals[s]) {
            if self.next[s].iter().any(|&t| t != s) || self.reward[s].iter().any(|&r| r != 0) {
                return Err(malformed(format!("final state {s} must be absorbing with zero reward")));
            }
        }
        if longest_paths(n, |s| if self.finals[s] { Vec::new() } else { self.next[s].clone() }).is_none() {
            return Err(malformed("MDP has a cycle through non-final states"));
        }
        Ok(())
    }

    /// Optimal state values, exact.
    pub fn values(&self) -> Vec<Cost> {
        self.solve(None)
    }

    /// State values of a deterministic stationary policy.
    pub fn policy_values(&self, policy: &[usize]) -> Vec<Cost> {
        self.solve(Some(policy))
    }

    fn solve(&self, policy: Option<&[usize]>) -> Vec<Cost> {
        let n = self.states();
        let mut value: Vec<Option<Cost>> = vec![None; n];
        fn eval(m: &MdpProblem, s: usize, policy: Option<&[usize]>, value: &mut Vec<Option<Cost>>) -> Cost {
            if let Some(v) = value[s] {
                return v;
            }
            let v = if m.finals[s] {
                0
            } else {
                let q = |a: usize, value: &mut Vec<Option<Cost>>| m.reward[s][a] + eval(m, m.next[s][a], policy, value);
                match policy {
                    Some(p) => q(p[s], value),
                    None => (0..m.actions).map(|a| q(a, value)).max().expect("actions > 0"),
                }
            };
            value[s] = Some(v);
            v
        }
        (0..n).map(|s| eval(self, s, policy, &mut value)).collect()
    }

    /// Actions attaining the optimal value in each state (all actions on finals).
    pub fn optimal_actions(&self) -> Vec<Vec<usize>> {
        let v = self.values();
        (0..self.states())
            .map(|s| {
                if self.finals[s] {
                    (0..self.actions).collect()
                } else {
                    (0..self.actions).filter(|&a| self.reward[s][a] + v[self.next[s][a]] == v[s]).collect()
                }
            })
            .collect()
    }

    fn check_policy(&self, policy: &[usize]) -> Result<()> {
        if policy.len() != self.states() || policy.iter().any(|&a| a >= self.actions) {
            return Err(malformed("MDP policy does not match the problem's sizes"));
        }
        Ok(())
    }

    /// Uniform optimality: the policy attains the optimal value in every state.
    fn is_optimal(&self, policy: &[usize]) -> Result<Membership> {
        self.check_policy(policy)?;
        let (v, vp) = (self.values(), self.policy_values(policy));
        Ok(match (0..self.states()).find(|&s| v[s] != vp[s]) {
            None => Membership::optimal(),
            Some(s) => Membership::suboptimal(format!("state {s}: policy value {} < optimal {}", vp[s], v[s])),
        })
    }
}

/// Contextual MDP with shared state and action sets and a uniform context
/// distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmdpProblem {
    pub contexts: Vec<MdpProblem>,
}

impl CmdpProblem {
    pub fn states(&self) -> usize {
        self.contexts[0].states()
    }

    pub fn actions(&self) -> usize {
        self.contexts[0].actions
    }

    fn validate(&self) -> Result<()> {
        let first = self.contexts.first().ok_or_else(|| malformed("cMDP needs at least one context"))?;
        for m in &self.contexts {
            m.validate()?;
            if m.states() != first.states() || m.actions != first.actions {
                return Err(malformed("cMDP contexts must share state and action sets"));
            }
        }
        Ok(())
    }
}

/// Algorithm selection: find `S(i) ∈ argmin_a cost[a][i]` for every instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionProblem {
    pub cost: Vec<Vec<Cost>>,
}

impl SelectionProblem {
    pub fn algorithms(&self) -> usize {
        self.cost.len()
    }

    pub fn instances(&self) -> usize {
        self.cost[0].len()
    }

    fn best(&self, i: usize) -> Cost {
        self.cost.iter().map(|r| r[i]).min().expect("algorithms > 0")
    }
}

/// Key of a dynamic scheduling decision: algorithm states, instance, elapsed time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScheduleKey {
    pub states: Vec<usize>,
    pub instance: usize,
    pub elapsed: usize,
}

/// Dynamic scheduling policy δ; keys absent from the map choose algorithm 0.
pub type Schedule = BTreeMap<ScheduleKey, usize>;

/// Algorithm scheduling with budget `B`: every algorithm `k` has a timestep
/// function over its own state set and a cost `cost[k][i][t]` after `t` steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulingProblem {
    pub budget: usize,
    /// Size of each algorithm's state set.
    pub algorithm_states: usize,
    /// `init[k][i]`: state of algorithm `k` before it runs on instance `i`.
    pub init: Vec<Vec<usize>>,
    /// `timestep[k][i][s]`.
    pub timestep: Vec<Vec<Vec<usize>>>,
    /// `cost[k][i][t]` for `t` in `0..=budget`.
    pub cost: Vec<Vec<Vec<Cost>>>,
}

impl SchedulingProblem {
    pub fn algorithms(&self) -> usize {
        self.init.len()
    }

    pub fn instances(&self) -> usize {
        self.init[0].len()
    }

    fn validate(&self) -> Result<()> {
        let (k, n, s) = (self.algorithms(), self.init.first().map_or(0, Vec::len), self.algorithm_states);
        if k == 0 || n == 0 || s == 0 {
            return Err(malformed("scheduling needs algorithms, instances and algorithm states"));
        }
        let ok = self.init.iter().all(|r| r.len() == n && r.iter().all(|&x| x < s))
            && self.timestep.len() == k
            && self.timestep.iter().all(|r| r.len() == n && r.iter().all(|t| t.len() == s && t.iter().all(|&x| x < s)))
            && self.cost.len() == k
            && self.cost.iter().all(|r| r.len() == n && r.iter().all(|t| t.len() == self.budget + 1));
        if !ok {
            return Err(malformed("scheduling tables do not match the declared sizes"));
        }
        Ok(())
    }

    /// Runs δ on instance `i`, returning the time allocated to each algorithm.
    pub fn allocation(&self, schedule: &Schedule, i: usize) -> Vec<usize> {
        let mut states: Vec<usize> = (0..self.algorithms()).map(|k| self.init[k][i]).collect();
        let mut t = vec![0; self.algorithms()];
        for elapsed in 0..self.budget {
            let key = ScheduleKey {
                states: states.clone(),
                instance: i,
                elapsed,
            };
            let k = schedule.get(&key).copied().unwrap_or(0).min(self.algorithms() - 1);
            states[k] = self.timestep[k][i][states[k]];
            t[k] += 1;
        }
        t
    }

    fn allocation_cost(&self, t: &[usize], i: usize) -> Cost {
        t.iter().enumerate().map(|(k, &tk)| self.cost[k][i][tk]).min().expect("algorithms > 0")
    }

    pub fn objective(&self, schedule: &Schedule) -> Cost {
        (0..self.instances()).map(|i| self.allocation_cost(&self.allocation(schedule, i), i)).sum()
    }

    /// Exhaustive optimum over all `K^B` choice sequences per instance; every
    /// sequence is realizable because elapsed time is part of δ's input.
    pub fn optimum(&self) -> Cost {
        (0..self.instances())
            .map(|i| {
                all_vectors(self.algorithms(), self.budget)
                    .iter()
                    .map(|seq| {
                        let mut t = vec![0; self.algorithms()];
                        seq.iter().for_each(|&k| t[k] += 1);
                        self.allocation_cost(&t, i)
                    })
                    .min()
                    .expect("at least the empty sequence")
            })
            .sum()
    }
}

/// Noisy black-box optimization: minimize `E_j[evaluate(x, j)]` over a finite
/// domain, the noise `j` uniform over `0..noise`.
#[derive(Clone)]
pub struct NoisyBboProblem {
    pub domain: usize,
    pub noise: usize,
    pub evaluate: Arc<dyn Fn(usize, usize) -> Cost + Send + Sync>,
}

impl fmt::Debug for NoisyBboProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoisyBboProblem")
            .field("domain", &self.domain)
            .field("noise", &self.noise)
            .finish_non_exhaustive()
    }
}

impl NoisyBboProblem {
    /// `noise · E[e(x)]`, exact.
    pub fn scaled_mean(&self, x: usize) -> Cost {
        (0..self.noise).map(|j| (self.evaluate)(x, j)).sum()
    }
}

#[derive(Debug, Clone)]
pub enum MicroProblem {
    Ac(AcProblem),
    Piac(PiacProblem),
    Dac(DacProblem),
    Mdp(MdpProblem),
    Cmdp(CmdpProblem),
    Selection(SelectionProblem),
    Scheduling(SchedulingProblem),
    NoisyBbo(NoisyBboProblem),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Ac(usize),
    Piac(Vec<usize>),
    Dac(DacPolicy),
    Mdp(Vec<usize>),
    Cmdp(Vec<Vec<usize>>),
    Selection(Vec<usize>),
    Scheduling(Schedule),
    NoisyBbo(usize),
}

/// Outcome of checking one candidate solution against the exact optimal set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub optimal: bool,
    pub detail: String,
}

impl Membership {
    fn optimal() -> Self {
        Self {
            optimal: true,
            detail: String::new(),
        }
    }

    fn suboptimal(detail: String) -> Self {
        Self { optimal: false, detail }
    }

    fn infeasible(detail: &str) -> Self {
        Self::suboptimal(detail.to_string())
    }

    fn compare(value: Cost, best: Cost) -> Self {
        if value == best {
            Self::optimal()
        } else {
            Self::suboptimal(format!("objective {value}, optimum {best}"))
        }
    }
}

impl MicroProblem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            MicroProblem::Ac(_) => ProblemKind::Ac,
            MicroProblem::Piac(_) => ProblemKind::Piac,
            MicroProblem::Dac(_) => ProblemKind::Dac,
            MicroProblem::Mdp(_) => ProblemKind::Mdp,
            MicroProblem::Cmdp(_) => ProblemKind::Cmdp,
            MicroProblem::Selection(_) => ProblemKind::Selection,
            MicroProblem::Scheduling(_) => ProblemKind::Scheduling,
            MicroProblem::NoisyBbo(_) => ProblemKind::NoisyBbo,
        }
    }

    /// Checks that every table is total over its declared domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            MicroProblem::Ac(p) => check_table(&p.cost, "AC cost").map(|_| ()),
            MicroProblem::Piac(p) => {
                let (c, n) = check_table(&p.cost, "PIAC cost")?;
                if p.mappings.is_empty() || p.mappings.iter().any(|m| m.len() != n || m.iter().any(|&t| t >= c)) {
                    return Err(malformed("PIAC mapping space must be non-empty mappings I → Θ"));
                }
                Ok(())
            }
            MicroProblem::Dac(p) => p.validate(),
            MicroProblem::Mdp(p) => p.validate(),
            MicroProblem::Cmdp(p) => p.validate(),
            MicroProblem::Selection(p) => check_table(&p.cost, "selection cost").map(|_| ()),
            MicroProblem::Scheduling(p) => p.validate(),
            MicroProblem::NoisyBbo(p) => {
                if p.domain == 0 || p.noise == 0 {
                    return Err(malformed("noisy BBO needs a non-empty domain and noise support"));
                }
                Ok(())
            }
        }
    }

    /// Optimal solutions by exhaustive search: at most [`OPTIMAL_CAP`] of them,
    /// evenly spread, plus the total count of optimal solutions.
    pub fn optimal_solutions(&self) -> Result<(Vec<Solution>, usize)> {
        self.validate()?;
        Ok(match self {
            MicroProblem::Ac(p) => {
                let best = (0..p.configs()).map(|t| p.objective(t)).min().expect("validated");
                let all: Vec<Solution> = (0..p.configs()).filter(|&t| p.objective(t) == best).map(Solution::Ac).collect();
                let n = all.len();
                (all, n)
            }
            MicroProblem::Piac(p) => {
                let best = p.mappings.iter().map(|m| p.objective(m)).min().expect("validated");
                let all: Vec<Solution> = p.mappings.iter().filter(|m| p.objective(m) == best).cloned().map(Solution::Piac).collect();
                let n = all.len();
                (spread(n).into_iter().map(|k| all[k].clone()).collect(), n)
            }
            MicroProblem::Dac(p) => p.optimal_solutions(),
            MicroProblem::Mdp(p) => {
                let lists = p.optimal_actions();
                let total = product_len(&lists);
                (spread(total).into_iter().map(|c| Solution::Mdp(mixed_radix(&lists, c))).collect(), total)
            }
            MicroProblem::Cmdp(p) => {
                let per_context: Vec<Vec<Vec<usize>>> = p.contexts.iter().map(MdpProblem::optimal_actions).collect();
                let s = p.states();
                let flat: Vec<Vec<usize>> = per_context.into_iter().flatten().collect();
                let total = product_len(&flat);
                let sols = spread(total)
                    .into_iter()
                    .map(|c| Solution::Cmdp(mixed_radix(&flat, c).chunks(s).map(<[usize]>::to_vec).collect()))
                    .collect();
                (sols, total)
            }
            MicroProblem::Selection(p) => {
                let lists: Vec<Vec<usize>> = (0..p.instances())
                    .map(|i| (0..p.algorithms()).filter(|&a| p.cost[a][i] == p.best(i)).collect())
                    .collect();
                let total = product_len(&lists);
                (spread(total).into_iter().map(|c| Solution::Selection(mixed_radix(&lists, c))).collect(), total)
            }
            MicroProblem::Scheduling(_) => {
                return Err(DacError::Unsupported("scheduling is only used as a source problem".into()))
            }
            MicroProblem::NoisyBbo(p) => {
                let best = (0..p.domain).map(|x| p.scaled_mean(x)).min().expect("validated");
                let all: Vec<Solution> = (0..p.domain).filter(|&x| p.scaled_mean(x) == best).map(Solution::NoisyBbo).collect();
                let n = all.len();
                (spread(n).into_iter().map(|k| all[k].clone()).collect(), n)
            }
        })
    }

    /// Whether `solution` lies in this problem's exact optimal set.
    pub fn is_optimal(&self, solution: &Solution) -> Result<Membership> {
        let mismatch = || DacError::Argument(format!("solution {solution:?} does not belong to a {:?} problem", self.kind()));
        match (self, solution) {
            (MicroProblem::Ac(p), Solution::Ac(t)) => {
                if *t >= p.configs() {
                    return Ok(Membership::infeasible("configuration index out of range"));
                }
                let best = (0..p.configs()).map(|t| p.objective(t)).min().expect("non-empty");
                Ok(Membership::compare(p.objective(*t), best))
            }
            (MicroProblem::Piac(p), Solution::Piac(psi)) => {
                if !p.mappings.contains(psi) {
                    return Ok(Membership::infeasible("mapping is not in Ψ"));
                }
                let best = p.mappings.iter().map(|m| p.objective(m)).min().expect("non-empty");
                Ok(Membership::compare(p.objective(psi), best))
            }
            (MicroProblem::Dac(p), Solution::Dac(pi)) => p.is_optimal(pi),
            (MicroProblem::Mdp(p), Solution::Mdp(pi)) => p.is_optimal(pi),
            (MicroProblem::Cmdp(p), Solution::Cmdp(pi)) => {
                if pi.len() != p.contexts.len() {
                    return Err(malformed("cMDP policy needs one row per context"));
                }
                for (c, (m, row)) in p.contexts.iter().zip(pi).enumerate() {
                    let r = m.is_optimal(row)?;
                    if !r.optimal {
                        return Ok(Membership::suboptimal(format!("context {c}: {}", r.detail)));
                    }
                }
                Ok(Membership::optimal())
            }
            (MicroProblem::Selection(p), Solution::Selection(s)) => {
                if s.len() != p.instances() || s.iter().any(|&a| a >= p.algorithms()) {
                    return Ok(Membership::infeasible("selection mapping does not match the problem's sizes"));
                }
                Ok(match (0..p.instances()).find(|&i| p.cost[s[i]][i] != p.best(i)) {
                    None => Membership::optimal(),
                    Some(i) => Membership::suboptimal(format!("instance {i}: cost {} > best {}", p.cost[s[i]][i], p.best(i))),
                })
            }
            (MicroProblem::Scheduling(p), Solution::Scheduling(d)) => {
                if d.values().any(|&k| k >= p.algorithms()) {
                    return Ok(Membership::infeasible("schedule chooses an unknown algorithm"));
                }
                Ok(Membership::compare(p.objective(d), p.optimum()))
            }
            (MicroProblem::NoisyBbo(p), Solution::NoisyBbo(x)) => {
                if *x >= p.domain {
                    return Ok(Membership::infeasible("point outside the domain"));
                }
                let best = (0..p.domain).map(|y| p.scaled_mean(y)).min().expect("non-empty");
                Ok(Membership::compare(p.scaled_mean(*x), best))
            }
            _ => Err(mismatch()),
        }
    }
}
