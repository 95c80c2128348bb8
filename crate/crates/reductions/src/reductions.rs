//! Formulate/interpret pairs between problem classes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use dac_core::{DacError, Result};
use rand_chacha::ChaCha8Rng;

use crate::generate::{self, GeneratorConfig};
use crate::problem::{
    all_vectors, AcProblem, CmdpProblem, DacCost, DacPolicy, DacProblem, MdpProblem, MicroProblem, NoisyBboProblem,
    PiacProblem, PolicySpace, ProblemKind, Schedule, ScheduleKey, SchedulingProblem, Solution,
};

/// Largest unconstrained policy space that `dac_to_noisy_bbo` enumerates.
pub const MAX_ENUMERATED_POLICIES: usize = 4096;

/// A many-one reduction between two problem classes.
#[derive(Clone, Copy)]
pub struct Reduction {
    pub id: &'static str,
    pub source: ProblemKind,
    pub target: ProblemKind,
    precondition: fn(&MicroProblem) -> std::result::Result<(), String>,
    formulate: fn(&MicroProblem) -> Result<MicroProblem>,
    interpret: fn(&MicroProblem, &Solution) -> Result<Solution>,
    generate: fn(&GeneratorConfig, &mut ChaCha8Rng) -> MicroProblem,
    corrupt: bool,
}

impl fmt::Debug for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reduction")
            .field("id", &self.id)
            .field("source", &self.source)
            .field("target", &self.target)
            .field("corrupt", &self.corrupt)
            .finish()
    }
}

impl Reduction {
    /// `Err(reason)` when the reduction does not apply to `micro`.
    pub fn check_preconditions(&self, micro: &MicroProblem) -> std::result::Result<(), String> {
        if micro.kind() != self.source {
            return Err(format!("expects a {:?} problem, got {:?}", self.source, micro.kind()));
        }
        (self.precondition)(micro)
    }

    pub fn formulate(&self, micro: &MicroProblem) -> Result<MicroProblem> {
        self.check_kind(micro)?;
        (self.formulate)(micro)
    }

    pub fn interpret(&self, micro: &MicroProblem, target_solution: &Solution) -> Result<Solution> {
        self.check_kind(micro)?;
        let sol = (self.interpret)(micro, target_solution)?;
        Ok(if self.corrupt { off_by_one(micro, sol) } else { sol })
    }

    /// A random source problem from this reduction's generator.
    pub fn generate(&self, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> MicroProblem {
        (self.generate)(cfg, rng)
    }

    /// The same reduction with a planted off-by-one bug in `interpret`.
    pub fn corrupted(self) -> Self {
        Self { corrupt: true, ..self }
    }

    fn check_kind(&self, micro: &MicroProblem) -> Result<()> {
        if micro.kind() != self.source {
            return Err(DacError::Argument(format!(
                "reduction `{}` takes a {:?} problem, got {:?}",
                self.id,
                self.source,
                micro.kind()
            )));
        }
        Ok(())
    }
}

fn bump(x: usize, n: usize) -> usize {
    (x + 1) % n.max(1)
}

fn off_by_one(micro: &MicroProblem, sol: Solution) -> Solution {
    match (micro, sol) {
        (MicroProblem::Ac(p), Solution::Ac(t)) => Solution::Ac(bump(t, p.configs())),
        (MicroProblem::Piac(p), Solution::Piac(mut psi)) => {
            psi[0] = bump(psi[0], p.configs());
            Solution::Piac(psi)
        }
        (MicroProblem::Dac(p), Solution::Dac(mut pi)) => {
            let s = p.init[0];
            pi[0][s] = bump(pi[0][s], p.configs);
            Solution::Dac(pi)
        }
        (MicroProblem::Mdp(p), Solution::Mdp(mut pi)) => {
            let s = p.finals.iter().position(|f| !f).unwrap_or(0);
            pi[s] = bump(pi[s], p.actions);
            Solution::Mdp(pi)
        }
        (MicroProblem::Cmdp(p), Solution::Cmdp(mut pi)) => {
            let s = p.contexts[0].finals.iter().position(|f| !f).unwrap_or(0);
            pi[0][s] = bump(pi[0][s], p.actions());
            Solution::Cmdp(pi)
        }
        (MicroProblem::Selection(p), Solution::Selection(mut s)) => {
            s[0] = bump(s[0], p.algorithms());
            Solution::Selection(s)
        }
        (MicroProblem::Scheduling(p), Solution::Scheduling(d)) => {
            Solution::Scheduling(d.into_iter().map(|(k, a)| (k, bump(a, p.algorithms()))).collect())
        }
        (_, other) => other,
    }
}

fn wrong_solution(expected: &str, got: &Solution) -> DacError {
    DacError::Argument(format!("expected a {expected} solution, got {got:?}"))
}

fn always(_: &MicroProblem) -> std::result::Result<(), String> {
    Ok(())
}

pub fn ac_to_piac() -> Reduction {
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Ac(p) = m else { unreachable!("kind checked") };
        Ok(MicroProblem::Piac(PiacProblem {
            cost: p.cost.clone(),
            mappings: (0..p.configs()).map(|t| vec![t; p.instances()]).collect(),
        }))
    }
    fn interpret(_: &MicroProblem, s: &Solution) -> Result<Solution> {
        match s {
            Solution::Piac(psi) => Ok(Solution::Ac(psi[0])),
            other => Err(wrong_solution("PIAC", other)),
        }
    }
    Reduction {
        id: "ac_to_piac",
        source: ProblemKind::Ac,
        target: ProblemKind::Piac,
        precondition: always,
        formulate,
        interpret,
        generate: generate::ac,
        corrupt: false,
    }
}

/// One-step DAC: state 0 is the sentinel start, state 1 is final.
fn one_step_dac(cost: &[Vec<i64>], policies: Vec<DacPolicy>) -> DacProblem {
    let (configs, instances) = (cost.len(), cost[0].len());
    DacProblem {
        states: 2,
        configs,
        horizon: 1,
        init: vec![0; instances],
        next: vec![vec![vec![1; configs]; 2]; instances],
        finals: vec![vec![false, true]; instances],
        cost: DacCost::StepSum {
            init: vec![0; instances],
            step: (0..instances).map(|i| vec![(0..configs).map(|t| cost[t][i]).collect(), vec![0; configs]]).collect(),
        },
        policies: PolicySpace::Parametric(policies),
    }
}

pub fn piac_to_dac() -> Reduction {
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Piac(p) = m else { unreachable!("kind checked") };
        let policies = p.mappings.iter().map(|psi| psi.iter().map(|&t| vec![t, 0]).collect()).collect();
        Ok(MicroProblem::Dac(one_step_dac(&p.cost, policies)))
    }
    fn interpret(_: &MicroProblem, s: &Solution) -> Result<Solution> {
        match s {
            Solution::Dac(pi) => Ok(Solution::Piac(pi.iter().map(|row| row[0]).collect())),
            other => Err(wrong_solution("DAC", other)),
        }
    }
    Reduction {
        id: "piac_to_dac",
        source: ProblemKind::Piac,
        target: ProblemKind::Dac,
        precondition: always,
        formulate,
        interpret,
        generate: generate::piac,
        corrupt: false,
    }
}

/// AC embedded directly as a DAC over constant policies, without going through PIAC.
pub fn constant_dac_embedding(ac: &AcProblem) -> DacProblem {
    let policies = (0..ac.configs()).map(|t| vec![vec![t, 0]; ac.instances()]).collect();
    one_step_dac(&ac.cost, policies)
}

pub fn dac_to_ac() -> Reduction {
    fn precondition(m: &MicroProblem) -> std::result::Result<(), String> {
        match m {
            MicroProblem::Dac(DacProblem {
                policies: PolicySpace::Parametric(_),
                ..
            }) => Ok(()),
            _ => Err("needs an explicit parametric representation Λ of the policy space".into()),
        }
    }
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Dac(p) = m else { unreachable!("kind checked") };
        let PolicySpace::Parametric(lambda) = &p.policies else {
            return Err(DacError::Argument("DAC has no parametric policy space".into()));
        };
        Ok(MicroProblem::Ac(AcProblem {
            cost: lambda.iter().map(|pi| (0..p.instances()).map(|i| p.episode_cost(pi, i)).collect()).collect(),
        }))
    }
    fn interpret(m: &MicroProblem, s: &Solution) -> Result<Solution> {
        let MicroProblem::Dac(DacProblem {
            policies: PolicySpace::Parametric(lambda),
            ..
        }) = m
        else {
            return Err(DacError::Argument("DAC has no parametric policy space".into()));
        };
        match s {
            Solution::Ac(l) => lambda
                .get(*l)
                .cloned()
                .map(Solution::Dac)
                .ok_or_else(|| DacError::Argument(format!("λ index {l} out of range"))),
            other => Err(wrong_solution("AC", other)),
        }
    }
    Reduction {
        id: "dac_to_ac",
        source: ProblemKind::Dac,
        target: ProblemKind::Ac,
        precondition,
        formulate,
        interpret,
        generate: generate::parametric_dac,
        corrupt: false,
    }
}

pub fn dac_to_cmdp() -> Reduction {
    fn precondition(m: &MicroProblem) -> std::result::Result<(), String> {
        let MicroProblem::Dac(p) = m else { return Err("not a DAC problem".into()) };
        if !p.is_decomposed() {
            return Err("cost is not step-wise decomposable".into());
        }
        if p.policies != PolicySpace::Unconstrained {
            return Err("policy space is constrained".into());
        }
        if !p.is_episodic() {
            return Err("episodes are not guaranteed to reach a final state within the horizon".into());
        }
        Ok(())
    }
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Dac(p) = m else { unreachable!("kind checked") };
        let DacCost::StepSum { step, .. } = &p.cost else {
            return Err(DacError::Argument("DAC cost is not step-wise decomposable".into()));
        };
        let contexts = (0..p.instances())
            .map(|i| {
                let fin = &p.finals[i];
                MdpProblem {
                    actions: p.configs,
                    next: (0..p.states).map(|s| if fin[s] { vec![s; p.configs] } else { p.next[i][s].clone() }).collect(),
                    reward: (0..p.states)
                        .map(|s| if fin[s] { vec![0; p.configs] } else { step[i][s].iter().map(|c| -c).collect() })
                        .collect(),
                    finals: fin.clone(),
                }
            })
            .collect();
        Ok(MicroProblem::Cmdp(CmdpProblem { contexts }))
    }
    fn interpret(_: &MicroProblem, s: &Solution) -> Result<Solution> {
        match s {
            Solution::Cmdp(pi) => Ok(Solution::Dac(pi.clone())),
            other => Err(wrong_solution("cMDP", other)),
        }
    }
    Reduction {
        id: "dac_to_cmdp",
        source: ProblemKind::Dac,
        target: ProblemKind::Cmdp,
        precondition,
        formulate,
        interpret,
        generate: generate::episodic_dac,
        corrupt: false,
    }
}

/// Index of the paired state `(s, c)` in `S × C`.
pub fn pair_state(s: usize, c: usize, contexts: usize) -> usize {
    s * contexts + c
}

pub fn cmdp_to_mdp() -> Reduction {
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Cmdp(p) = m else { unreachable!("kind checked") };
        let (n, k) = (p.states(), p.contexts.len());
        let mut next = Vec::with_capacity(n * k);
        let mut reward = Vec::with_capacity(n * k);
        let mut finals = Vec::with_capacity(n * k);
        for s in 0..n {
            for (c, ctx) in p.contexts.iter().enumerate() {
                next.push(ctx.next[s].iter().map(|&t| pair_state(t, c, k)).collect());
                reward.push(ctx.reward[s].clone());
                finals.push(ctx.finals[s]);
            }
        }
        Ok(MicroProblem::Mdp(MdpProblem {
            actions: p.actions(),
            next,
            reward,
            finals,
        }))
    }
    fn interpret(m: &MicroProblem, s: &Solution) -> Result<Solution> {
        let MicroProblem::Cmdp(p) = m else { unreachable!("kind checked") };
        let k = p.contexts.len();
        match s {
            Solution::Mdp(pi) => Ok(Solution::Cmdp(
                (0..k).map(|c| (0..p.states()).map(|s| pi[pair_state(s, c, k)]).collect()).collect(),
            )),
            other => Err(wrong_solution("MDP", other)),
        }
    }
    Reduction {
        id: "cmdp_to_mdp",
        source: ProblemKind::Cmdp,
        target: ProblemKind::Mdp,
        precondition: always,
        formulate,
        interpret,
        generate: generate::cmdp,
        corrupt: false,
    }
}

pub fn mdp_to_cmdp() -> Reduction {
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Mdp(p) = m else { unreachable!("kind checked") };
        Ok(MicroProblem::Cmdp(CmdpProblem { contexts: vec![p.clone()] }))
    }
    fn interpret(_: &MicroProblem, s: &Solution) -> Result<Solution> {
        match s {
            Solution::Cmdp(pi) => Ok(Solution::Mdp(pi[0].clone())),
            other => Err(wrong_solution("cMDP", other)),
        }
    }
    Reduction {
        id: "mdp_to_cmdp",
        source: ProblemKind::Mdp,
        target: ProblemKind::Cmdp,
        precondition: always,
        formulate,
        interpret,
        generate: generate::mdp,
        corrupt: false,
    }
}

pub fn selection_to_piac() -> Reduction {
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Selection(p) = m else { unreachable!("kind checked") };
        Ok(MicroProblem::Piac(PiacProblem {
            cost: p.cost.clone(),
            mappings: all_vectors(p.algorithms(), p.instances()),
        }))
    }
    fn interpret(_: &MicroProblem, s: &Solution) -> Result<Solution> {
        match s {
            Solution::Piac(psi) => Ok(Solution::Selection(psi.clone())),
            other => Err(wrong_solution("PIAC", other)),
        }
    }
    Reduction {
        id: "selection_to_piac",
        source: ProblemKind::Selection,
        target: ProblemKind::Piac,
        precondition: always,
        formulate,
        interpret,
        generate: generate::selection,
        corrupt: false,
    }
}

/// DAC state of a schedule: algorithm state vector plus elapsed time.
type SchedState = (Vec<usize>, usize);

/// Every `(states, elapsed)` pair reachable on some instance, in canonical
/// order (elapsed time first, then the state vector).
fn schedule_states(p: &SchedulingProblem) -> Vec<SchedState> {
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..p.instances() {
        let mut frontier = std::collections::BTreeSet::new();
        frontier.insert((0..p.algorithms()).map(|k| p.init[k][i]).collect::<Vec<_>>());
        for elapsed in 0..=p.budget {
            for s in &frontier {
                seen.insert((elapsed, s.clone()));
            }
            if elapsed == p.budget {
                break;
            }
            frontier = frontier
                .iter()
                .flat_map(|s| {
                    (0..p.algorithms()).map(move |k| {
                        let mut t = s.clone();
                        t[k] = p.timestep[k][i][t[k]];
                        t
                    })
                })
                .collect();
        }
    }
    seen.into_iter().map(|(t, s)| (s, t)).collect()
}

pub fn scheduling_to_dac() -> Reduction {
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Scheduling(p) = m else { unreachable!("kind checked") };
        if p.budget == 0 {
            return Err(DacError::Argument("scheduling budget B must be at least 1".into()));
        }
        let states = schedule_states(p);
        let index: BTreeMap<&SchedState, usize> = states.iter().enumerate().map(|(n, s)| (s, n)).collect();
        let k = p.algorithms();
        let next = (0..p.instances())
            .map(|i| {
                states
                    .iter()
                    .enumerate()
                    .map(|(here, (s, t))| {
                        (0..k)
                            .map(|a| {
                                if *t == p.budget {
                                    return here;
                                }
                                let mut s2 = s.clone();
                                s2[a] = p.timestep[a][i][s2[a]];
                                // successors of states instance i never visits may fall outside the set
                                index.get(&(s2, t + 1)).copied().unwrap_or(here)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let start = |i: usize| index[&((0..k).map(|a| p.init[a][i]).collect::<Vec<_>>(), 0)];
        Ok(MicroProblem::Dac(DacProblem {
            states: states.len(),
            configs: k,
            horizon: p.budget,
            init: (0..p.instances()).map(start).collect(),
            next,
            finals: vec![states.iter().map(|(_, t)| *t == p.budget).collect(); p.instances()],
            cost: DacCost::MinOverCounts { table: p.cost.clone() },
            policies: PolicySpace::Unconstrained,
        }))
    }
    fn interpret(m: &MicroProblem, s: &Solution) -> Result<Solution> {
        let MicroProblem::Scheduling(p) = m else { unreachable!("kind checked") };
        let Solution::Dac(pi) = s else { return Err(wrong_solution("DAC", s)) };
        let states = schedule_states(p);
        let mut delta = Schedule::new();
        for i in 0..p.instances() {
            for (n, (sv, t)) in states.iter().enumerate() {
                if *t < p.budget {
                    let key = ScheduleKey {
                        states: sv.clone(),
                        instance: i,
                        elapsed: *t,
                    };
                    delta.insert(key, pi[i][n]);
                }
            }
        }
        Ok(Solution::Scheduling(delta))
    }
    Reduction {
        id: "scheduling_to_dac",
        source: ProblemKind::Scheduling,
        target: ProblemKind::Dac,
        precondition: always,
        formulate,
        interpret,
        generate: generate::scheduling,
        corrupt: false,
    }
}

pub fn dac_to_noisy_bbo() -> Reduction {
    fn precondition(m: &MicroProblem) -> std::result::Result<(), String> {
        let MicroProblem::Dac(p) = m else { return Err("not a DAC problem".into()) };
        match p.enumerate_policies(MAX_ENUMERATED_POLICIES) {
            Some(_) => Ok(()),
            None => Err(format!("policy space is not an explicit list of at most {MAX_ENUMERATED_POLICIES} policies")),
        }
    }
    fn policies(p: &DacProblem) -> Result<Vec<DacPolicy>> {
        p.enumerate_policies(MAX_ENUMERATED_POLICIES)
            .ok_or_else(|| DacError::Argument("policy space too large to enumerate".into()))
    }
    fn formulate(m: &MicroProblem) -> Result<MicroProblem> {
        let MicroProblem::Dac(p) = m else { unreachable!("kind checked") };
        let list = Arc::new(policies(p)?);
        let problem = Arc::new(p.clone());
        let domain = list.len();
        let noise = p.instances();
        Ok(MicroProblem::NoisyBbo(NoisyBboProblem {
            domain,
            noise,
            // e(π_x) = c(π_x, i) with the instance drawn uniformly
            evaluate: Arc::new(move |x, draw| problem.episode_cost(&list[x], draw % noise)),
        }))
    }
    fn interpret(m: &MicroProblem, s: &Solution) -> Result<Solution> {
        let MicroProblem::Dac(p) = m else { unreachable!("kind checked") };
        let Solution::NoisyBbo(x) = s else { return Err(wrong_solution("noisy BBO", s)) };
        policies(p)?
            .get(*x)
            .cloned()
            .map(Solution::Dac)
            .ok_or_else(|| DacError::Argument(format!("point {x} outside the policy list")))
    }
    Reduction {
        id: "dac_to_noisy_bbo",
        source: ProblemKind::Dac,
        target: ProblemKind::NoisyBbo,
        precondition,
        formulate,
        interpret,
        generate: generate::enumerable_dac,
        corrupt: false,
    }
}

/// Every shipped reduction, in a fixed order.
pub fn all_reductions() -> Vec<Reduction> {
    vec![
        ac_to_piac(),
        piac_to_dac(),
        dac_to_ac(),
        dac_to_cmdp(),
        cmdp_to_mdp(),
        mdp_to_cmdp(),
        selection_to_piac(),
        scheduling_to_dac(),
        dac_to_noisy_bbo(),
    ]
}

pub fn reduction_by_id(id: &str) -> Option<Reduction> {
    all_reductions().into_iter().find(|r| r.id == id)
}
