//! Budget accounting, incumbent bookkeeping and checkpoint emission shared by all solvers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dac_core::{derive_seed, evaluate_policy, mean_cost, DacError, DynamicPolicy, Result, Scenario};
use serde::{Deserialize, Serialize};

/// Sub-stream indices under a run's master seed.
pub mod streams {
    pub const SOLVER_RNG: u64 = 1;
    pub const TRAINING: u64 = 2;
    pub const RACING_PAIRS: u64 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverBudget {
    /// Target-algorithm episodes the solver may consume.
    pub max_evaluations: u64,
    pub checkpoint_every: u64,
}

impl SolverBudget {
    pub fn new(max_evaluations: u64, checkpoint_every: u64) -> Result<Self> {
        let b = Self {
            max_evaluations,
            checkpoint_every,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evaluations == 0 || self.checkpoint_every == 0 {
            return Err(DacError::Argument("budget and checkpoint interval must be positive".into()));
        }
        if self.checkpoint_every > self.max_evaluations {
            return Err(DacError::Argument("checkpoint interval exceeds the budget".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub evaluations_used: u64,
    pub policy_id: String,
    pub mean_cost: f64,
}

/// Best-so-far training cost against episodes consumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncumbentTrace {
    pub solver_id: String,
    pub master_seed: u64,
    pub points: Vec<TracePoint>,
    /// Set when the solver stopped before its budget for a documented reason.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<String>,
}

impl IncumbentTrace {
    pub fn final_cost(&self) -> Option<f64> {
        self.points.last().map(|p| p.mean_cost)
    }

    pub fn evaluations_used(&self) -> u64 {
        self.points.last().map_or(0, |p| p.evaluations_used)
    }

    /// One JSON object per point.
    pub fn to_jsonl(&self) -> String {
        self.points
            .iter()
            .map(|p| serde_json::to_string(p).expect("trace point serializes") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationKind {
    /// Charged against the budget.
    Training,
    /// Incumbent re-evaluation on the fixed seed block, not charged.
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationEvent {
    pub policy_id: String,
    pub instance_id: String,
    pub seed: u64,
    pub evaluations_used: u64,
    pub cost: f64,
    pub kind: EvaluationKind,
}

/// Receives a solver's measurements and checkpoints in logical order.
pub trait SolverObserver {
    fn on_evaluation(&mut self, _event: &EvaluationEvent) -> Result<()> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _point: &TracePoint, _policy: &DynamicPolicy) -> Result<()> {
        Ok(())
    }
}

/// Writes each checkpoint as `policies/<id>.json` plus a line of `trace.jsonl`.
/// Policy files are written to a temporary name and renamed into place.
pub struct CheckpointDir {
    root: PathBuf,
}

impl CheckpointDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join("policies")).map_err(|e| io_err(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> DacError {
    DacError::Config(format!("{}: {e}", path.display()))
}

/// Write-then-rename so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

impl SolverObserver for CheckpointDir {
    fn on_checkpoint(&mut self, point: &TracePoint, policy: &DynamicPolicy) -> Result<()> {
        let file = self.root.join("policies").join(format!("{}.json", point.policy_id));
        if !file.exists() {
            write_atomic(&file, &policy.to_json())?;
        }
        let trace = self.root.join("trace.jsonl");
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&trace)
            .map_err(|e| io_err(&trace, e))?;
        let line = serde_json::to_string(point).expect("trace point serializes") + "\n";
        f.write_all(line.as_bytes()).map_err(|e| io_err(&trace, e))
    }
}

/// Run-level settings common to every solver.
pub struct SolverContext<'a> {
    pub master_seed: u64,
    pub budget: SolverBudget,
    /// Fixed seed block for incumbent evaluation on the whole training set.
    pub eval_seeds: Vec<u64>,
    pub observer: Option<&'a mut dyn SolverObserver>,
}

impl<'a> SolverContext<'a> {
    pub fn new(master_seed: u64, budget: SolverBudget) -> Self {
        Self {
            master_seed,
            budget,
            eval_seeds: default_eval_seeds(master_seed, 1),
            observer: None,
        }
    }

    pub fn with_eval_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.eval_seeds = seeds;
        self
    }

    pub fn with_observer(mut self, observer: &'a mut dyn SolverObserver) -> Self {
        self.observer = Some(observer);
        self
    }
}

/// Evaluation seeds `derive_seed(master, [0, k])`, disjoint from all solver streams.
pub fn default_eval_seeds(master_seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| derive_seed(master_seed, &[0, k])).collect()
}

/// One measured candidate in a wave: who, where, and what it cost.
pub(crate) struct Measurement {
    pub policy_id: String,
    pub instance: usize,
    pub seed: u64,
    pub cost: f64,
}

/// Shared solver bookkeeping.
pub(crate) struct Tracker<'s, 'a> {
    scenario: &'s dyn Scenario,
    ctx: SolverContext<'a>,
    solver_id: String,
    instance_ids: Vec<String>,
    used: u64,
    next_mark: u64,
    incumbent: Option<(DynamicPolicy, f64)>,
    trace: IncumbentTrace,
}

impl<'s, 'a> Tracker<'s, 'a> {
    pub fn new(scenario: &'s dyn Scenario, ctx: SolverContext<'a>, solver_id: &str) -> Result<Self> {
        ctx.budget.validate()?;
        if ctx.eval_seeds.is_empty() {
            return Err(DacError::Argument("incumbent evaluation needs at least one seed".into()));
        }
        Ok(Self {
            scenario,
            instance_ids: scenario.instance_ids(),
            next_mark: ctx.budget.checkpoint_every,
            trace: IncumbentTrace {
                solver_id: solver_id.to_string(),
                master_seed: ctx.master_seed,
                points: Vec::new(),
                early_stop: None,
            },
            solver_id: solver_id.to_string(),
            ctx,
            used: 0,
            incumbent: None,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.ctx.master_seed
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.ctx.budget.max_evaluations - self.used
    }

    pub fn fits(&self, episodes: u64) -> bool {
        episodes <= self.remaining()
    }

    pub fn policy_id(&self, suffix: impl std::fmt::Display) -> String {
        format!("{}-{suffix}", self.solver_id)
    }

    pub fn stop_early(&mut self, reason: impl Into<String>) {
        self.trace.early_stop.get_or_insert(reason.into());
    }

    /// Charges a completed wave and forwards its measurements in order.
    pub fn commit(&mut self, episodes: u64, wave: &[Measurement]) -> Result<()> {
        debug_assert!(self.fits(episodes));
        self.used += episodes;
        if let Some(obs) = self.ctx.observer.as_deref_mut() {
            for m in wave {
                obs.on_evaluation(&EvaluationEvent {
                    policy_id: m.policy_id.clone(),
                    instance_id: self.instance_ids[m.instance].clone(),
                    seed: m.seed,
                    evaluations_used: self.used,
                    cost: m.cost,
                    kind: EvaluationKind::Training,
                })?;
            }
        }
        Ok(())
    }

    /// Charges episodes that produced no policy measurement (e.g. RL exploration).
    pub fn charge(&mut self, episodes: u64) {
        debug_assert!(self.fits(episodes));
        self.used += episodes;
    }

    pub fn checkpoint_due(&self) -> bool {
        self.used >= self.next_mark
    }

    /// Evaluates `proposal` on the fixed seed block and records a trace point.
    pub fn checkpoint(&mut self, policy_id: String, proposal: &DynamicPolicy) -> Result<()> {
        let every = self.ctx.budget.checkpoint_every;
        self.next_mark = (self.used / every + 1) * every;
        if self.trace.points.last().is_some_and(|p| p.evaluations_used == self.used) {
            return Ok(());
        }
        let all: Vec<usize> = (0..self.scenario.num_instances()).collect();
        let evals = evaluate_policy(self.scenario, proposal, &all, &self.ctx.eval_seeds)?;
        let cost = mean_cost(&evals);
        if let Some(obs) = self.ctx.observer.as_deref_mut() {
            for e in &evals {
                obs.on_evaluation(&EvaluationEvent {
                    policy_id: policy_id.clone(),
                    instance_id: e.instance_id.clone(),
                    seed: e.seed,
                    evaluations_used: self.used,
                    cost: e.cost,
                    kind: EvaluationKind::Checkpoint,
                })?;
            }
        }
        let improves = match &self.incumbent {
            None => true,
            Some((_, best)) => cost < *best,
        };
        if improves {
            self.incumbent = Some((proposal.clone(), cost));
            self.trace.points.push(TracePoint {
                evaluations_used: self.used,
                policy_id,
                mean_cost: cost,
            });
        } else {
            let last = self.trace.points.last().expect("incumbent exists").clone();
            self.trace.points.push(TracePoint {
                evaluations_used: self.used,
                ..last
            });
        }
        let point = self.trace.points.last().expect("just pushed").clone();
        let incumbent = &self.incumbent.as_ref().expect("set above").0;
        if let Some(obs) = self.ctx.observer.as_deref_mut() {
            obs.on_checkpoint(&point, incumbent)?;
        }
        Ok(())
    }

    pub fn maybe_checkpoint(&mut self, policy_id: impl FnOnce() -> String, proposal: impl FnOnce() -> Result<DynamicPolicy>) -> Result<()> {
        if self.checkpoint_due() {
            let p = proposal()?;
            self.checkpoint(policy_id(), &p)?;
        }
        Ok(())
    }

    /// Final checkpoint (if the last one is stale) and the incumbent.
    pub fn finish(mut self, policy_id: String, proposal: &DynamicPolicy) -> Result<(DynamicPolicy, IncumbentTrace)> {
        if self.used == 0 {
            return Err(DacError::Argument("solver finished without consuming any budget".into()));
        }
        self.checkpoint(policy_id, proposal)?;
        let (policy, _) = self.incumbent.expect("at least one checkpoint");
        Ok((policy, self.trace))
    }
}
