//! Experiment execution: independent repetitions, streamed records, a manifest.
//!
//! Layout under the output directory:
//!
//! ```text
//! config.json                canonical copy of the config
//! manifest.json              written first as incomplete, rewritten at the end
//! rep-<r>/records.csv        every evaluation, in the solver's logical order
//! rep-<r>/trace.jsonl        incumbent trace, one point per line
//! rep-<r>/policy.json        final incumbent
//! rep-<r>/policies/<id>.json every checkpointed incumbent
//! oracle/                    static-grid bounds and exact optimum, when configured
//! ```
//!
//! Nothing time- or thread-dependent is written, so outputs are byte-identical
//! for any worker count.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use dac_core::{derive_seed, DacError, DynamicPolicy, Result, Scenario};
use dac_oracles::CostRecord;
use dac_solvers::trace::write_atomic;
use dac_solvers::{default_eval_seeds, EvaluationEvent, EvaluationKind, IncumbentTrace, SolverContext, SolverObserver, TracePoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::oracle::{run_oracle, OracleFiles};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub run_id: String,
    pub solver_id: String,
    pub policy_id: String,
    pub instance_id: String,
    pub seed: u64,
    pub evaluations_used_at_emit: u64,
    pub cost: f64,
    /// `training` episodes are charged to the budget; `checkpoint` re-evaluations are not.
    pub kind: EvaluationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepetitionStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionEntry {
    pub index: usize,
    pub run_id: String,
    pub seed: u64,
    /// Directory relative to the experiment root.
    pub dir: String,
    pub status: RepetitionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluations_used: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub benchmark: String,
    pub solver_id: String,
    pub master_seed: u64,
    pub budget: u64,
    /// True once every repetition and the oracle finished successfully.
    pub complete: bool,
    pub repetitions: Vec<RepetitionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_error: Option<String>,
}

impl Manifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let text = fs::read_to_string(&path).map_err(|e| DacError::Config(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| DacError::Config(format!("{}: {e}", path.display())))
    }

    fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(Self::FILE), &(serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Rayon threads; the global pool when absent.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    /// Per repetition; `None` where the repetition failed.
    pub traces: Vec<Option<IncumbentTrace>>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DacError {
    DacError::Config(format!("{}: {e}", path.display()))
}

/// Seed of repetition `r`.
pub fn repetition_seed(master_seed: u64, r: usize) -> u64 {
    derive_seed(master_seed, &[r as u64])
}

pub fn read_records(path: &Path) -> Result<Vec<EvaluationRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| io_err(path, e)))
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<TracePoint>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| io_err(path, e)))
        .collect()
}

/// Streams records and checkpoints of one repetition to disk.
struct RepetitionSink {
    records: csv::Writer<BufWriter<File>>,
    dir: PathBuf,
    run_id: String,
    solver_id: String,
    emitted: usize,
    panic_after: Option<usize>,
}

impl SolverObserver for RepetitionSink {
    fn on_evaluation(&mut self, e: &EvaluationEvent) -> Result<()> {
        if !e.cost.is_finite() {
            return Err(DacError::Execution {
                step: 0,
                message: format!("policy {} produced non-finite cost {} on {}", e.policy_id, e.cost, e.instance_id),
            });
        }
        self.records
            .serialize(EvaluationRecord {
                run_id: self.run_id.clone(),
                solver_id: self.solver_id.clone(),
                policy_id: e.policy_id.clone(),
                instance_id: e.instance_id.clone(),
                seed: e.seed,
                evaluations_used_at_emit: e.evaluations_used,
                cost: e.cost,
                kind: e.kind,
            })
            .map_err(|err| io_err(&self.dir.join("records.csv"), err))?;
        self.emitted += 1;
        if self.panic_after.is_some_and(|n| self.emitted > n) {
            panic!("injected fault in {}", self.run_id);
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, point: &TracePoint, policy: &DynamicPolicy) -> Result<()> {
        let file = self.dir.join("policies").join(format!("{}.json", point.policy_id));
        if !file.exists() {
            write_atomic(&file, &policy.to_json())?;
        }
        let trace = self.dir.join("trace.jsonl");
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&trace).map_err(|e| io_err(&trace, e))?;
        let line = serde_json::to_string(point).expect("trace point serializes") + "\n";
        f.write_all(line.as_bytes()).map_err(|e| io_err(&trace, e))
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "repetition panicked".into())
}

fn run_repetition(
    config: &ExperimentConfig,
    scenario: &dyn Scenario,
    out: &Path,
    r: usize,
) -> (RepetitionEntry, Option<IncumbentTrace>) {
    let seed = repetition_seed(config.master_seed, r);
    let dir_name = format!("rep-{r}");
    let mut entry = RepetitionEntry {
        index: r,
        run_id: format!("{}-rep{r}", config.display_name()),
        seed,
        dir: dir_name.clone(),
        status: RepetitionStatus::Failed,
        error: None,
        final_cost: None,
        evaluations_used: None,
        early_stop: None,
    };
    let dir = out.join(&dir_name);
    let attempt = panic::catch_unwind(AssertUnwindSafe(|| -> Result<IncumbentTrace> {
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        fs::create_dir_all(dir.join("policies")).map_err(|e| io_err(&dir, e))?;
        let records_path = dir.join("records.csv");
        let file = File::create(&records_path).map_err(|e| io_err(&records_path, e))?;
        let mut sink = RepetitionSink {
            records: csv::Writer::from_writer(BufWriter::new(file)),
            dir: dir.clone(),
            run_id: entry.run_id.clone(),
            solver_id: config.solver.id().to_string(),
            emitted: 0,
            panic_after: config
                .fault_injection
                .as_ref()
                .filter(|f| f.panic_in_repetition == r)
                .map(|f| f.after_records),
        };
        let ctx = SolverContext::new(seed, config.solver_budget()?)
            .with_eval_seeds(default_eval_seeds(seed, config.eval_seeds))
            .with_observer(&mut sink);
        let result = config.solver.run(scenario, ctx);
        sink.records.flush().map_err(|e| io_err(&records_path, e))?;
        let (policy, trace) = result?;
        if trace.evaluations_used() > config.budget {
            return Err(DacError::Execution {
                step: 0,
                message: format!("solver used {} episodes of a {} budget", trace.evaluations_used(), config.budget),
            });
        }
        write_atomic(&dir.join("policy.json"), &policy.to_json())?;
        write_atomic(&dir.join("trace.jsonl"), &trace.to_jsonl())?;
        Ok(trace)
    }));
    match attempt {
        Ok(Ok(trace)) => {
            entry.status = RepetitionStatus::Complete;
            entry.final_cost = trace.final_cost();
            entry.evaluations_used = Some(trace.evaluations_used());
            entry.early_stop = trace.early_stop.clone();
            (entry, Some(trace))
        }
        Ok(Err(e)) => {
            entry.error = Some(e.to_string());
            (entry, None)
        }
        Err(payload) => {
            entry.error = Some(format!("panic: {}", panic_message(payload.as_ref())));
            (entry, None)
        }
    }
}

/// Runs every repetition of `config`, then the oracle if one is configured.
///
/// A failing repetition is recorded in the manifest and does not stop its
/// siblings; errors that prevent the experiment from starting are returned.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, options: &RunOptions) -> Result<ExperimentOutcome> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_atomic(&out.join("config.json"), &(config.to_json() + "\n"))?;
    let mut manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: config.display_name(),
        config_hash: config.hash(),
        benchmark: config.scenario.benchmark().to_string(),
        solver_id: config.solver.id().to_string(),
        master_seed: config.master_seed,
        budget: config.budget,
        complete: false,
        repetitions: Vec::new(),
        oracle: None,
        oracle_error: None,
    };
    manifest.save(out)?;

    let scenario = config.scenario.build()?;
    let work = || -> Result<Vec<(RepetitionEntry, Option<IncumbentTrace>)>> {
        let results = (0..config.repetitions)
            .into_par_iter()
            .map(|r| run_repetition(config, scenario.as_ref(), out, r))
            .collect();
        Ok(results)
    };
    let results = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| DacError::Config(format!("worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let (entries, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    manifest.repetitions = entries;

    if let Some(spec) = &config.oracle {
        let mut evaluated = Vec::new();
        for rep in manifest.repetitions.iter().filter(|e| e.status == RepetitionStatus::Complete) {
            for rec in read_records(&out.join(&rep.dir).join("records.csv"))? {
                evaluated.push(CostRecord {
                    policy_id: format!("{}/{}", rep.run_id, rec.policy_id),
                    instance_id: rec.instance_id,
                    cost: rec.cost,
                });
            }
        }
        let oracle_run = || run_oracle(&config.scenario, scenario.as_ref(), spec, config.master_seed, &evaluated, &out.join("oracle"));
        let oracle = match options.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| DacError::Config(format!("worker pool: {e}")))?
                .install(oracle_run),
            None => oracle_run(),
        };
        match oracle {
            Ok(files) => manifest.oracle = Some(files),
            Err(e) => manifest.oracle_error = Some(e.to_string()),
        }
    }
    manifest.complete = manifest.repetitions.iter().all(|e| e.status == RepetitionStatus::Complete) && manifest.oracle_error.is_none();
    manifest.save(out)?;
    Ok(ExperimentOutcome {
        out_dir: out.to_path_buf(),
        manifest,
        traces,
    })
}
