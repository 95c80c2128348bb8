//! The `dac` command line: list components, run experiments, compute oracle
//! bounds, verify reductions and export plot data.
//!
//! Exit codes: 0 on success, 1 on runtime faults (failed repetitions,
//! reduction counterexamples, I/O), 2 on argument and schema errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dac_core::DacError;
use dac_harness::{
    plot_data, run_experiment, run_oracle, ExperimentConfig, OracleSpec, RepetitionStatus, RunOptions, ScenarioSpec,
    BENCHMARK_IDS,
};
use dac_reductions::{all_reductions, reduction_by_id, verify_suite, GeneratorConfig, ProblemKind, SuiteReport};
use dac_solvers::SOLVER_IDS;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAULT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dac", version, about = "Dynamic algorithm configuration experiments")]
struct Cli {
    /// Master seed; overrides the config's `master_seed` for `run`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List benchmarks, solvers and reductions.
    List,
    /// Run an experiment from a JSON config.
    Run { config: PathBuf },
    /// Static-grid SBS/VBS bounds (and the exact optimum) for a scenario JSON.
    Oracle {
        scenario: PathBuf,
        #[arg(long, default_value_t = 16)]
        points_per_real: usize,
        /// Evaluation seeds per grid point and instance.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        /// Also solve finite benchmarks exactly by value iteration.
        #[arg(long)]
        value_iteration: bool,
    },
    /// Verify reductions on seeded random micro problems.
    ReduceCheck {
        /// A reduction id, or `all`.
        reduction: String,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        /// Verify a deliberately broken interpretation instead.
        #[arg(long)]
        corrupt: bool,
    },
    /// Aggregate experiment directories into plot-ready JSON and CSV.
    PlotData {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Extra oracle reports to draw as reference lines.
        #[arg(long = "oracle")]
        oracles: Vec<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Fault(String),
}

impl From<DacError> for Failure {
    fn from(e: DacError) -> Self {
        match e {
            DacError::Config(_) | DacError::Argument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Fault(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn io(e: std::io::Error) -> Failure {
    Failure::Fault(e.to_string())
}

fn kind_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Ac => "AC",
        ProblemKind::Piac => "PIAC",
        ProblemKind::Dac => "DAC",
        ProblemKind::Mdp => "MDP",
        ProblemKind::Cmdp => "cMDP",
        ProblemKind::Selection => "selection",
        ProblemKind::Scheduling => "scheduling",
        ProblemKind::NoisyBbo => "noisy-BBO",
    }
}

fn list(out: &mut dyn Write) -> Outcome {
    let reductions = all_reductions();
    let width = BENCHMARK_IDS
        .iter()
        .chain(SOLVER_IDS.iter())
        .map(|(id, _)| id.len())
        .chain(reductions.iter().map(|r| r.id.len()))
        .max()
        .unwrap_or(0)
        + 2;
    writeln!(out, "benchmarks:").map_err(io)?;
    for (id, about) in BENCHMARK_IDS {
        writeln!(out, "  {id:<width$}{about}").map_err(io)?;
    }
    writeln!(out, "solvers:").map_err(io)?;
    for (id, about) in SOLVER_IDS {
        writeln!(out, "  {id:<width$}{about}").map_err(io)?;
    }
    writeln!(out, "reductions:").map_err(io)?;
    for r in reductions {
        writeln!(out, "  {:<width$}{} -> {}", r.id, kind_name(r.source), kind_name(r.target)).map_err(io)?;
    }
    Ok(())
}

fn pool(workers: Option<usize>) -> std::result::Result<Option<rayon::ThreadPool>, Failure> {
    workers
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Failure::Fault(format!("worker pool: {e}")))
        })
        .transpose()
}

fn in_pool<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn run(cli: &Cli, path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(config.display_name()));
    let outcome = run_experiment(&config, &dir, &RunOptions { workers: cli.workers })?;
    for rep in &outcome.manifest.repetitions {
        match (rep.status, rep.final_cost) {
            (RepetitionStatus::Complete, Some(cost)) => writeln!(
                out,
                "{}\tseed={}\tevaluations={}\tfinal_cost={cost}",
                rep.run_id,
                rep.seed,
                rep.evaluations_used.unwrap_or(0)
            ),
            _ => writeln!(out, "{}\tseed={}\tfailed: {}", rep.run_id, rep.seed, rep.error.as_deref().unwrap_or("unknown")),
        }
        .map_err(io)?;
    }
    let manifest = dir.join(dac_harness::Manifest::FILE);
    if !outcome.manifest.complete {
        if let Some(e) = &outcome.manifest.oracle_error {
            writeln!(err, "oracle failed: {e}").map_err(io)?;
        }
        return Err(Failure::Fault(format!("experiment incomplete; see {}", manifest.display())));
    }
    writeln!(out, "manifest: {}", manifest.display()).map_err(io)?;
    Ok(())
}

fn oracle(cli: &Cli, path: &Path, spec: OracleSpec, out: &mut dyn Write) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
    let scenario: ScenarioSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if spec.points_per_real == 0 || spec.seeds == 0 {
        return Err(Failure::Usage("--points-per-real and --seeds must be at least 1".into()));
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("oracle"));
    let built = scenario.build()?;
    let pool = pool(cli.workers)?;
    let files = in_pool(&pool, || run_oracle(&scenario, built.as_ref(), &spec, cli.seed.unwrap_or(0), &[], &dir))?;
    let report = dac_oracles::OracleReport::load(&dir.join("report.json"))?;
    writeln!(out, "SBS\t{}\t{}", report.sbs_cost, report.sbs_theta).map_err(io)?;
    writeln!(out, "VBS\t{}", report.vbs_cost).map_err(io)?;
    if let Some(o) = report.oracle_dac {
        writeln!(out, "Oracle-DAC\t{o}").map_err(io)?;
    }
    if files.exact_optimum.is_some() {
        let exact = dac_harness::ExactOptimum::load(&dir.join("exact_optimum.json"))?;
        writeln!(out, "Optimal\t{}", exact.optimal_cost).map_err(io)?;
    }
    writeln!(out, "report: {}", dir.join("report.json").display()).map_err(io)?;
    Ok(())
}

#[derive(Serialize)]
struct ReduceCheckOutput {
    seed: u64,
    cases: usize,
    corrupt: bool,
    all_pass: bool,
    suites: Vec<SuiteReport>,
}

fn reduce_check(cli: &Cli, id: &str, cases: usize, corrupt: bool, out: &mut dyn Write) -> Outcome {
    let selected = if id == "all" {
        all_reductions()
    } else {
        vec![reduction_by_id(id).ok_or_else(|| Failure::Usage(format!("unknown reduction `{id}`; see `dac list`")))?]
    };
    let selected: Vec<_> = selected.into_iter().map(|r| if corrupt { r.corrupted() } else { r }).collect();
    let seed = cli.seed.unwrap_or(0);
    let cfg = GeneratorConfig::default();
    let pool = pool(cli.workers)?;
    let suites = in_pool(&pool, || selected.iter().map(|r| verify_suite(r, &cfg, seed, cases)).collect::<Result<Vec<_>, _>>())?;
    let report = ReduceCheckOutput {
        seed,
        cases,
        corrupt,
        all_pass: suites.iter().all(SuiteReport::all_pass),
        suites,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    writeln!(out, "{json}").map_err(io)?;
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(io)?;
        dac_solvers::trace::write_atomic(&dir.join("reduce_check.json"), &(json + "\n"))?;
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(Failure::Fault("counterexample found".into()))
    }
}

fn plot(cli: &Cli, runs: &[PathBuf], oracles: &[PathBuf], out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let data = plot_data(runs, oracles)?;
    for w in &data.warnings {
        writeln!(err, "warning: {w}").map_err(io)?;
    }
    if let Some(dir) = &cli.out {
        data.save(dir)?;
    }
    write!(out, "{}", data.to_json()).map_err(io)?;
    Ok(())
}

/// Parses `args` (including the program name) and executes; returns the exit code.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match &cli.command {
        Command::List => list(out),
        Command::Run { config } => run(&cli, config, out, err),
        Command::Oracle { scenario, points_per_real, seeds, value_iteration } => {
            let spec = OracleSpec {
                points_per_real: *points_per_real,
                seeds: *seeds,
                value_iteration: *value_iteration,
            };
            oracle(&cli, scenario, spec, out)
        }
        Command::ReduceCheck { reduction, cases, corrupt } => reduce_check(&cli, reduction, *cases, *corrupt, out),
        Command::PlotData { runs, oracles } => plot(&cli, runs, oracles, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Fault(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAULT
        }
    }
}
