//! Experiment orchestration: a JSON config names a scenario, a solver and a
//! budget; the harness runs independent seeded repetitions in parallel,
//! streams every evaluation to disk, and aggregates anytime curves.

pub mod config;
pub mod oracle;
pub mod plot;
pub mod run;
pub mod scenario;

pub use config::{ExperimentConfig, FaultInjection, OracleSpec, SCHEMA_VERSION};
pub use oracle::{oracle_seeds, run_oracle, ExactOptimum, OracleFiles};
pub use plot::{aggregate, plot_data, PlotData, ReferenceLine, Series};
pub use run::{
    read_records, read_trace, repetition_seed, run_experiment, EvaluationRecord, ExperimentOutcome, Manifest,
    RepetitionEntry, RepetitionStatus, RunOptions,
};
pub use scenario::{PolicyChoice, ScenarioSpec, BENCHMARK_IDS};
