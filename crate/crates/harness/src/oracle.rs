//! Reference lines for an experiment: static-grid SBS/VBS, Oracle-DAC over
//! everything evaluated, and the exact optimum where one is computable.

use std::fs;
use std::path::Path;

use dac_core::{derive_seed, DacError, Result, Scenario};
use dac_oracles::{oracle_dac, static_grid_bounds, CostRecord, OracleReport};
use dac_solvers::spec::configuration_grid;
use dac_solvers::trace::write_atomic;
use serde::{Deserialize, Serialize};

use crate::config::OracleSpec;
use crate::scenario::ScenarioSpec;

/// Seed sub-stream for grid evaluations, disjoint from repetition seeds.
const ORACLE_STREAM: u64 = u64::MAX;

/// Paths relative to the experiment root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFiles {
    pub report: String,
    pub cost_matrix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_optimum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactOptimum {
    pub optimal_cost: f64,
    pub per_instance: Vec<f64>,
    pub num_states: usize,
    /// Tabular cells on which instance-optimal actions disagreed.
    pub conflicts: usize,
}

impl ExactOptimum {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DacError::Config(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| DacError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn oracle_seeds(master_seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| derive_seed(master_seed, &[ORACLE_STREAM, k])).collect()
}

/// Evaluates the static grid, fills in Oracle-DAC over `evaluated` plus the
/// grid constants themselves, and solves exactly when possible. Writes
/// `report.json`, `cost_matrix.csv` and `exact_optimum.json` into `dir`.
pub fn run_oracle(
    spec: &ScenarioSpec,
    scenario: &dyn Scenario,
    oracle: &OracleSpec,
    master_seed: u64,
    evaluated: &[CostRecord],
    dir: &Path,
) -> Result<OracleFiles> {
    fs::create_dir_all(dir).map_err(|e| DacError::Config(format!("{}: {e}", dir.display())))?;
    let grid = configuration_grid(scenario.config_space(), oracle.points_per_real)?;
    let (matrix, mut report) = static_grid_bounds(scenario, &grid, &oracle_seeds(master_seed, oracle.seeds))?;
    let mut records = evaluated.to_vec();
    for (g, row) in matrix.entries.iter().enumerate() {
        for (i, &cost) in row.iter().enumerate() {
            records.push(CostRecord {
                policy_id: format!("grid/{}", matrix.grid[g]),
                instance_id: matrix.instances[i].clone(),
                cost,
            });
        }
    }
    report.oracle_dac = Some(oracle_dac(&records, &matrix.instances)?);
    matrix.save(&dir.join("cost_matrix.csv"))?;
    report.save(&dir.join("report.json"))?;
    let prefix = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut files = OracleFiles {
        report: format!("{prefix}/report.json"),
        cost_matrix: format!("{prefix}/cost_matrix.csv"),
        exact_optimum: None,
    };
    if oracle.value_iteration {
        if let Some(vi) = spec.value_iteration()? {
            let exact = ExactOptimum {
                optimal_cost: vi.optimal_cost,
                per_instance: vi.per_instance,
                num_states: vi.num_states,
                conflicts: vi.conflicts,
            };
            write_atomic(&dir.join("exact_optimum.json"), &(serde_json::to_string_pretty(&exact).expect("serializes") + "\n"))?;
            files.exact_optimum = Some(format!("{prefix}/exact_optimum.json"));
        }
    }
    Ok(files)
}

/// Loads a report written by [`run_oracle`] (or the `oracle` command).
pub fn load_report(path: &Path) -> Result<OracleReport> {
    OracleReport::load(path)
}
