//! Experiment configuration: one JSON document drives a whole experiment.

use std::path::Path;

use dac_core::{DacError, Result};
use dac_solvers::{SolverBudget, SolverSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::ScenarioSpec;

pub const SCHEMA_VERSION: u32 = 1;

fn default_repetitions() -> usize {
    5
}

fn default_eval_seeds() -> usize {
    1
}

fn default_points() -> usize {
    16
}

fn default_true() -> bool {
    true
}

/// Static-grid and exact oracles computed alongside the solver runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Grid points per real parameter; categorical and integer parameters are enumerated.
    #[serde(default = "default_points")]
    pub points_per_real: usize,
    /// Evaluation seeds per (grid point, instance).
    #[serde(default = "default_eval_seeds")]
    pub seeds: usize,
    /// Solve the scenario exactly when it has a finite tabulation.
    #[serde(default = "default_true")]
    pub value_iteration: bool,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            points_per_real: default_points(),
            seeds: default_eval_seeds(),
            value_iteration: true,
        }
    }
}

/// Test hook: make one repetition panic after it has emitted some records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultInjection {
    pub panic_in_repetition: usize,
    #[serde(default)]
    pub after_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub scenario: ScenarioSpec,
    pub solver: SolverSpec,
    /// Target-algorithm episodes per repetition.
    pub budget: u64,
    pub checkpoint_every: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub master_seed: u64,
    /// Seeds per instance in the fixed incumbent-evaluation block.
    #[serde(default = "default_eval_seeds")]
    pub eval_seeds: usize,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_injection: Option<FaultInjection>,
}

impl ExperimentConfig {
    /// Parses and validates; every failure is a [`DacError::Config`] naming the field.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| DacError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DacError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(DacError::Config(format!("{name}: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return field("schema_version", &format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version));
        }
        if self.repetitions == 0 {
            return field("repetitions", "must be at least 1");
        }
        if self.eval_seeds == 0 {
            return field("eval_seeds", "must be at least 1");
        }
        if let Err(e) = self.solver_budget() {
            return field("budget", &e.to_string());
        }
        if let Some(o) = &self.oracle {
            if o.points_per_real == 0 || o.seeds == 0 {
                return field("oracle", "points_per_real and seeds must be at least 1");
            }
        }
        Ok(())
    }

    pub fn solver_budget(&self) -> Result<SolverBudget> {
        SolverBudget::new(self.budget, self.checkpoint_every)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}-{}", self.scenario.benchmark(), self.solver.id()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_string(self).expect("config serializes").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
