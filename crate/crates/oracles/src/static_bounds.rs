//! Static bounds over a configuration grid and the Oracle-DAC bound.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dac_core::{Configuration, DacError, DynamicPolicy, Result, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean costs `c(θ, i)` of grid configurations (rows) on instances (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// Row labels: the grid configurations in display form.
    pub grid: Vec<String>,
    pub instances: Vec<String>,
    pub seed_count: usize,
    /// `entries[row][col]`, each the mean over `seed_count` seeds.
    pub entries: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(grid: Vec<String>, instances: Vec<String>, seed_count: usize, entries: Vec<Vec<f64>>) -> Result<Self> {
        if grid.is_empty() || instances.is_empty() {
            return Err(DacError::Argument("cost matrix needs at least one row and one column".into()));
        }
        if entries.len() != grid.len() || entries.iter().any(|r| r.len() != instances.len()) {
            return Err(DacError::Argument("cost matrix entries do not match its headers".into()));
        }
        if entries.iter().flatten().any(|v| v.is_nan()) {
            return Err(DacError::Argument("cost matrix has missing (NaN) entries".into()));
        }
        Ok(Self {
            grid,
            instances,
            seed_count,
            entries,
        })
    }

    pub fn row_mean(&self, row: usize) -> f64 {
        self.entries[row].iter().sum::<f64>() / self.instances.len() as f64
    }

    /// CSV with header `theta,seeds,<instance ids...>` and one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["theta".to_string(), "seeds".to_string()];
        header.extend(self.instances.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, row) in self.grid.iter().zip(&self.entries) {
            let mut rec = vec![label.clone(), self.seed_count.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |e: String| DacError::Config(format!("cost matrix csv: {e}"));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.len() < 3 || &header[0] != "theta" || &header[1] != "seeds" {
            return Err(bad("header must start with theta,seeds".into()));
        }
        let instances: Vec<String> = header.iter().skip(2).map(String::from).collect();
        let mut grid = Vec::new();
        let mut entries = Vec::new();
        let mut seed_count = 0;
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            grid.push(rec[0].to_string());
            seed_count = rec[1].parse().map_err(|e| bad(format!("seeds: {e}")))?;
            let row = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>().map_err(|e| bad(format!("entry `{v}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            entries.push(row);
        }
        Self::new(grid, instances, seed_count, entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&read_file(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub sbs_index: usize,
    pub sbs_theta: String,
    pub sbs_cost: f64,
    pub vbs_cost: f64,
    /// Per instance, the lowest-index grid point attaining the column minimum.
    pub per_instance_best: Vec<usize>,
    pub per_instance_theta: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_dac: Option<f64>,
}

impl OracleReport {
    /// SBS = argmin of row means (ties to the lowest index); VBS = mean of column minima.
    pub fn from_matrix(m: &CostMatrix) -> Self {
        let mut sbs_index = 0;
        let mut sbs_cost = f64::INFINITY;
        for row in 0..m.grid.len() {
            let c = m.row_mean(row);
            if c < sbs_cost {
                sbs_index = row;
                sbs_cost = c;
            }
        }
        let per_instance_best: Vec<usize> = (0..m.instances.len())
            .map(|col| {
                let mut best = 0;
                for row in 1..m.grid.len() {
                    if m.entries[row][col] < m.entries[best][col] {
                        best = row;
                    }
                }
                best
            })
            .collect();
        let vbs_cost = per_instance_best
            .iter()
            .enumerate()
            .map(|(col, &row)| m.entries[row][col])
            .sum::<f64>()
            / m.instances.len() as f64;
        Self {
            sbs_index,
            sbs_theta: m.grid[sbs_index].clone(),
            sbs_cost,
            vbs_cost,
            per_instance_theta: per_instance_best.iter().map(|&r| m.grid[r].clone()).collect(),
            per_instance_best,
            oracle_dac: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DacError::Config(format!("oracle report: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| DacError::Config(format!("writing {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DacError::Config(format!("reading {}: {e}", path.display())))
}

/// Evaluates every grid configuration as a constant policy on every instance
/// and seed. Seeds are averaged per instance before any minimum is taken.
pub fn static_grid_bounds(
    scenario: &dyn Scenario,
    grid: &[Configuration],
    seeds: &[u64],
) -> Result<(CostMatrix, OracleReport)> {
    if grid.is_empty() || seeds.is_empty() {
        return Err(DacError::Argument("static bounds need a non-empty grid and seed list".into()));
    }
    let names = scenario.observation_schema().names().to_vec();
    let policies = grid
        .iter()
        .map(|theta| DynamicPolicy::constant(scenario.config_space(), names.clone(), theta))
        .collect::<Result<Vec<_>>>()?;
    let n_inst = scenario.num_instances();
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..n_inst).map(move |i| (g, i)))
        .collect();
    let means = cells
        .par_iter()
        .map(|&(g, i)| {
            let mut total = 0.0;
            for &s in seeds {
                total += scenario.evaluate(&policies[g], i, s)?.cost;
            }
            Ok(total / seeds.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let entries = means.chunks(n_inst).map(|c| c.to_vec()).collect();
    let matrix = CostMatrix::new(
        grid.iter().map(|c| c.to_string()).collect(),
        scenario.instance_ids(),
        seeds.len(),
        entries,
    )?;
    let report = OracleReport::from_matrix(&matrix);
    Ok((matrix, report))
}

/// One measured cost of one policy on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub policy_id: String,
    pub instance_id: String,
    pub cost: f64,
}

/// Mean over `instances` of the per-instance minimum over evaluated policies.
/// A policy measured several times on an instance contributes its mean there.
pub fn oracle_dac(records: &[CostRecord], instances: &[String]) -> Result<f64> {
    if instances.is_empty() {
        return Err(DacError::Argument("oracle-DAC needs at least one instance".into()));
    }
    let mut sums: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = sums.entry((r.instance_id.as_str(), r.policy_id.as_str())).or_insert((0.0, 0));
        e.0 += r.cost;
        e.1 += 1;
    }
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for ((inst, _), (sum, count)) in &sums {
        let mean = sum / *count as f64;
        let b = best.entry(inst).or_insert(f64::INFINITY);
        if mean < *b {
            *b = mean;
        }
    }
    let mut total = 0.0;
    for id in instances {
        match best.get(id.as_str()) {
            Some(v) => total += v,
            None => {
                return Err(DacError::Argument(format!(
                    "oracle-DAC coverage: instance `{id}` has no records"
                )))
            }
        }
    }
    Ok(total / instances.len() as f64)
}
