//! Anytime curves: repetitions aggregated into mean ± std of the incumbent
//! cost per evaluation count, plus horizontal reference lines.

use std::path::{Path, PathBuf};

use dac_core::{DacError, Result};
use dac_oracles::OracleReport;
use dac_solvers::TracePoint;
use serde::{Deserialize, Serialize};

use crate::oracle::ExactOptimum;
use crate::run::{read_trace, Manifest, RepetitionStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub repetitions: usize,
    pub x: Vec<u64>,
    pub y: Vec<f64>,
    /// Sample standard deviation across repetitions (0 for a single one).
    pub y_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub label: String,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub series: Vec<Series>,
    pub references: Vec<ReferenceLine>,
    /// Set when some input run was incomplete; its completed repetitions are still used.
    pub partial: bool,
    pub warnings: Vec<String>,
}

/// Incumbent cost of a trace at evaluation count `x`: the last point at or before it.
fn value_at(points: &[TracePoint], x: u64) -> Option<f64> {
    points.iter().take_while(|p| p.evaluations_used <= x).last().map(|p| p.mean_cost)
}

/// Mean and sample standard deviation across repetitions at every evaluation
/// count any trace reports, starting once every trace has its first point.
pub fn aggregate(label: &str, traces: &[Vec<TracePoint>]) -> Result<Series> {
    if traces.is_empty() || traces.iter().any(Vec::is_empty) {
        return Err(DacError::Argument(format!("series `{label}` needs non-empty traces")));
    }
    let start = traces.iter().map(|t| t[0].evaluations_used).max().expect("non-empty");
    let mut xs: Vec<u64> = traces.iter().flatten().map(|p| p.evaluations_used).filter(|&x| x >= start).collect();
    xs.sort_unstable();
    xs.dedup();
    let n = traces.len() as f64;
    let mut series = Series {
        label: label.to_string(),
        repetitions: traces.len(),
        x: Vec::with_capacity(xs.len()),
        y: Vec::with_capacity(xs.len()),
        y_std: Vec::with_capacity(xs.len()),
    };
    for x in xs {
        let values: Vec<f64> = traces.iter().map(|t| value_at(t, x).expect("x >= every first point")).collect();
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        series.x.push(x);
        series.y.push(mean);
        series.y_std.push(var.sqrt());
    }
    Ok(series)
}

fn reference_lines(prefix: &str, report: &OracleReport, exact: Option<&ExactOptimum>) -> Vec<ReferenceLine> {
    let mut lines = vec![
        ReferenceLine {
            label: format!("{prefix}SBS"),
            y: report.sbs_cost,
        },
        ReferenceLine {
            label: format!("{prefix}VBS"),
            y: report.vbs_cost,
        },
    ];
    if let Some(o) = report.oracle_dac {
        lines.push(ReferenceLine {
            label: format!("{prefix}Oracle-DAC"),
            y: o,
        });
    }
    if let Some(e) = exact {
        lines.push(ReferenceLine {
            label: format!("{prefix}Optimal"),
            y: e.optimal_cost,
        });
    }
    lines
}

/// Aggregates experiment directories into one plot. Oracle files referenced
/// by a manifest are attached automatically; `extra_reports` adds more.
pub fn plot_data(run_dirs: &[PathBuf], extra_reports: &[PathBuf]) -> Result<PlotData> {
    let mut plot = PlotData {
        series: Vec::new(),
        references: Vec::new(),
        partial: false,
        warnings: Vec::new(),
    };
    let many = run_dirs.len() > 1;
    for dir in run_dirs {
        let manifest = Manifest::load(dir)?;
        if !manifest.complete {
            plot.partial = true;
            plot.warnings.push(format!("{}: manifest is incomplete; aggregating completed repetitions only", dir.display()));
        }
        let mut traces = Vec::new();
        for rep in manifest.repetitions.iter().filter(|r| r.status == RepetitionStatus::Complete) {
            traces.push(read_trace(&dir.join(&rep.dir).join("trace.jsonl"))?);
        }
        if traces.is_empty() {
            plot.warnings.push(format!("{}: no completed repetitions", dir.display()));
            continue;
        }
        plot.series.push(aggregate(&manifest.experiment, &traces)?);
        if let Some(files) = &manifest.oracle {
            let report = OracleReport::load(&dir.join(&files.report))?;
            let exact = files.exact_optimum.as_ref().map(|p| ExactOptimum::load(&dir.join(p))).transpose()?;
            let prefix = if many { format!("{} ", manifest.experiment) } else { String::new() };
            plot.references.extend(reference_lines(&prefix, &report, exact.as_ref()));
        }
    }
    for path in extra_reports {
        let report = OracleReport::load(path)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        plot.references.extend(reference_lines(&format!("{stem} "), &report, None));
    }
    if plot.series.is_empty() {
        return Err(DacError::Config("plot data needs at least one run with a completed repetition".into()));
    }
    Ok(plot)
}

impl PlotData {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plot data serializes") + "\n"
    }

    /// Long format: `kind,label,x,y,y_std`; reference rows leave `x` and `y_std` empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "label", "x", "y", "y_std"]).expect("in-memory write");
        for s in &self.series {
            for k in 0..s.x.len() {
                w.write_record(["series", &s.label, &s.x[k].to_string(), &s.y[k].to_string(), &s.y_std[k].to_string()])
                    .expect("in-memory write");
            }
        }
        for r in &self.references {
            w.write_record(["reference", &r.label, "", &r.y.to_string(), ""]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| DacError::Config(format!("{}: {e}", dir.display())))?;
        dac_solvers::trace::write_atomic(&dir.join("plot_data.json"), &self.to_json())?;
        dac_solvers::trace::write_atomic(&dir.join("plot_data.csv"), &self.to_csv())
    }
}
