//! Brute-force verification: solve the reformulated problem exhaustively,
//! interpret its optimal solutions back and check each against the source
//! problem's exact optimal set.

use dac_core::{derive_seed, DacError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate::GeneratorConfig;
use crate::problem::{MicroProblem, ProblemKind};
use crate::reductions::{all_reductions, Reduction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass {
        /// Size of the target problem's optimal set.
        optimal_target_solutions: usize,
        /// How many of them were interpreted and checked.
        checked: usize,
    },
    Counterexample {
        target_solution: String,
        interpreted: String,
        detail: String,
    },
    NotApplicable {
        reason: String,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

pub fn verify_reduction(reduction: &Reduction, micro: &MicroProblem) -> Result<Verdict> {
    if micro.kind() != reduction.source {
        return Err(DacError::Argument(format!(
            "reduction `{}` takes a {:?} problem, got {:?}",
            reduction.id,
            reduction.source,
            micro.kind()
        )));
    }
    micro.validate()?;
    if let Err(reason) = reduction.check_preconditions(micro) {
        return Ok(Verdict::NotApplicable { reason });
    }
    let target = reduction.formulate(micro)?;
    target.validate()?;
    let (optimal, total) = target.optimal_solutions()?;
    for sol in &optimal {
        let back = reduction.interpret(micro, sol)?;
        let verdict = micro.is_optimal(&back)?;
        if !verdict.optimal {
            return Ok(Verdict::Counterexample {
                target_solution: format!("{sol:?}"),
                interpreted: format!("{back:?}"),
                detail: verdict.detail,
            });
        }
    }
    Ok(Verdict::Pass {
        optimal_target_solutions: total,
        checked: optimal.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case: usize,
    pub case_seed: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reduction: String,
    pub source: ProblemKind,
    pub target: ProblemKind,
    pub seed: u64,
    pub cases: usize,
    pub passed: usize,
    pub counterexamples: usize,
    pub not_applicable: usize,
    /// Optimal target solutions interpreted across all cases.
    pub solutions_checked: usize,
    /// The first few cases that did not pass.
    pub failures: Vec<CaseFailure>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.passed == self.cases
    }
}

const REPORTED_FAILURES: usize = 5;

/// Verifies `reduction` on `cases` generated problems; case `k` is generated
/// from `derive_seed(seed, [k])`, so the suite is reproducible and parallel.
pub fn verify_suite(reduction: &Reduction, cfg: &GeneratorConfig, seed: u64, cases: usize) -> Result<SuiteReport> {
    let verdicts: Vec<(u64, Verdict)> = (0..cases)
        .into_par_iter()
        .map(|k| {
            let case_seed = derive_seed(seed, &[k as u64]);
            let micro = reduction.generate(cfg, &mut ChaCha8Rng::seed_from_u64(case_seed));
            verify_reduction(reduction, &micro).map(|v| (case_seed, v))
        })
        .collect::<Result<_>>()?;
    let mut report = SuiteReport {
        reduction: reduction.id.to_string(),
        source: reduction.source,
        target: reduction.target,
        seed,
        cases,
        passed: 0,
        counterexamples: 0,
        not_applicable: 0,
        solutions_checked: 0,
        failures: Vec::new(),
    };
    for (case, (case_seed, verdict)) in verdicts.into_iter().enumerate() {
        match &verdict {
            Verdict::Pass { checked, .. } => {
                report.passed += 1;
                report.solutions_checked += checked;
                continue;
            }
            Verdict::Counterexample { .. } => report.counterexamples += 1,
            Verdict::NotApplicable { .. } => report.not_applicable += 1,
        }
        if report.failures.len() < REPORTED_FAILURES {
            report.failures.push(CaseFailure { case, case_seed, verdict });
        }
    }
    Ok(report)
}

/// Runs [`verify_suite`] for every shipped reduction.
pub fn verify_all(cfg: &GeneratorConfig, seed: u64, cases: usize) -> Result<Vec<SuiteReport>> {
    all_reductions().iter().map(|r| verify_suite(r, cfg, seed, cases)).collect()
}
