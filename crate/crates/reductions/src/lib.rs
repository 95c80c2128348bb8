//! Executable reductions between configuration problems, checked by brute force
//! on micro problems small enough to solve exhaustively.
//!
//! A reduction pairs `formulate` (source instance → target instance) with
//! `interpret` (target solution → source solution). [`verify_reduction`]
//! solves the target exactly, interprets its optimal solutions and checks that
//! each lands in the source's exact optimal set.

pub mod generate;
pub mod problem;
pub mod reductions;
pub mod scenario;
pub mod verify;

pub use generate::GeneratorConfig;
pub use problem::{
    AcProblem, CmdpProblem, Cost, DacCost, DacPolicy, DacProblem, MdpProblem, Membership, MicroProblem,
    NoisyBboProblem, PiacProblem, PolicySpace, ProblemKind, Schedule, ScheduleKey, SchedulingProblem,
    SelectionProblem, Solution,
};
pub use reductions::{all_reductions, constant_dac_embedding, reduction_by_id, Reduction};
pub use scenario::MicroDac;
pub use verify::{verify_all, verify_reduction, verify_suite, CaseFailure, SuiteReport, Verdict};
