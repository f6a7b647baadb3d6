//! Primal-dual minimization of the discrete functional and the experiment
//! drivers for stability and vanishing noise.

mod config;
mod pdhg;
mod study;

pub use config::{DataFidelity, SolverConfig};
pub use pdhg::{
    estimate_op_norm, pdhg_solve, primal_dual_gap, PdhgState, SolveFailure, SolverOutput, SolverTrace, StopReason,
    TraceRow, DENSITY_FLOOR, LIFT_TOL,
};
pub use study::{
    run_stability_study, run_vanishing_noise_study, validate_schedule, ScheduleEntry, StabilityReport, StabilityRow,
    VanishingReport, VanishingRow,
};
