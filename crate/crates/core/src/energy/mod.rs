//! Transport-growth energy and the Tikhonov objective.

mod functional;
mod narrow;
mod objective;
mod params;
mod psi;

pub use functional::{b_delta_dual_lower_bound, b_delta_envelope, b_delta_primal, mass_norm};
pub use narrow::{check_narrow_continuity_bounds, EnergyEvaluation, NarrowReport, TestField};
pub use objective::{
    data_misfit, data_residual, objective_j, objective_terms, objective_terms_relaxed,
    ObjectiveTerms, FEASIBILITY_TOL,
};
pub use params::{Delta, EnergyParams};
pub use psi::{
    in_k_delta, project_k_delta, project_k_delta_full, prox_psi, psi_delta, psi_envelope,
    KProjection, PsiValue,
};
