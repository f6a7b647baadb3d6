use super::functional::{b_delta_envelope, b_delta_primal, mass_norm};
use super::params::EnergyParams;
use crate::error::Result;
use crate::grid::{interp_to_centered, relative_residual, Grid, StaggeredTriple};
use crate::meas::{ht_norm, FrameOperator, Measurement};
use crate::scalar::Real;
use ndarray::Array3;

/// Relative continuity residual above which a triple is treated as outside
/// the constraint set.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// The three terms of the Tikhonov functional and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms<T> {
    /// `1/2 sum_k dt |K_k rho_k - f_k|^2`.
    pub misfit: T,
    /// Transport-growth energy `B_delta`, unweighted.
    pub energy: T,
    /// `sum |rho_c| * cell_volume`, unweighted.
    pub mass: T,
    /// `misfit + alpha * energy + beta * mass`.
    pub total: T,
}

/// `1/2 sum_k dt |K_k rho_c[k] - f_k|_{H_k}^2` for a centered density.
pub fn data_misfit<T: Real, O: FrameOperator<T> + ?Sized>(
    rho_c: &Array3<T>,
    data: &Measurement<T>,
    op: &O,
    g: &Grid<T>,
) -> Result<T> {
    data.conforms(&op.zero_measurement())?;
    let pred = op.forward(rho_c)?;
    let mut sum = T::zero();
    for (k, (p, f)) in pred.frames.iter().zip(&data.frames).enumerate() {
        let n = ht_norm(&(p - f), op.weights(k));
        sum += n * n;
    }
    Ok(T::lit(0.5) * g.dt() * sum)
}

fn terms_from<T: Real>(misfit: T, energy: T, mass: T, params: &EnergyParams<T>) -> ObjectiveTerms<T> {
    let reg = if energy.is_infinite() {
        T::infinity()
    } else {
        params.alpha * energy
    };
    ObjectiveTerms {
        misfit,
        energy,
        mass,
        total: misfit + reg + params.beta * mass,
    }
}

/// Objective terms of `u`; `total` is `+inf` when `u` violates the continuity
/// equation beyond [`FEASIBILITY_TOL`] or leaves the domain of `B_delta`.
pub fn objective_terms<T: Real, O: FrameOperator<T> + ?Sized>(
    u: &StaggeredTriple<T>,
    data: &Measurement<T>,
    op: &O,
    params: &EnergyParams<T>,
    g: &Grid<T>,
) -> Result<ObjectiveTerms<T>> {
    let c = interp_to_centered(u, g)?;
    let misfit = data_misfit(&c.rho, data, op, g)?;
    let energy = b_delta_primal(&c, g, params.delta)?;
    let mass = mass_norm(&c, g);
    let mut terms = terms_from(misfit, energy, mass, params);
    if relative_residual(u, g)? > T::lit(FEASIBILITY_TOL) {
        terms.total = T::infinity();
    }
    Ok(terms)
}

/// `J(u) = 1/2 sum_k dt |K_k rho_k - f_k|^2 + alpha B_delta + beta |rho|_M`.
pub fn objective_j<T: Real, O: FrameOperator<T> + ?Sized>(
    u: &StaggeredTriple<T>,
    data: &Measurement<T>,
    op: &O,
    params: &EnergyParams<T>,
    g: &Grid<T>,
) -> Result<T> {
    objective_terms(u, data, op, params, g).map(|t| t.total)
}

/// Objective with `B_delta` replaced by its Moreau envelope of parameter
/// `eps` and without the feasibility gate. Finite for every input; equals
/// [`objective_terms`] up to `O(eps)` on feasible triples with positive density.
pub fn objective_terms_relaxed<T: Real, O: FrameOperator<T> + ?Sized>(
    u: &StaggeredTriple<T>,
    data: &Measurement<T>,
    op: &O,
    params: &EnergyParams<T>,
    g: &Grid<T>,
    eps: T,
) -> Result<ObjectiveTerms<T>> {
    let c = interp_to_centered(u, g)?;
    let misfit = data_misfit(&c.rho, data, op, g)?;
    let energy = b_delta_envelope(&c, g, params.delta, eps)?;
    let mass = mass_norm(&c, g);
    Ok(terms_from(misfit, energy, mass, params))
}

/// `L^2(H)` norm of the data residual `K rho_c - f`.
pub fn data_residual<T: Real, O: FrameOperator<T> + ?Sized>(
    rho_c: &Array3<T>,
    data: &Measurement<T>,
    op: &O,
    g: &Grid<T>,
) -> Result<T> {
    Ok((T::lit(2.0) * data_misfit(rho_c, data, op, g)?).sqrt())
}
