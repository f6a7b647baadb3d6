//! Mass and Hölder-1/2 bounds for curves of measures with finite energy.
//!
//! For a positive curve solving the continuity equation with
//! `E = int int (|v|^2 + |g|^2) d rho_t dt`, the node masses satisfy
//! `M <= 4 (m + E)` and for every `C^1` test function
//! `|int phi d(rho_t - rho_s)| <= |phi|_{C^1} sqrt(2 C E) |t - s|^{1/2}`
//! with `C = 4 (m + E)`.

use ndarray::{Array2, Axis};

use super::functional::{b_delta_envelope, b_delta_primal};
use super::objective::FEASIBILITY_TOL;
use super::params::Delta;
use crate::error::{check_shape, Error, Result};
use crate::grid::{interp_to_centered, node_masses, relative_residual, Grid, StaggeredTriple};
use crate::scalar::Real;

/// A `C^1` test function sampled at cell centers, with an upper bound on
/// `|phi|_{C^1} = sup |phi| + sup |grad phi|`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField<T> {
    pub values: Array2<T>,
    pub c1_norm: T,
}

impl<T: Real> TestField<T> {
    pub fn new(values: Array2<T>, c1_norm: T) -> Self {
        Self { values, c1_norm }
    }

    pub fn constant(g: &Grid<T>, value: T) -> Self {
        Self {
            values: Array2::from_elem((g.nx, g.ny), value),
            c1_norm: value.abs(),
        }
    }

    /// Sample `phi` at the cell centers; `c1_norm` must bound the true norm.
    pub fn from_fn(g: &Grid<T>, phi: impl Fn(T, T) -> T, c1_norm: T) -> Self {
        Self {
            values: Array2::from_shape_fn((g.nx, g.ny), |(i, j)| phi(g.x_center(i), g.y_center(j))),
            c1_norm,
        }
    }
}

/// How the energy `E` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyEvaluation<T> {
    /// Exact perspective formula; `+inf` on any negative density.
    Exact,
    /// Moreau envelope with the given parameter, for approximate minimizers
    /// whose density is nonnegative only up to solver tolerance.
    Envelope(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrowReport<T> {
    /// Smallest node mass `m`.
    pub min_mass: T,
    /// Largest node mass `M`.
    pub max_mass: T,
    /// `E = sum (|m_c|^2 + mu_c^2) / rho_c * cell_volume`.
    pub energy: T,
    /// `C = 4 (m + E)`.
    pub bound_constant: T,
    /// `M <= C + tol`.
    pub mass_bound_holds: bool,
    /// The Hölder inequality holds for every test field and node pair.
    pub holder_holds: bool,
    /// Largest `lhs - rhs` of the Hölder inequality over fields and pairs.
    pub worst_holder_excess: T,
    /// Largest left-hand side `|int phi d(rho_t - rho_s)|`.
    pub max_variation: T,
}

/// Evaluate both bounds on every pair of time nodes `s < t`.
pub fn check_narrow_continuity_bounds<T: Real>(
    u: &StaggeredTriple<T>,
    g: &Grid<T>,
    fields: &[TestField<T>],
    evaluation: EnergyEvaluation<T>,
    tol: T,
) -> Result<NarrowReport<T>> {
    u.conforms(g)?;
    let residual = relative_residual(u, g)?;
    if residual > T::lit(FEASIBILITY_TOL) {
        return Err(Error::Infeasible {
            residual: residual.as_f64(),
        });
    }
    for f in fields {
        check_shape("test field", &g.slice_shape(), f.values.shape())?;
    }
    // (|m|^2 + mu^2) / rho is twice the integrand for delta = 1
    let c = interp_to_centered(u, g)?;
    let one = Delta::Finite(T::one());
    let half_energy = match evaluation {
        EnergyEvaluation::Exact => b_delta_primal(&c, g, one)?,
        EnergyEvaluation::Envelope(eps) => b_delta_envelope(&c, g, one, eps)?,
    };
    let energy = T::lit(2.0) * half_energy;
    let masses = node_masses(&u.rho, g);
    let min_mass = masses.iter().copied().fold(T::infinity(), T::min);
    let max_mass = masses.iter().copied().fold(T::neg_infinity(), T::max);
    let bound_constant = T::lit(4.0) * (min_mass + energy);
    let mass_bound_holds = max_mass <= bound_constant + tol;

    let area = g.cell_area();
    let rate = (T::lit(2.0) * bound_constant * energy).sqrt();
    let mut worst = T::neg_infinity();
    let mut max_variation = T::zero();
    for f in fields {
        let integrals: Vec<T> = u
            .rho
            .axis_iter(Axis(0))
            .map(|slice| (&slice * &f.values).sum() * area)
            .collect();
        for s in 0..=g.nt {
            for t in s + 1..=g.nt {
                let lhs = (integrals[t] - integrals[s]).abs();
                let gap = (g.t_node(t) - g.t_node(s)).sqrt();
                let rhs = f.c1_norm * rate * gap;
                max_variation = max_variation.max(lhs);
                worst = worst.max(lhs - rhs);
            }
        }
    }
    let holder_holds = !(worst > tol);
    Ok(NarrowReport {
        min_mass,
        max_mass,
        energy,
        bound_constant,
        mass_bound_holds,
        holder_holds,
        worst_holder_excess: worst,
        max_variation,
    })
}
