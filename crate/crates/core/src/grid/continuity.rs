use ndarray::{Array3, ArrayView2};

use super::{Grid, StaggeredTriple};
use crate::error::{check_shape, Result};
use crate::scalar::Real;

/// `A u = (rho[k+1] - rho[k])/dt + div_h m[k] - mu[k]` on every space-time cell.
///
/// The face divergence reads the boundary faces as stored; for triples that
/// honor the no-flux invariant they contribute nothing.
pub fn continuity_operator<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>) -> Array3<T> {
    let (inv_dt, inv_dx, inv_dy) = (g.dt().recip(), g.dx().recip(), g.dy().recip());
    Array3::from_shape_fn(g.cell_shape(), |(k, i, j)| {
        (u.rho[[k + 1, i, j]] - u.rho[[k, i, j]]) * inv_dt
            + (u.mx[[k, i + 1, j]] - u.mx[[k, i, j]]) * inv_dx
            + (u.my[[k, i, j + 1]] - u.my[[k, i, j]]) * inv_dy
            - u.mu[[k, i, j]]
    })
}

/// Adjoint of [`continuity_operator`] restricted to triples with zero
/// boundary faces. The source block is `-r`, or absent when `with_source`
/// is false (growth forbidden).
pub fn continuity_adjoint<T: Real>(r: &Array3<T>, g: &Grid<T>, with_source: bool) -> StaggeredTriple<T> {
    let (inv_dt, inv_dx, inv_dy) = (g.dt().recip(), g.dx().recip(), g.dy().recip());
    let mut u = StaggeredTriple::zeros(g);
    for k in 0..g.nt {
        for i in 0..g.nx {
            for j in 0..g.ny {
                let v = r[[k, i, j]];
                u.rho[[k + 1, i, j]] += v * inv_dt;
                u.rho[[k, i, j]] -= v * inv_dt;
                u.mx[[k, i + 1, j]] += v * inv_dx;
                u.mx[[k, i, j]] -= v * inv_dx;
                u.my[[k, i, j + 1]] += v * inv_dy;
                u.my[[k, i, j]] -= v * inv_dy;
            }
        }
    }
    if with_source {
        u.mu.zip_mut_with(r, |d, &v| *d = -v);
    }
    u.zero_boundary();
    u
}

/// Residual of the discrete continuity equation; identically zero exactly
/// when `u` is a discrete measure solution.
pub fn divergence_residual<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>) -> Result<Array3<T>> {
    u.conforms(g)?;
    Ok(continuity_operator(u, g))
}

/// `||A u||_2 / (1 + ||u||_2)`, the feasibility measure used throughout.
pub fn relative_residual<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>) -> Result<T> {
    let r = divergence_residual(u, g)?;
    let rn = r.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    Ok(rn / (T::one() + u.norm()))
}

/// Total mass `sum rho * dx * dy` of one density slice.
pub fn total_mass<T: Real>(rho_slice: ArrayView2<'_, T>, g: &Grid<T>) -> Result<T> {
    check_shape("density slice", &g.slice_shape(), rho_slice.shape())?;
    Ok(rho_slice.iter().fold(T::zero(), |a, &v| a + v) * g.cell_area())
}

/// Masses of every time node of `rho`.
pub fn node_masses<T: Real>(rho: &Array3<T>, g: &Grid<T>) -> Vec<T> {
    rho.outer_iter()
        .map(|s| s.iter().fold(T::zero(), |a, &v| a + v) * g.cell_area())
        .collect()
}
