//! Seeded random fields for randomized property checks.

use ndarray::{Array3, Array4};
use rand::Rng;

use crate::grid::{CenteredTriple, Grid, StaggeredTriple};
use crate::scalar::Real;

fn uniform<T: Real, R: Rng>(rng: &mut R, lo: f64, hi: f64) -> T {
    T::lit(rng.random_range(lo..hi))
}

/// Uniform `[-1, 1)` entries with zero boundary faces.
pub fn random_staggered<T: Real, R: Rng>(g: &Grid<T>, rng: &mut R) -> StaggeredTriple<T> {
    let mut u = StaggeredTriple {
        rho: Array3::from_shape_fn(g.rho_shape(), |_| uniform(rng, -1.0, 1.0)),
        mx: Array3::from_shape_fn(g.mx_shape(), |_| uniform(rng, -1.0, 1.0)),
        my: Array3::from_shape_fn(g.my_shape(), |_| uniform(rng, -1.0, 1.0)),
        mu: Array3::from_shape_fn(g.cell_shape(), |_| uniform(rng, -1.0, 1.0)),
    };
    u.zero_boundary();
    u
}

pub fn random_centered<T: Real, R: Rng>(g: &Grid<T>, rng: &mut R) -> CenteredTriple<T> {
    CenteredTriple {
        rho: Array3::from_shape_fn(g.cell_shape(), |_| uniform(rng, -1.0, 1.0)),
        m: Array4::from_shape_fn((g.nt, g.nx, g.ny, 2), |_| uniform(rng, -1.0, 1.0)),
        mu: Array3::from_shape_fn(g.cell_shape(), |_| uniform(rng, -1.0, 1.0)),
    }
}

/// A triple satisfying the discrete continuity equation up to rounding,
/// built by marching `rho` forward in time from random momenta and sources.
/// With `with_source = false` the source is identically zero.
pub fn random_feasible<T: Real, R: Rng>(g: &Grid<T>, with_source: bool, rng: &mut R) -> StaggeredTriple<T> {
    let mut u = random_staggered(g, rng);
    if !with_source {
        u.mu.fill(T::zero());
    }
    let (dt, dx, dy) = (g.dt(), g.dx(), g.dy());
    for k in 0..g.nt {
        for i in 0..g.nx {
            for j in 0..g.ny {
                let div = (u.mx[[k, i + 1, j]] - u.mx[[k, i, j]]) / dx
                    + (u.my[[k, i, j + 1]] - u.my[[k, i, j]]) / dy;
                u.rho[[k + 1, i, j]] = u.rho[[k, i, j]] + dt * (u.mu[[k, i, j]] - div);
            }
        }
    }
    u
}

/// Feasible triple whose centered density is strictly positive, so that
/// the transport energy is finite: a positive static background plus a small
/// random feasible perturbation.
pub fn random_positive_feasible<T: Real, R: Rng>(g: &Grid<T>, rng: &mut R) -> StaggeredTriple<T> {
    let mut u = random_feasible(g, true, rng);
    let scale = T::lit(0.1) / (T::one() + u.max_abs());
    u.scale(scale);
    let floor = T::lit(rng.random_range(1.0..2.0));
    u.rho.mapv_inplace(|v| v + floor);
    u
}
