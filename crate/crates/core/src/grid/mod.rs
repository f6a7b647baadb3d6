//! Space-time staggered discretization of `(0,1) x Omega`.
//!
//! Densities live on time nodes, momenta on spatial faces and sources on
//! space-time cell centers. With this layout the discrete continuity equation
//! `d_t rho + div m = mu` is an exact finite-volume balance and the no-flux
//! condition is carried by the boundary faces, which are always zero.

mod continuity;
mod projection;
mod triple;

pub use continuity::{
    continuity_adjoint, continuity_operator, divergence_residual, node_masses, relative_residual,
    total_mass,
};
pub use projection::{project_continuity, project_fluxes, ContinuityProjector, ProjectionMethod};
pub use triple::{interp_adjoint, interp_to_centered, CenteredTriple, StaggeredTriple};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform space-time grid over `[0,1] x [lower, upper]`.
///
/// `dt` is always derived as `1/nt`, so `nt * dt = 1` holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub lower: [T; 2],
    pub upper: [T; 2],
}

impl<T: Real> Grid<T> {
    pub fn new(nt: usize, nx: usize, ny: usize, lower: [T; 2], upper: [T; 2]) -> Result<Self> {
        for (name, n) in [("nt", nt), ("nx", nx), ("ny", ny)] {
            if n == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "cell count must be at least 1".into(),
                });
            }
        }
        for axis in 0..2 {
            if !(upper[axis] > lower[axis]) || !lower[axis].is_finite() || !upper[axis].is_finite()
            {
                return Err(Error::InvalidParameter {
                    name: "domain",
                    reason: format!("axis {axis} bounds must be finite with lower < upper"),
                });
            }
        }
        Ok(Self {
            nt,
            nx,
            ny,
            lower,
            upper,
        })
    }

    /// Grid on the unit square `(-1/2, 1/2)^2` centered at the origin.
    pub fn unit_square(nt: usize, nx: usize, ny: usize) -> Result<Self> {
        let h = T::lit(0.5);
        Self::new(nt, nx, ny, [-h, -h], [h, h])
    }

    #[inline]
    pub fn dt(&self) -> T {
        T::one() / T::from_usize_lossy(self.nt)
    }

    #[inline]
    pub fn dx(&self) -> T {
        (self.upper[0] - self.lower[0]) / T::from_usize_lossy(self.nx)
    }

    #[inline]
    pub fn dy(&self) -> T {
        (self.upper[1] - self.lower[1]) / T::from_usize_lossy(self.ny)
    }

    /// Spatial cell area `dx * dy`.
    #[inline]
    pub fn cell_area(&self) -> T {
        self.dx() * self.dy()
    }

    /// Space-time cell volume `dt * dx * dy`.
    #[inline]
    pub fn cell_volume(&self) -> T {
        self.dt() * self.cell_area()
    }

    pub fn area(&self) -> T {
        (self.upper[0] - self.lower[0]) * (self.upper[1] - self.lower[1])
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> T {
        self.lower[0] + (T::from_usize_lossy(i) + T::lit(0.5)) * self.dx()
    }

    #[inline]
    pub fn y_center(&self, j: usize) -> T {
        self.lower[1] + (T::from_usize_lossy(j) + T::lit(0.5)) * self.dy()
    }

    #[inline]
    pub fn x_face(&self, i: usize) -> T {
        self.lower[0] + T::from_usize_lossy(i) * self.dx()
    }

    #[inline]
    pub fn y_face(&self, j: usize) -> T {
        self.lower[1] + T::from_usize_lossy(j) * self.dy()
    }

    /// Time node `k * dt`, `k = 0..=nt`.
    #[inline]
    pub fn t_node(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.dt()
    }

    /// Time-cell midpoint `(k + 1/2) * dt`, `k = 0..nt`.
    #[inline]
    pub fn t_center(&self, k: usize) -> T {
        (T::from_usize_lossy(k) + T::lit(0.5)) * self.dt()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_space_time_cells(&self) -> usize {
        self.nt * self.nx * self.ny
    }

    pub fn rho_shape(&self) -> [usize; 3] {
        [self.nt + 1, self.nx, self.ny]
    }

    pub fn mx_shape(&self) -> [usize; 3] {
        [self.nt, self.nx + 1, self.ny]
    }

    pub fn my_shape(&self) -> [usize; 3] {
        [self.nt, self.nx, self.ny + 1]
    }

    pub fn cell_shape(&self) -> [usize; 3] {
        [self.nt, self.nx, self.ny]
    }

    pub fn slice_shape(&self) -> [usize; 2] {
        [self.nx, self.ny]
    }
}
