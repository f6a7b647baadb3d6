//! Euclidean projection onto the affine set of discrete continuity solutions.
//!
//! The projection is `u - A^T (A A^T)^{-1} A u`. `A A^T` is a space-time
//! Laplacian: Dirichlet-type in time (the endpoint densities are free), Neumann
//! in space (no-flux faces), plus the identity contributed by the source.
//! Two interchangeable solvers are provided for the normal system: matrix-free
//! conjugate gradients, and an exact diagonalization with a sine transform in
//! time and cosine transforms in space.

use ndarray::{Array2, Array3, Axis};

use super::continuity::{continuity_adjoint, continuity_operator};
use super::{Grid, StaggeredTriple};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionMethod<T> {
    /// Conjugate gradients on the normal system with a relative tolerance.
    ConjugateGradient { tol: T, max_iters: usize },
    /// Direct solve by trigonometric diagonalization.
    Spectral,
}

/// Projector onto `{ u : A u = 0 }` with zero boundary faces, and with
/// `mu = 0` when growth is forbidden.
#[derive(Debug, Clone)]
pub struct ContinuityProjector<T> {
    grid: Grid<T>,
    with_source: bool,
    method: ProjectionMethod<T>,
    spectral: Option<Spectral<T>>,
}

#[derive(Debug, Clone)]
struct Spectral<T> {
    t_basis: Array2<T>,
    x_basis: Array2<T>,
    y_basis: Array2<T>,
    inv_eigen: Array3<T>,
}

impl<T: Real> ContinuityProjector<T> {
    pub fn new(grid: &Grid<T>, with_source: bool, method: ProjectionMethod<T>) -> Result<Self> {
        if let ProjectionMethod::ConjugateGradient { tol, max_iters } = method {
            if !(tol > T::zero()) || max_iters == 0 {
                return Err(Error::InvalidParameter {
                    name: "tol",
                    reason: "CG tolerance and iteration cap must be positive".into(),
                });
            }
        }
        let spectral = match method {
            ProjectionMethod::Spectral => Some(Spectral::new(grid, with_source)),
            ProjectionMethod::ConjugateGradient { .. } => None,
        };
        Ok(Self {
            grid: *grid,
            with_source,
            method,
            spectral,
        })
    }

    /// Spectral projector, the fast path used by the solver.
    pub fn spectral(grid: &Grid<T>, with_source: bool) -> Self {
        Self::new(grid, with_source, ProjectionMethod::Spectral).expect("spectral method is always valid")
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn with_source(&self) -> bool {
        self.with_source
    }

    /// Apply `A A^T` to a cell field.
    pub fn normal_operator(&self, r: &Array3<T>) -> Array3<T> {
        let at = continuity_adjoint(r, &self.grid, self.with_source);
        continuity_operator(&at, &self.grid)
    }

    pub fn project(&self, u: &StaggeredTriple<T>) -> Result<StaggeredTriple<T>> {
        u.conforms(&self.grid)?;
        let mut v = u.clone();
        v.zero_boundary();
        if !self.with_source {
            v.mu.fill(T::zero());
        }
        let rhs = continuity_operator(&v, &self.grid);
        let lambda = match (&self.method, &self.spectral) {
            (ProjectionMethod::Spectral, Some(sp)) => sp.solve(&rhs),
            (ProjectionMethod::ConjugateGradient { tol, max_iters }, _) => {
                let abs_tol = *tol * (T::one() + u.norm());
                self.conjugate_gradient(&rhs, abs_tol, *max_iters)?
            }
            (ProjectionMethod::Spectral, None) => unreachable!("spectral data built in new"),
        };
        let correction = continuity_adjoint(&lambda, &self.grid, self.with_source);
        v.axpy(-T::one(), &correction);
        Ok(v)
    }

    fn conjugate_gradient(&self, b: &Array3<T>, abs_tol: T, max_iters: usize) -> Result<Array3<T>> {
        let mut x = Array3::zeros(b.raw_dim());
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = sumsq(&r);
        let tol_sq = abs_tol * abs_tol;
        for _ in 0..max_iters {
            if rr <= tol_sq {
                return Ok(x);
            }
            let ap = self.normal_operator(&p);
            let pap = p.iter().zip(ap.iter()).fold(T::zero(), |a, (&u, &v)| a + u * v);
            let step = rr / pap;
            x.zip_mut_with(&p, |xi, &pi| *xi += step * pi);
            r.zip_mut_with(&ap, |ri, &ai| *ri -= step * ai);
            let rr_new = sumsq(&r);
            let beta = rr_new / rr;
            p.zip_mut_with(&r, |pi, &ri| *pi = ri + beta * *pi);
            rr = rr_new;
        }
        if rr <= tol_sq {
            return Ok(x);
        }
        Err(Error::ProjectionDiverged {
            iterations: max_iters,
            residual: (rr.sqrt() / (T::one() + sumsq(b).sqrt())).as_f64(),
        })
    }
}

fn sumsq<T: Real>(a: &Array3<T>) -> T {
    a.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

impl<T: Real> Spectral<T> {
    fn new(g: &Grid<T>, with_source: bool) -> Self {
        let pi = T::PI();
        let two = T::lit(2.0);
        let (nt, nx, ny) = (g.nt, g.nx, g.ny);
        let ntp1 = T::from_usize_lossy(nt + 1);
        // Orthonormal DST-I: eigenvectors of tridiag(-1, 2, -1).
        let t_scale = (two / ntp1).sqrt();
        let t_basis = Array2::from_shape_fn((nt, nt), |(l, k)| {
            t_scale * (pi * T::from_usize_lossy((l + 1) * (k + 1)) / ntp1).sin()
        });
        let x_basis = dct2_basis::<T>(nx);
        let y_basis = dct2_basis::<T>(ny);
        let (dt, dx, dy) = (g.dt(), g.dx(), g.dy());
        let lam_t: Vec<T> = (0..nt)
            .map(|l| (two - two * (pi * T::from_usize_lossy(l + 1) / ntp1).cos()) / (dt * dt))
            .collect();
        let lam_x = neumann_eigen(nx, dx);
        let lam_y = neumann_eigen(ny, dy);
        let shift = if with_source { T::one() } else { T::zero() };
        let inv_eigen = Array3::from_shape_fn((nt, nx, ny), |(l, p, q)| {
            (lam_t[l] + lam_x[p] + lam_y[q] + shift).recip()
        });
        Self {
            t_basis,
            x_basis,
            y_basis,
            inv_eigen,
        }
    }

    fn solve(&self, rhs: &Array3<T>) -> Array3<T> {
        let mut a = apply_along(rhs, &self.t_basis, 0, false);
        a = apply_along(&a, &self.x_basis, 1, false);
        a = apply_along(&a, &self.y_basis, 2, false);
        a.zip_mut_with(&self.inv_eigen, |v, &e| *v *= e);
        a = apply_along(&a, &self.y_basis, 2, true);
        a = apply_along(&a, &self.x_basis, 1, true);
        apply_along(&a, &self.t_basis, 0, true)
    }
}

fn dct2_basis<T: Real>(n: usize) -> Array2<T> {
    let pi = T::PI();
    let nf = T::from_usize_lossy(n);
    Array2::from_shape_fn((n, n), |(p, i)| {
        let s = if p == 0 {
            (T::one() / nf).sqrt()
        } else {
            (T::lit(2.0) / nf).sqrt()
        };
        s * (pi * T::from_usize_lossy(p) * (T::from_usize_lossy(i) + T::lit(0.5)) / nf).cos()
    })
}

fn neumann_eigen<T: Real>(n: usize, h: T) -> Vec<T> {
    let two = T::lit(2.0);
    let nf = T::from_usize_lossy(n);
    (0..n)
        .map(|p| (two - two * (T::PI() * T::from_usize_lossy(p) / nf).cos()) / (h * h))
        .collect()
}

/// Multiply every lane along `axis` by `basis` (or its transpose).
fn apply_along<T: Real>(a: &Array3<T>, basis: &Array2<T>, axis: usize, transpose: bool) -> Array3<T> {
    let n = basis.nrows();
    let mut out = Array3::zeros(a.raw_dim());
    let mut buf = vec![T::zero(); n];
    for (lane_in, mut lane_out) in a.lanes(Axis(axis)).into_iter().zip(out.lanes_mut(Axis(axis))) {
        for (r, b) in buf.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (c, &v) in lane_in.iter().enumerate() {
                let m = if transpose { basis[[c, r]] } else { basis[[r, c]] };
                acc += m * v;
            }
            *b = acc;
        }
        for (o, &b) in lane_out.iter_mut().zip(buf.iter()) {
            *o = b;
        }
    }
    out
}

/// Keep the densities and move only `(m, mu)`, by the least amount, onto
/// `div m - mu = -(rho[k+1] - rho[k]) / dt`.
///
/// Without a source the equation is solvable only when every node carries
/// the same mass; the component of the residual violating this is left in place.
pub fn project_fluxes<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>, with_source: bool) -> Result<StaggeredTriple<T>> {
    u.conforms(g)?;
    let mut v = u.clone();
    v.zero_boundary();
    if !with_source {
        v.mu.fill(T::zero());
    }
    let rhs = continuity_operator(&v, g);
    let x_basis = dct2_basis::<T>(g.nx);
    let y_basis = dct2_basis::<T>(g.ny);
    let lam_x = neumann_eigen(g.nx, g.dx());
    let lam_y = neumann_eigen(g.ny, g.dy());
    let shift = if with_source { T::one() } else { T::zero() };
    let mut a = apply_along(&rhs, &x_basis, 1, false);
    a = apply_along(&a, &y_basis, 2, false);
    for ((_, p, q), v) in a.indexed_iter_mut() {
        let e = lam_x[p] + lam_y[q] + shift;
        *v = if e > T::zero() { *v / e } else { T::zero() };
    }
    a = apply_along(&a, &y_basis, 2, true);
    let lambda = apply_along(&a, &x_basis, 1, true);
    let mut correction = continuity_adjoint(&lambda, g, with_source);
    correction.rho.fill(T::zero());
    v.axpy(-T::one(), &correction);
    Ok(v)
}

/// Projection onto the continuity set using conjugate gradients with relative
/// tolerance `tol` and the default cap of `10 * nt * nx * ny` iterations.
///
/// The result satisfies `||A u'|| <= tol * (1 + ||u||)`.
pub fn project_continuity<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>, tol: T) -> Result<StaggeredTriple<T>> {
    let method = ProjectionMethod::ConjugateGradient {
        tol,
        max_iters: 10 * g.n_space_time_cells(),
    };
    ContinuityProjector::new(g, true, method)?.project(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::divergence_residual;
    use crate::random::{random_feasible, random_staggered};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn residual_norm(u: &StaggeredTriple<f64>, g: &Grid<f64>) -> f64 {
        divergence_residual(u, g).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn feasible_points_are_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Grid::<f64>::unit_square(4, 5, 3).unwrap();
        let u = random_feasible(&g, true, &mut rng);
        for p in [project_continuity(&u, &g, 1e-12).unwrap(), ContinuityProjector::spectral(&g, true).project(&u).unwrap()] {
            assert!(p.sub(&u).max_abs() < 1e-12 * (1.0 + u.max_abs()));
        }
    }

    #[test]
    fn cg_meets_tolerance_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Grid::<f64>::unit_square(5, 6, 4).unwrap();
        let u = random_staggered(&g, &mut rng);
        let p = project_continuity(&u, &g, 1e-10).unwrap();
        assert!(residual_norm(&p, &g) <= 1e-10 * (1.0 + u.norm()));
        assert!(p.boundary_is_zero());
        let pp = project_continuity(&p, &g, 1e-10).unwrap();
        assert!(pp.sub(&p).norm() < 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn spectral_and_cg_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (nt, nx, ny) in [(1, 1, 1), (3, 1, 5), (4, 6, 5)] {
            let g = Grid::<f64>::new(nt, nx, ny, [0.0, 0.0], [2.0, 0.7]).unwrap();
            let u = random_staggered(&g, &mut rng);
            for with_source in [true, false] {
                let cg = ContinuityProjector::new(
                    &g,
                    with_source,
                    ProjectionMethod::ConjugateGradient { tol: 1e-13, max_iters: 10_000 },
                )
                .unwrap()
                .project(&u)
                .unwrap();
                let sp = ContinuityProjector::spectral(&g, with_source).project(&u).unwrap();
                assert!(cg.sub(&sp).norm() < 1e-9 * (1.0 + u.norm()));
                assert!(residual_norm(&sp, &g) < 1e-9 * (1.0 + u.norm()));
                if !with_source {
                    assert!(sp.mu.iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn cg_iteration_cap_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Grid::<f64>::unit_square(6, 8, 8).unwrap();
        let u = random_staggered(&g, &mut rng);
        let method = ProjectionMethod::ConjugateGradient { tol: 1e-14, max_iters: 2 };
        let err = ContinuityProjector::new(&g, true, method).unwrap().project(&u).unwrap_err();
        assert!(matches!(err, Error::ProjectionDiverged { iterations: 2, .. }));
    }

    #[test]
    fn single_precision_projection() {
        let g = Grid::<f32>::unit_square(3, 4, 4).unwrap();
        let mut u = StaggeredTriple::<f32>::zeros(&g);
        u.rho[[0, 1, 1]] = 1.0;
        u.mu[[1, 2, 2]] = 0.5;
        let p = ContinuityProjector::spectral(&g, true).project(&u).unwrap();
        let r = divergence_residual(&p, &g).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn flux_projection_keeps_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = Grid::<f64>::unit_square(4, 5, 6).unwrap();
        let u = random_staggered(&g, &mut rng);
        let p = project_fluxes(&u, &g, true).unwrap();
        assert_eq!(p.rho, u.rho);
        assert!(residual_norm(&p, &g) < 1e-10);
        let again = project_fluxes(&p, &g, true).unwrap();
        assert!(again.sub(&p).max_abs() < 1e-12);

        // equal node masses make the sourceless problem solvable
        let mut w = random_feasible(&g, false, &mut rng);
        w.mx.mapv_inplace(|v| v + 0.01);
        w.zero_boundary();
        let p = project_fluxes(&w, &g, false).unwrap();
        assert!(p.mu.iter().all(|v| *v == 0.0));
        assert!(residual_norm(&p, &g) < 1e-10);
    }
}
