use ndarray::{s, Array3, Array4, Zip};

use super::Grid;
use crate::error::{check_shape, Result};
use crate::scalar::Real;

/// Discrete `(rho, m, mu)` on the staggered grid.
///
/// * `rho`: `(nt+1, nx, ny)`, density at time nodes `k*dt`
/// * `mx`: `(nt, nx+1, ny)`, x-momentum on x-faces
/// * `my`: `(nt, nx, ny+1)`, y-momentum on y-faces
/// * `mu`: `(nt, nx, ny)`, source at space-time cell centers
///
/// All values are densities with respect to the cell measure. The outermost
/// faces of `mx`/`my` encode the no-flux condition and must stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredTriple<T> {
    pub rho: Array3<T>,
    pub mx: Array3<T>,
    pub my: Array3<T>,
    pub mu: Array3<T>,
}

impl<T: Real> StaggeredTriple<T> {
    pub fn zeros(g: &Grid<T>) -> Self {
        Self {
            rho: Array3::zeros(g.rho_shape()),
            mx: Array3::zeros(g.mx_shape()),
            my: Array3::zeros(g.my_shape()),
            mu: Array3::zeros(g.cell_shape()),
        }
    }

    pub fn conforms(&self, g: &Grid<T>) -> Result<()> {
        check_shape("rho", &g.rho_shape(), self.rho.shape())?;
        check_shape("m_x", &g.mx_shape(), self.mx.shape())?;
        check_shape("m_y", &g.my_shape(), self.my.shape())?;
        check_shape("mu", &g.cell_shape(), self.mu.shape())
    }

    pub fn boundary_is_zero(&self) -> bool {
        let nx = self.mx.shape()[1] - 1;
        let ny = self.my.shape()[2] - 1;
        self.mx.slice(s![.., 0, ..]).iter().all(|v| v.is_zero())
            && self.mx.slice(s![.., nx, ..]).iter().all(|v| v.is_zero())
            && self.my.slice(s![.., .., 0]).iter().all(|v| v.is_zero())
            && self.my.slice(s![.., .., ny]).iter().all(|v| v.is_zero())
    }

    pub fn zero_boundary(&mut self) {
        let nx = self.mx.shape()[1] - 1;
        let ny = self.my.shape()[2] - 1;
        self.mx.slice_mut(s![.., 0, ..]).fill(T::zero());
        self.mx.slice_mut(s![.., nx, ..]).fill(T::zero());
        self.my.slice_mut(s![.., .., 0]).fill(T::zero());
        self.my.slice_mut(s![.., .., ny]).fill(T::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.parts().iter().all(|a| a.iter().all(|v| v.is_finite()))
    }

    pub fn parts(&self) -> [&Array3<T>; 4] {
        [&self.rho, &self.mx, &self.my, &self.mu]
    }

    pub fn parts_mut(&mut self) -> [&mut Array3<T>; 4] {
        [&mut self.rho, &mut self.mx, &mut self.my, &mut self.mu]
    }

    /// Euclidean inner product over all stored entries.
    pub fn dot(&self, other: &Self) -> T {
        self.parts()
            .iter()
            .zip(other.parts())
            .map(|(a, b)| dot3(a, b))
            .fold(T::zero(), |acc, v| acc + v)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: T, other: &Self) {
        for (dst, src) in self.parts_mut().into_iter().zip(other.parts()) {
            dst.zip_mut_with(src, |d, &s| *d += a * s);
        }
    }

    pub fn scale(&mut self, a: T) {
        for dst in self.parts_mut() {
            dst.mapv_inplace(|v| v * a);
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    pub fn max_abs(&self) -> T {
        self.parts()
            .iter()
            .flat_map(|a| a.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Number of stored scalars.
    pub fn len(&self) -> usize {
        self.parts().iter().map(|a| a.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cell-centered values of a staggered triple; `m` carries the two momentum
/// components in its last axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredTriple<T> {
    pub rho: Array3<T>,
    pub m: Array4<T>,
    pub mu: Array3<T>,
}

impl<T: Real> CenteredTriple<T> {
    pub fn zeros(g: &Grid<T>) -> Self {
        Self {
            rho: Array3::zeros(g.cell_shape()),
            m: Array4::zeros((g.nt, g.nx, g.ny, 2)),
            mu: Array3::zeros(g.cell_shape()),
        }
    }

    pub fn conforms(&self, g: &Grid<T>) -> Result<()> {
        check_shape("rho_c", &g.cell_shape(), self.rho.shape())?;
        check_shape("m_c", &[g.nt, g.nx, g.ny, 2], self.m.shape())?;
        check_shape("mu_c", &g.cell_shape(), self.mu.shape())
    }

    pub fn dot(&self, other: &Self) -> T {
        let m = Zip::from(&self.m)
            .and(&other.m)
            .fold(T::zero(), |acc, &a, &b| acc + a * b);
        dot3(&self.rho, &other.rho) + m + dot3(&self.mu, &other.mu)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// Values `(rho, m_x, m_y, mu)` of one space-time cell.
    #[inline]
    pub fn cell(&self, k: usize, i: usize, j: usize) -> [T; 4] {
        [
            self.rho[[k, i, j]],
            self.m[[k, i, j, 0]],
            self.m[[k, i, j, 1]],
            self.mu[[k, i, j]],
        ]
    }

    #[inline]
    pub fn set_cell(&mut self, k: usize, i: usize, j: usize, v: [T; 4]) {
        self.rho[[k, i, j]] = v[0];
        self.m[[k, i, j, 0]] = v[1];
        self.m[[k, i, j, 1]] = v[2];
        self.mu[[k, i, j]] = v[3];
    }
}

pub(crate) fn dot3<T: Real>(a: &Array3<T>, b: &Array3<T>) -> T {
    Zip::from(a)
        .and(b)
        .fold(T::zero(), |acc, &x, &y| acc + x * y)
}

/// Two-point averaging of the staggered unknowns onto space-time cell centers.
pub fn interp_to_centered<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>) -> Result<CenteredTriple<T>> {
    u.conforms(g)?;
    let half = T::lit(0.5);
    let mut c = CenteredTriple::zeros(g);
    for k in 0..g.nt {
        for i in 0..g.nx {
            for j in 0..g.ny {
                c.rho[[k, i, j]] = half * (u.rho[[k, i, j]] + u.rho[[k + 1, i, j]]);
                c.m[[k, i, j, 0]] = half * (u.mx[[k, i, j]] + u.mx[[k, i + 1, j]]);
                c.m[[k, i, j, 1]] = half * (u.my[[k, i, j]] + u.my[[k, i, j + 1]]);
            }
        }
    }
    c.mu.assign(&u.mu);
    Ok(c)
}

/// Adjoint of [`interp_to_centered`] on the subspace of triples with zero
/// boundary faces: the result always has zero boundary faces.
pub fn interp_adjoint<T: Real>(w: &CenteredTriple<T>, g: &Grid<T>) -> Result<StaggeredTriple<T>> {
    w.conforms(g)?;
    let half = T::lit(0.5);
    let mut u = StaggeredTriple::zeros(g);
    for k in 0..g.nt {
        for i in 0..g.nx {
            for j in 0..g.ny {
                let r = half * w.rho[[k, i, j]];
                u.rho[[k, i, j]] += r;
                u.rho[[k + 1, i, j]] += r;
                let a = half * w.m[[k, i, j, 0]];
                u.mx[[k, i, j]] += a;
                u.mx[[k, i + 1, j]] += a;
                let b = half * w.m[[k, i, j, 1]];
                u.my[[k, i, j]] += b;
                u.my[[k, i, j + 1]] += b;
            }
        }
    }
    u.mu.assign(&w.mu);
    u.zero_boundary();
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_centered, random_staggered};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants_are_preserved() {
        let g = Grid::<f64>::unit_square(3, 4, 5).unwrap();
        let mut u = StaggeredTriple::zeros(&g);
        u.rho.fill(2.5);
        u.mu.fill(-1.0);
        // constant momentum in the interior; boundary faces still zero so only
        // interior-adjacent cells see the constant
        let c = interp_to_centered(&u, &g).unwrap();
        assert!(c.rho.iter().all(|&v| v == 2.5));
        assert!(c.mu.iter().all(|&v| v == -1.0));
        assert!(c.m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_momentum_gives_midpoint_values() {
        // 1 x 3 grid in x, faces at -0.5, -1/6, 1/6, 0.5
        let g = Grid::<f64>::new(1, 3, 1, [-0.5, -0.5], [0.5, 0.5]).unwrap();
        let mut u = StaggeredTriple::zeros(&g);
        for i in 0..=3 {
            u.mx[[0, i, 0]] = 2.0 * g.x_face(i) + 1.0;
        }
        let c = interp_to_centered(&u, &g).unwrap();
        for i in 0..3 {
            let expected = 2.0 * g.x_center(i) + 1.0;
            assert!((c.m[[0, i, 0, 0]] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (nt, nx, ny) in [(1, 1, 1), (2, 3, 4), (4, 1, 6), (5, 7, 3)] {
            let g = Grid::<f64>::unit_square(nt, nx, ny).unwrap();
            for _ in 0..20 {
                let u = random_staggered(&g, &mut rng);
                let w = random_centered(&g, &mut rng);
                let lhs = interp_to_centered(&u, &g).unwrap().dot(&w);
                let rhs = u.dot(&interp_adjoint(&w, &g).unwrap());
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Grid::<f64>::unit_square(2, 3, 3).unwrap();
        let h = Grid::<f64>::unit_square(2, 3, 4).unwrap();
        let u = StaggeredTriple::zeros(&h);
        assert!(interp_to_centered(&u, &g).is_err());
    }
}
