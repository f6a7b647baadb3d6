use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Receiver coil sensitivities sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilSet<T> {
    pub maps: Vec<Array2<Complex<T>>>,
    pub centers: Vec<[T; 2]>,
    pub width: T,
    pub phases: Vec<T>,
}

impl<T: Real> CoilSet<T> {
    /// A single coil with unit sensitivity everywhere.
    pub fn uniform(g: &Grid<T>) -> Self {
        Self {
            maps: vec![Array2::from_elem((g.nx, g.ny), Complex::new(T::one(), T::zero()))],
            centers: vec![[T::zero(); 2]],
            width: T::infinity(),
            phases: vec![T::zero()],
        }
    }

    /// `n` Gaussian coils `exp(-|x - p_j|^2 / (2 s^2)) e^{i theta_j}` with centers
    /// `p_j` equally spaced on a circle of radius `ring_radius` around the
    /// domain center and phases `theta_j = 2 pi j / n`.
    pub fn gaussian_ring(g: &Grid<T>, n: usize, width: T, ring_radius: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "coils",
                reason: "need at least one coil".into(),
            });
        }
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coil_width",
                reason: format!("must be positive and finite, got {width}"),
            });
        }
        if !(ring_radius >= T::zero()) || !ring_radius.is_finite() {
            return Err(Error::InvalidParameter {
                name: "ring_radius",
                reason: format!("must be nonnegative and finite, got {ring_radius}"),
            });
        }
        let half = T::lit(0.5);
        let mid = [
            half * (g.lower[0] + g.upper[0]),
            half * (g.lower[1] + g.upper[1]),
        ];
        let two_pi = T::lit(2.0) * T::PI();
        let nf = T::from_usize_lossy(n);
        let mut maps = Vec::with_capacity(n);
        let mut centers = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for j in 0..n {
            let angle = two_pi * T::from_usize_lossy(j) / nf;
            let p = [
                mid[0] + ring_radius * angle.cos(),
                mid[1] + ring_radius * angle.sin(),
            ];
            let phase = Complex::from_polar(T::one(), angle);
            let map = Array2::from_shape_fn((g.nx, g.ny), |(i, jj)| {
                let ddx = g.x_center(i) - p[0];
                let ddy = g.y_center(jj) - p[1];
                phase * (-(ddx * ddx + ddy * ddy) / (T::lit(2.0) * width * width)).exp()
            });
            maps.push(map);
            centers.push(p);
            phases.push(angle);
        }
        Ok(Self {
            maps,
            centers,
            width,
            phases,
        })
    }

    pub fn n_coils(&self) -> usize {
        self.maps.len()
    }

    /// `max_j sup_x |c_j(x)|` over the cell centers.
    pub fn max_abs(&self) -> T {
        self.maps
            .iter()
            .flat_map(|m| m.iter())
            .fold(T::zero(), |a, c| a.max(c.norm()))
    }

    /// `min_x max_j |c_j(x)|`; positive iff at every cell some coil is nonzero.
    pub fn min_coverage(&self) -> T {
        let (nx, ny) = self.maps[0].dim();
        let mut worst = T::infinity();
        for i in 0..nx {
            for j in 0..ny {
                let best = self.maps.iter().fold(T::zero(), |a, m| a.max(m[[i, j]].norm()));
                worst = worst.min(best);
            }
        }
        worst
    }

    /// Discrete injectivity hypothesis: every cell is seen by some coil.
    pub fn is_nowhere_vanishing(&self) -> bool {
        self.min_coverage() > T::zero()
    }

    pub(crate) fn check_grid(&self, g: &Grid<T>) -> Result<()> {
        for m in &self.maps {
            crate::error::check_shape("coil map", &g.slice_shape(), m.shape())?;
        }
        if self.maps.iter().flat_map(|m| m.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coils",
                reason: "coil maps must be finite".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_coils_cover_the_domain() {
        let g = Grid::<f64>::unit_square(1, 8, 8).unwrap();
        let c = CoilSet::gaussian_ring(&g, 4, 0.5, 0.6).unwrap();
        assert_eq!(c.n_coils(), 4);
        assert!(c.is_nowhere_vanishing());
        assert!(c.max_abs() <= 1.0);
        // phases follow 2 pi j / n
        let z = c.maps[1][[4, 4]];
        assert!((z.arg() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn uniform_coil_is_one() {
        let g = Grid::<f64>::unit_square(1, 3, 2).unwrap();
        let c = CoilSet::uniform(&g);
        assert_eq!(c.min_coverage(), 1.0);
        assert_eq!(c.max_abs(), 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Grid::<f64>::unit_square(1, 3, 2).unwrap();
        assert!(CoilSet::gaussian_ring(&g, 0, 0.5, 0.5).is_err());
        assert!(CoilSet::gaussian_ring(&g, 2, 0.0, 0.5).is_err());
        assert!(CoilSet::gaussian_ring(&g, 2, 0.5, -1.0).is_err());
    }
}
