//! Synthetic ground-truth curves with known transport and growth.
//!
//! A phantom is a profile of unit mass moving with constant velocity
//! `v = x1 - x0` while its mass follows `y(t) = (sqrt(M0) + t (sqrt(lambda M0) - sqrt(M0)))^2`.
//! Then `m = v rho` and `mu = (y'/y) rho` solve the continuity equation, and the
//! energy of the curve is `|v|^2/2 int y dt + 2 delta^2 (sqrt(lambda M0) - sqrt(M0))^2`.
//!
//! Densities are exact cell averages, renormalized to the mass profile, and
//! fluxes are face averages integrated in time by Gauss-Legendre quadrature.
//! The discrete continuity equation then holds up to quadrature and
//! truncation error, which a final least-change correction of the momenta
//! and sources removes. Densities stay untouched, hence positive.

use ndarray::{Array2, Axis};

use crate::energy::Delta;
use crate::error::{Error, Result};
use crate::grid::{interp_to_centered, project_fluxes, Grid, StaggeredTriple};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    TranslatingGaussian,
    GrowingGaussian,
    TranslatingDisk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec<T> {
    pub kind: PhantomKind,
    pub start: [T; 2],
    pub end: [T; 2],
    /// Gaussian standard deviation, or disk radius.
    pub width: T,
    /// Initial mass `M0`.
    pub mass: T,
    /// Final mass is `growth * mass`.
    pub growth: T,
    /// Growth penalty used for the analytic energy.
    pub delta: Delta<T>,
}

impl<T: Real> PhantomSpec<T> {
    /// Unit-mass Gaussian of width `width` moving from `start` to `end`.
    pub fn translating_gaussian(start: [T; 2], end: [T; 2], width: T) -> Self {
        Self {
            kind: PhantomKind::TranslatingGaussian,
            start,
            end,
            width,
            mass: T::one(),
            growth: T::one(),
            delta: Delta::Finite(T::one()),
        }
    }

    /// Static Gaussian at `center` whose mass grows from `mass` to `growth * mass`.
    pub fn growing_gaussian(center: [T; 2], width: T, mass: T, growth: T, delta: Delta<T>) -> Self {
        Self {
            kind: PhantomKind::GrowingGaussian,
            start: center,
            end: center,
            width,
            mass,
            growth,
            delta,
        }
    }

    pub fn translating_disk(start: [T; 2], end: [T; 2], radius: T) -> Self {
        Self {
            kind: PhantomKind::TranslatingDisk,
            width: radius,
            ..Self::translating_gaussian(start, end, radius)
        }
    }

    pub fn velocity(&self) -> [T; 2] {
        [self.end[0] - self.start[0], self.end[1] - self.start[1]]
    }

    pub fn center(&self, t: T) -> [T; 2] {
        let v = self.velocity();
        [self.start[0] + t * v[0], self.start[1] + t * v[1]]
    }

    fn sqrt_ends(&self) -> (T, T) {
        let a = self.mass.sqrt();
        (a, (self.growth * self.mass).sqrt() - a)
    }

    /// Mass profile `y(t)`.
    pub fn mass_at(&self, t: T) -> T {
        let (a, b) = self.sqrt_ends();
        let r = a + t * b;
        r * r
    }

    fn mass_rate(&self, t: T) -> T {
        let (a, b) = self.sqrt_ends();
        T::lit(2.0) * (a + t * b) * b
    }

    /// Continuum energy of the constructed curve.
    pub fn analytic_energy(&self) -> T {
        let v = self.velocity();
        let (a, b) = self.sqrt_ends();
        let mean_mass = a * a + a * b + b * b / T::lit(3.0);
        let kinetic = T::lit(0.5) * (v[0] * v[0] + v[1] * v[1]) * mean_mass;
        let growth = if b.is_zero() {
            T::zero()
        } else {
            match self.delta {
                Delta::Finite(d) => T::lit(2.0) * d * d * b * b,
                Delta::Infinite => T::infinity(),
            }
        };
        kinetic + growth
    }

    fn validate(&self, g: &Grid<T>) -> Result<()> {
        for (name, v) in [("width", self.width), ("mass", self.mass), ("growth", self.growth)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.kind == PhantomKind::GrowingGaussian && self.start != self.end {
            return Err(Error::InvalidParameter {
                name: "end",
                reason: "a growing Gaussian does not move".into(),
            });
        }
        for p in [self.start, self.end] {
            let inside = (0..2).all(|a| p[a] > g.lower[a] && p[a] < g.upper[a]);
            if !inside {
                return Err(Error::PhantomSupport(format!(
                    "center ({}, {}) lies outside the domain",
                    p[0], p[1]
                )));
            }
        }
        let leak = match self.kind {
            PhantomKind::TranslatingDisk => {
                let r = self.width;
                let fits = [self.start, self.end].iter().all(|p| {
                    (0..2).all(|a| p[a] - r >= g.lower[a] && p[a] + r <= g.upper[a])
                });
                if fits {
                    T::zero()
                } else {
                    T::one()
                }
            }
            // the center moves on a segment, so the worst case is at an end
            _ => [self.start, self.end]
                .iter()
                .map(|&c| T::one() - gaussian_inside_fraction(c, self.width, g))
                .fold(T::zero(), T::max),
        };
        if leak > T::lit(LEAKAGE_TOL) {
            return Err(Error::PhantomSupport(format!(
                "fraction {} of the mass leaves the domain (limit {LEAKAGE_TOL:e})",
                leak.as_f64()
            )));
        }
        Ok(())
    }
}

/// Largest admissible fraction of the untruncated profile outside the domain.
pub const LEAKAGE_TOL: f64 = 1e-6;

fn normal_cdf<T: Real>(z: T) -> T {
    T::lit(0.5 * libm::erfc(-z.as_f64() / std::f64::consts::SQRT_2))
}

fn normal_pdf<T: Real>(z: T) -> T {
    let z = z.as_f64();
    T::lit((-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

/// Mass of the standard 1D normal between `(lo - c)/s` and `(hi - c)/s`.
fn interval_mass<T: Real>(lo: T, hi: T, c: T, s: T) -> T {
    // use the upper tail when both ends are right of the center to avoid cancellation
    let (zl, zh) = ((lo - c) / s, (hi - c) / s);
    if zl > T::zero() {
        normal_cdf(-zl) - normal_cdf(-zh)
    } else {
        normal_cdf(zh) - normal_cdf(zl)
    }
}

fn gaussian_inside_fraction<T: Real>(c: [T; 2], s: T, g: &Grid<T>) -> T {
    interval_mass(g.lower[0], g.upper[0], c[0], s) * interval_mass(g.lower[1], g.upper[1], c[1], s)
}

/// Nodes and weights of 8-point Gauss-Legendre quadrature on `[-1, 1]`.
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Quadrature points in `[a, b]` with weights summing to one.
fn time_rule<T: Real>(a: T, b: T) -> Vec<(T, T)> {
    let mid = T::lit(0.5) * (a + b);
    let half = T::lit(0.5) * (b - a);
    let mut out = Vec::with_capacity(8);
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        for sign in [-1.0, 1.0] {
            out.push((mid + half * T::lit(sign * x), T::lit(0.5 * w)));
        }
    }
    out
}

const DISK_SUPERSAMPLING: usize = 16;

/// Mass of the normal profile of width `s` centered at `c`, truncated to
/// `|x - c| < r`, inside `[lo, hi]`.
fn truncated_mass<T: Real>(lo: T, hi: T, c: T, s: T, r: T) -> T {
    let (a, b) = (lo.max(c - r), hi.min(c + r));
    if a < b {
        interval_mass(a, b, c, s)
    } else {
        T::zero()
    }
}

fn truncated_density<T: Real>(x: T, c: T, s: T, r: T) -> T {
    if (x - c).abs() < r {
        normal_pdf((x - c) / s) / s
    } else {
        T::zero()
    }
}

/// Product of two truncated 1D normals, cut off where it would first meet the
/// boundary along the path. The cut moves with the profile, so its mass is
/// constant and the translation stays an exact solution without flux
/// through the boundary.
struct Gaussian<'a, T> {
    spec: &'a PhantomSpec<T>,
    g: &'a Grid<T>,
    radius: [T; 2],
    norm: T,
}

impl<'a, T: Real> Gaussian<'a, T> {
    fn new(spec: &'a PhantomSpec<T>, g: &'a Grid<T>) -> Self {
        let mut radius = [T::infinity(); 2];
        for (a, r) in radius.iter_mut().enumerate() {
            for p in [spec.start, spec.end] {
                *r = r.min(p[a] - g.lower[a]).min(g.upper[a] - p[a]);
            }
        }
        let s = spec.width;
        let norm = (0..2)
            .map(|a| interval_mass(-radius[a], radius[a], T::zero(), s))
            .fold(T::one(), |acc, m| acc * m);
        Self { spec, g, radius, norm }
    }

    fn axis_masses(&self, t: T) -> (Vec<T>, Vec<T>) {
        let g = self.g;
        let c = self.spec.center(t);
        let s = self.spec.width;
        let mx = (0..g.nx)
            .map(|i| truncated_mass(g.x_face(i), g.x_face(i + 1), c[0], s, self.radius[0]))
            .collect();
        let my = (0..g.ny)
            .map(|j| truncated_mass(g.y_face(j), g.y_face(j + 1), c[1], s, self.radius[1]))
            .collect();
        (mx, my)
    }

    /// Cell averages of the unit-mass profile.
    fn cells(&self, t: T) -> Array2<T> {
        let (mx, my) = self.axis_masses(t);
        let scale = (self.norm * self.g.cell_area()).recip();
        Array2::from_shape_fn((self.g.nx, self.g.ny), |(i, j)| mx[i] * my[j] * scale)
    }

    /// Face averages on x-faces (`nx + 1` by `ny`) and y-faces (`nx` by `ny + 1`).
    fn faces(&self, t: T) -> (Array2<T>, Array2<T>) {
        let g = self.g;
        let c = self.spec.center(t);
        let s = self.spec.width;
        let (mx, my) = self.axis_masses(t);
        let px: Vec<T> = (0..=g.nx).map(|i| truncated_density(g.x_face(i), c[0], s, self.radius[0])).collect();
        let py: Vec<T> = (0..=g.ny).map(|j| truncated_density(g.y_face(j), c[1], s, self.radius[1])).collect();
        let fx = Array2::from_shape_fn((g.nx + 1, g.ny), |(i, j)| px[i] * my[j] / (g.dy() * self.norm));
        let fy = Array2::from_shape_fn((g.nx, g.ny + 1), |(i, j)| mx[i] * py[j] / (g.dx() * self.norm));
        (fx, fy)
    }

    /// Times in `(a, b)` where a truncation edge crosses a face; the face
    /// averages are only piecewise smooth in time.
    fn breakpoints(&self, a: T, b: T) -> Vec<T> {
        let g = self.g;
        let v = self.spec.velocity();
        let mut out = vec![a, b];
        for axis in 0..2 {
            if v[axis].is_zero() {
                continue;
            }
            let n = if axis == 0 { g.nx } else { g.ny };
            for f in 0..=n {
                let face = if axis == 0 { g.x_face(f) } else { g.y_face(f) };
                for sign in [-T::one(), T::one()] {
                    let t = (face + sign * self.radius[axis] - self.spec.start[axis]) / v[axis];
                    if t > a && t < b {
                        out.push(t);
                    }
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        out.dedup();
        out
    }
}

/// Disk of uniform density, evaluated by midpoint supersampling.
struct Disk<'a, T> {
    spec: &'a PhantomSpec<T>,
    g: &'a Grid<T>,
}

impl<T: Real> Disk<'_, T> {
    fn density(&self) -> T {
        (T::PI() * self.spec.width * self.spec.width).recip()
    }

    fn inside(&self, p: [T; 2], c: [T; 2]) -> bool {
        let d0 = p[0] - c[0];
        let d1 = p[1] - c[1];
        d0 * d0 + d1 * d1 < self.spec.width * self.spec.width
    }

    fn cell_average(&self, xr: [T; 2], yr: [T; 2], c: [T; 2]) -> T {
        let n = DISK_SUPERSAMPLING;
        let nf = T::from_usize_lossy(n);
        let mut hits = 0usize;
        for a in 0..n {
            let x = xr[0] + (T::from_usize_lossy(a) + T::lit(0.5)) * (xr[1] - xr[0]) / nf;
            for b in 0..n {
                let y = yr[0] + (T::from_usize_lossy(b) + T::lit(0.5)) * (yr[1] - yr[0]) / nf;
                if self.inside([x, y], c) {
                    hits += 1;
                }
            }
        }
        T::from_usize_lossy(hits) / (nf * nf) * self.density()
    }

    fn face_integral(&self, at: T, range: [T; 2], c: [T; 2], normal_axis: usize) -> T {
        let n = DISK_SUPERSAMPLING * 4;
        let nf = T::from_usize_lossy(n);
        let len = range[1] - range[0];
        let mut hits = 0usize;
        for a in 0..n {
            let s = range[0] + (T::from_usize_lossy(a) + T::lit(0.5)) * len / nf;
            let p = if normal_axis == 0 { [at, s] } else { [s, at] };
            if self.inside(p, c) {
                hits += 1;
            }
        }
        T::from_usize_lossy(hits) / nf * len * self.density()
    }

    /// Cell averages renormalized to unit discrete mass, and that mass.
    fn cells(&self, t: T) -> (Array2<T>, T) {
        let g = self.g;
        let c = self.spec.center(t);
        let mut out = Array2::from_shape_fn((g.nx, g.ny), |(i, j)| {
            self.cell_average([g.x_face(i), g.x_face(i + 1)], [g.y_face(j), g.y_face(j + 1)], c)
        });
        let total = out.sum() * g.cell_area();
        out.mapv_inplace(|v| v / total);
        (out, total)
    }

    fn faces(&self, t: T) -> (Array2<T>, Array2<T>) {
        let g = self.g;
        let c = self.spec.center(t);
        let (_, total) = self.cells(t);
        let fx = Array2::from_shape_fn((g.nx + 1, g.ny), |(i, j)| {
            self.face_integral(g.x_face(i), [g.y_face(j), g.y_face(j + 1)], c, 0) / (g.dy() * total)
        });
        let fy = Array2::from_shape_fn((g.nx, g.ny + 1), |(i, j)| {
            self.face_integral(g.y_face(j), [g.x_face(i), g.x_face(i + 1)], c, 1) / (g.dx() * total)
        });
        (fx, fy)
    }
}

/// A constructed ground truth.
#[derive(Debug, Clone)]
pub struct Phantom<T> {
    pub triple: StaggeredTriple<T>,
    /// Continuum energy of the construction.
    pub analytic_energy: T,
    /// Relative change `|u' - u| / |u|` made to enforce the discrete
    /// continuity equation on the sampled triple `u`.
    pub projection_displacement: T,
}

/// Build the staggered triple of `spec` on `g`, satisfying the discrete
/// continuity equation (without source when the mass is constant).
///
/// Gaussian kinds march the densities forward with the time-integrated
/// fluxes, so densities stay nonnegative and vanish exactly where momenta do.
/// The disk samples densities and fluxes independently and corrects the
/// fluxes by least squares.
pub fn make_phantom<T: Real>(spec: &PhantomSpec<T>, g: &Grid<T>) -> Result<Phantom<T>> {
    spec.validate(g)?;
    match spec.kind {
        PhantomKind::TranslatingDisk => make_disk(spec, g),
        _ => make_gaussian(spec, g),
    }
}

fn make_gaussian<T: Real>(spec: &PhantomSpec<T>, g: &Grid<T>) -> Result<Phantom<T>> {
    let profile = Gaussian::new(spec, g);
    let v = spec.velocity();
    let has_growth = spec.growth != T::one();
    let moving = v != [T::zero(); 2];
    let (dt, dx, dy) = (g.dt(), g.dx(), g.dy());
    let mut u = StaggeredTriple::zeros(g);
    u.rho.index_axis_mut(Axis(0), 0).assign(&(profile.cells(T::zero()) * spec.mass_at(T::zero())));
    for k in 0..g.nt {
        let mut mx = Array2::<T>::zeros((g.nx + 1, g.ny));
        let mut my = Array2::<T>::zeros((g.nx, g.ny + 1));
        let mut mu = Array2::<T>::zeros((g.nx, g.ny));
        let pieces = profile.breakpoints(g.t_node(k), g.t_node(k + 1));
        for piece in pieces.windows(2) {
            let share = (piece[1] - piece[0]) / dt;
            for (tau, w) in time_rule(piece[0], piece[1]) {
                let w = w * share;
                if moving {
                    let (fx, fy) = profile.faces(tau);
                    let y = spec.mass_at(tau);
                    mx.scaled_add(w * y * v[0], &fx);
                    my.scaled_add(w * y * v[1], &fy);
                }
                if has_growth {
                    mu.scaled_add(w * spec.mass_rate(tau), &profile.cells(tau));
                }
            }
        }
        let next = Array2::from_shape_fn((g.nx, g.ny), |(i, j)| {
            let div = (mx[[i + 1, j]] - mx[[i, j]]) / dx + (my[[i, j + 1]] - my[[i, j]]) / dy;
            let r = u.rho[[k, i, j]] + dt * (mu[[i, j]] - div);
            // rounding where the profile has just left a cell
            r.max(T::zero())
        });
        u.rho.index_axis_mut(Axis(0), k + 1).assign(&next);
        u.mx.index_axis_mut(Axis(0), k).assign(&mx);
        u.my.index_axis_mut(Axis(0), k).assign(&my);
        u.mu.index_axis_mut(Axis(0), k).assign(&mu);
    }
    let mut sampled = u.clone();
    for k in 0..=g.nt {
        let t = g.t_node(k);
        sampled.rho.index_axis_mut(Axis(0), k).assign(&(profile.cells(t) * spec.mass_at(t)));
    }
    let displacement = u.sub(&sampled).norm() / sampled.norm();
    Ok(Phantom {
        triple: u,
        analytic_energy: spec.analytic_energy(),
        projection_displacement: displacement,
    })
}

fn make_disk<T: Real>(spec: &PhantomSpec<T>, g: &Grid<T>) -> Result<Phantom<T>> {
    let profile = Disk { spec, g };
    let v = spec.velocity();
    let mut u = StaggeredTriple::zeros(g);
    for k in 0..=g.nt {
        let t = g.t_node(k);
        u.rho.index_axis_mut(Axis(0), k).assign(&(profile.cells(t).0 * spec.mass_at(t)));
    }
    for k in 0..g.nt {
        let mut mx = Array2::<T>::zeros((g.nx + 1, g.ny));
        let mut my = Array2::<T>::zeros((g.nx, g.ny + 1));
        for (tau, w) in time_rule(g.t_node(k), g.t_node(k + 1)) {
            let (fx, fy) = profile.faces(tau);
            let y = spec.mass_at(tau);
            mx.scaled_add(w * y * v[0], &fx);
            my.scaled_add(w * y * v[1], &fy);
        }
        u.mx.index_axis_mut(Axis(0), k).assign(&mx);
        u.my.index_axis_mut(Axis(0), k).assign(&my);
    }
    u.zero_boundary();
    let projected = project_fluxes(&u, g, false)?;
    let displacement = projected.sub(&u).norm() / u.norm();
    Ok(Phantom {
        triple: projected,
        analytic_energy: spec.analytic_energy(),
        projection_displacement: displacement,
    })
}

/// `|rho_c(u) - rho_c(truth)| / |rho_c(truth)|` over centered densities.
pub fn relative_error<T: Real>(u: &StaggeredTriple<T>, truth: &StaggeredTriple<T>, g: &Grid<T>) -> Result<T> {
    let a = interp_to_centered(u, g)?.rho;
    let b = interp_to_centered(truth, g)?.rho;
    let den = b.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if den.is_zero() {
        return Err(Error::ZeroReference);
    }
    let num = a.iter().zip(&b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>().sqrt();
    Ok(num / den)
}
