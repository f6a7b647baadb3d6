use std::collections::HashMap;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::coils::CoilSet;
use super::measurement::{ht_norm, Measurement};
use super::pattern::{PatternFrame, SamplingPattern};
use crate::error::{check_shape, Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Per-frame linear forward operators `K*_t` from densities on the spatial
/// grid to the frame's sample space `H_t`.
///
/// Densities are paired by `sum rho r dx dy`; frame values by
/// `Re sum_j sum_s w_s h_j(s) conj(g_j(s))`.
pub trait FrameOperator<T: Real>: Send + Sync {
    fn grid(&self) -> &Grid<T>;

    fn n_coils(&self) -> usize;

    /// Quadrature weights of frame `k`; the sample count is their length.
    fn weights(&self, k: usize) -> &[T];

    /// Whether the operator maps into real values (imaginary parts are zero).
    fn real_valued(&self) -> bool {
        false
    }

    fn forward_frame(&self, k: usize, rho: ArrayView2<'_, T>) -> Result<Array2<Complex<T>>>;

    fn adjoint_frame(&self, k: usize, h: &Array2<Complex<T>>) -> Result<Array2<T>>;

    fn n_samples(&self, k: usize) -> usize {
        self.weights(k).len()
    }

    fn n_frames(&self) -> usize {
        self.grid().nt
    }

    /// Apply the forward operator to every time slice of a centered density.
    fn forward(&self, rho_c: &Array3<T>) -> Result<Measurement<T>> {
        let g = self.grid();
        check_shape("centered density", &g.cell_shape(), rho_c.shape())?;
        let frames = rho_c
            .axis_iter(Axis(0))
            .enumerate()
            .map(|(k, slice)| self.forward_frame(k, slice))
            .collect::<Result<Vec<_>>>()?;
        Ok(Measurement {
            frames,
            weights: (0..g.nt).map(|k| self.weights(k).to_vec()).collect(),
            real_valued: self.real_valued(),
        })
    }

    /// Frame-wise adjoint, stacked into a centered density array.
    fn adjoint(&self, f: &Measurement<T>) -> Result<Array3<T>> {
        let g = self.grid();
        if f.frames.len() != g.nt {
            return Err(Error::Shape {
                what: "measurement frames",
                expected: vec![g.nt],
                got: vec![f.frames.len()],
            });
        }
        let mut out = Array3::zeros(g.cell_shape());
        for (k, h) in f.frames.iter().enumerate() {
            out.index_axis_mut(Axis(0), k).assign(&self.adjoint_frame(k, h)?);
        }
        Ok(out)
    }

    /// A zero measurement laid out for this operator.
    fn zero_measurement(&self) -> Measurement<T> {
        let n = self.n_coils();
        Measurement {
            frames: (0..self.n_frames())
                .map(|k| Array2::zeros((n, self.n_samples(k))))
                .collect(),
            weights: (0..self.n_frames()).map(|k| self.weights(k).to_vec()).collect(),
            real_valued: self.real_valued(),
        }
    }
}

fn frame_shape_check<T: Real>(h: &Array2<Complex<T>>, n_coils: usize, n_samples: usize) -> Result<()> {
    check_shape("frame values", &[n_coils, n_samples], h.shape())
}

/// Reference forward map by direct summation:
/// `out[j][s] = (1/2pi) sum_x e^{-i w_s.x} c_j(x) rho(x) dx dy`.
pub fn forward_frame<T: Real>(
    rho: ArrayView2<'_, T>,
    coils: &CoilSet<T>,
    frame: &PatternFrame<T>,
    g: &Grid<T>,
) -> Result<Array2<Complex<T>>> {
    check_shape("density slice", &g.slice_shape(), rho.shape())?;
    coils.check_grid(g)?;
    let scale = g.cell_area() / (T::lit(2.0) * T::PI());
    let mut out = Array2::zeros((coils.n_coils(), frame.len()));
    for (s, w) in frame.freqs.iter().enumerate() {
        for (j, c) in coils.maps.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..g.nx {
                for jj in 0..g.ny {
                    let phase = -(w[0] * g.x_center(i) + w[1] * g.y_center(jj));
                    acc = acc + Complex::from_polar(rho[[i, jj]], phase) * c[[i, jj]];
                }
            }
            out[[j, s]] = acc * scale;
        }
    }
    Ok(out)
}

/// Reference adjoint by direct summation:
/// `out(x) = Re[(1/2pi) sum_j sum_s w_s conj(c_j(x)) e^{i w_s.x} h_j(s)]`.
pub fn adjoint_frame<T: Real>(
    h: &Array2<Complex<T>>,
    coils: &CoilSet<T>,
    frame: &PatternFrame<T>,
    g: &Grid<T>,
) -> Result<Array2<T>> {
    frame_shape_check(h, coils.n_coils(), frame.len())?;
    coils.check_grid(g)?;
    let scale = (T::lit(2.0) * T::PI()).recip();
    Ok(Array2::from_shape_fn((g.nx, g.ny), |(i, jj)| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (s, w) in frame.freqs.iter().enumerate() {
            let e = Complex::from_polar(frame.weights[s], w[0] * g.x_center(i) + w[1] * g.y_center(jj));
            for (j, c) in coils.maps.iter().enumerate() {
                acc = acc + c[[i, jj]].conj() * e * h[[j, s]];
            }
        }
        acc.re * scale
    }))
}

/// Separable phase factors `e^{-i w_x x_i}` and `e^{-i w_y y_j}` of one frame.
#[derive(Debug, Clone)]
enum Phases<T> {
    /// Sample set is a full tensor product of x- and y-frequencies, so the
    /// transform factorizes into two small matrix products.
    Tensor {
        ex: Array2<Complex<T>>,
        ey: Array2<Complex<T>>,
        index: Vec<(usize, usize)>,
    },
    Scattered {
        ex: Array2<Complex<T>>,
        ey: Array2<Complex<T>>,
    },
}

fn phase_table<T: Real>(freqs: &[T], nodes: &[T]) -> Array2<Complex<T>> {
    Array2::from_shape_fn((freqs.len(), nodes.len()), |(s, i)| {
        Complex::from_polar(T::one(), -freqs[s] * nodes[i])
    })
}

fn unique_index<T: Real>(values: impl Iterator<Item = T>) -> (Vec<T>, Vec<usize>) {
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut uniq = Vec::new();
    let mut idx = Vec::new();
    for v in values {
        let key = v.as_f64().to_bits();
        let id = *seen.entry(key).or_insert_with(|| {
            uniq.push(v);
            uniq.len() - 1
        });
        idx.push(id);
    }
    (uniq, idx)
}

impl<T: Real> Phases<T> {
    fn new(frame: &PatternFrame<T>, xs: &[T], ys: &[T]) -> Self {
        let (ux, ix) = unique_index(frame.freqs.iter().map(|w| w[0]));
        let (uy, iy) = unique_index(frame.freqs.iter().map(|w| w[1]));
        let s = frame.len();
        if s > 0 && ux.len() * uy.len() == s {
            let mut hit = vec![false; s];
            let mut tensor = true;
            for (&p, &q) in ix.iter().zip(&iy) {
                let slot = &mut hit[p * uy.len() + q];
                if *slot {
                    tensor = false;
                    break;
                }
                *slot = true;
            }
            if tensor {
                return Self::Tensor {
                    ex: phase_table(&ux, xs),
                    ey: phase_table(&uy, ys),
                    index: ix.into_iter().zip(iy).collect(),
                };
            }
        }
        let fx: Vec<T> = frame.freqs.iter().map(|w| w[0]).collect();
        let fy: Vec<T> = frame.freqs.iter().map(|w| w[1]).collect();
        Self::Scattered {
            ex: phase_table(&fx, xs),
            ey: phase_table(&fy, ys),
        }
    }
}

/// Dynamic MRI forward operator `rho -> (F(c_1 rho), ..., F(c_N rho))` sampled
/// on a time-dependent pattern, with precomputed separable phase tables.
#[derive(Debug, Clone)]
pub struct MriOperator<T> {
    grid: Grid<T>,
    coils: CoilSet<T>,
    pattern: SamplingPattern<T>,
    phases: Vec<Phases<T>>,
}

impl<T: Real> MriOperator<T> {
    pub fn new(g: &Grid<T>, coils: CoilSet<T>, pattern: SamplingPattern<T>) -> Result<Self> {
        coils.check_grid(g)?;
        if pattern.n_frames() != g.nt {
            return Err(Error::Shape {
                what: "pattern frames",
                expected: vec![g.nt],
                got: vec![pattern.n_frames()],
            });
        }
        let xs: Vec<T> = (0..g.nx).map(|i| g.x_center(i)).collect();
        let ys: Vec<T> = (0..g.ny).map(|j| g.y_center(j)).collect();
        let phases = pattern.frames.iter().map(|f| Phases::new(f, &xs, &ys)).collect();
        Ok(Self {
            grid: *g,
            coils,
            pattern,
            phases,
        })
    }

    pub fn coils(&self) -> &CoilSet<T> {
        &self.coils
    }

    pub fn pattern(&self) -> &SamplingPattern<T> {
        &self.pattern
    }

    /// Upper bound `(N / 4 pi^2) max_j |c_j|_inf^2 total_weight(k) |Omega|` on
    /// the squared operator norm of frame `k`.
    pub fn norm_sq_bound(&self, k: usize) -> T {
        let n = T::from_usize_lossy(self.coils.n_coils());
        let c = self.coils.max_abs();
        let four_pi_sq = T::lit(4.0) * T::PI() * T::PI();
        n / four_pi_sq * c * c * self.pattern.total_weight(k) * self.grid.area()
    }

    fn check_frame(&self, k: usize) -> Result<()> {
        if k >= self.grid.nt {
            return Err(Error::InvalidParameter {
                name: "frame",
                reason: format!("frame {k} out of range for {} frames", self.grid.nt),
            });
        }
        Ok(())
    }
}

impl<T: Real> FrameOperator<T> for MriOperator<T> {
    fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    fn n_coils(&self) -> usize {
        self.coils.n_coils()
    }

    fn weights(&self, k: usize) -> &[T] {
        &self.pattern.frames[k].weights
    }

    fn forward_frame(&self, k: usize, rho: ArrayView2<'_, T>) -> Result<Array2<Complex<T>>> {
        self.check_frame(k)?;
        let g = &self.grid;
        check_shape("density slice", &g.slice_shape(), rho.shape())?;
        let scale = g.cell_area() / (T::lit(2.0) * T::PI());
        let n_s = self.pattern.frames[k].len();
        let mut out = Array2::zeros((self.coils.n_coils(), n_s));
        for (j, c) in self.coils.maps.iter().enumerate() {
            let weighted = Array2::from_shape_fn((g.nx, g.ny), |(i, jj)| c[[i, jj]] * (rho[[i, jj]] * scale));
            match &self.phases[k] {
                Phases::Tensor { ex, ey, index } => {
                    // t1[i, q] = sum_jj weighted[i, jj] ey[q, jj]; out[p, q] = sum_i ex[p, i] t1[i, q]
                    let t1 = weighted.dot(&ey.t());
                    let full = ex.dot(&t1);
                    for (s, &(p, q)) in index.iter().enumerate() {
                        out[[j, s]] = full[[p, q]];
                    }
                }
                Phases::Scattered { ex, ey } => {
                    for s in 0..n_s {
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for i in 0..g.nx {
                            let mut row = Complex::new(T::zero(), T::zero());
                            for jj in 0..g.ny {
                                row = row + weighted[[i, jj]] * ey[[s, jj]];
                            }
                            acc = acc + ex[[s, i]] * row;
                        }
                        out[[j, s]] = acc;
                    }
                }
            }
        }
        Ok(out)
    }

    fn adjoint_frame(&self, k: usize, h: &Array2<Complex<T>>) -> Result<Array2<T>> {
        self.check_frame(k)?;
        let g = &self.grid;
        let frame = &self.pattern.frames[k];
        frame_shape_check(h, self.coils.n_coils(), frame.len())?;
        let scale = (T::lit(2.0) * T::PI()).recip();
        let mut out = Array2::<T>::zeros((g.nx, g.ny));
        for (j, c) in self.coils.maps.iter().enumerate() {
            // image[i, jj] = sum_s w_s conj(ex[s, i]) conj(ey[s, jj]) h_j(s)
            let image: Array2<Complex<T>> = match &self.phases[k] {
                Phases::Tensor { ex, ey, index } => {
                    let mut hw = Array2::zeros((ex.nrows(), ey.nrows()));
                    for (s, &(p, q)) in index.iter().enumerate() {
                        hw[[p, q]] = h[[j, s]] * frame.weights[s];
                    }
                    let exc = ex.mapv(|z| z.conj());
                    let eyc = ey.mapv(|z| z.conj());
                    exc.t().dot(&hw).dot(&eyc)
                }
                Phases::Scattered { ex, ey } => {
                    let mut img = Array2::zeros((g.nx, g.ny));
                    for s in 0..frame.len() {
                        let hs = h[[j, s]] * frame.weights[s];
                        for i in 0..g.nx {
                            let a = ex[[s, i]].conj() * hs;
                            for jj in 0..g.ny {
                                img[[i, jj]] = img[[i, jj]] + a * ey[[s, jj]].conj();
                            }
                        }
                    }
                    img
                }
            };
            ndarray::Zip::from(&mut out)
                .and(&image)
                .and(c)
                .for_each(|o, z, cz| *o += (cz.conj() * z).re * scale);
        }
        Ok(out)
    }
}

/// Denoising operator: every cell is one real sample, weighted by
/// `frame_weight[k] * dx * dy` so that the frame norm is the weighted `L^2`
/// norm on the grid. Frames with zero weight carry no samples.
#[derive(Debug, Clone)]
pub struct IdentityOperator<T> {
    grid: Grid<T>,
    frame_weights: Vec<T>,
    weights: Vec<Vec<T>>,
}

impl<T: Real> IdentityOperator<T> {
    /// Identity sampling with unit weight in every frame.
    pub fn new(g: &Grid<T>) -> Self {
        Self::with_frame_weights(g, vec![T::one(); g.nt]).expect("unit weights are valid")
    }

    /// Identity sampling with per-frame weights; a zero weight removes the frame.
    pub fn with_frame_weights(g: &Grid<T>, frame_weights: Vec<T>) -> Result<Self> {
        if frame_weights.len() != g.nt {
            return Err(Error::Shape {
                what: "frame weights",
                expected: vec![g.nt],
                got: vec![frame_weights.len()],
            });
        }
        if frame_weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "frame_weights",
                reason: "must be nonnegative and finite".into(),
            });
        }
        let weights = frame_weights
            .iter()
            .map(|&w| {
                if w > T::zero() {
                    vec![w * g.cell_area(); g.n_cells()]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(Self {
            grid: *g,
            frame_weights,
            weights,
        })
    }

    /// Observe only the first and last time frames.
    pub fn end_frames(g: &Grid<T>) -> Self {
        let mut w = vec![T::zero(); g.nt];
        w[0] = T::one();
        w[g.nt - 1] = T::one();
        Self::with_frame_weights(g, w).expect("unit weights are valid")
    }

    pub fn frame_weights(&self) -> &[T] {
        &self.frame_weights
    }
}

impl<T: Real> FrameOperator<T> for IdentityOperator<T> {
    fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    fn n_coils(&self) -> usize {
        1
    }

    fn weights(&self, k: usize) -> &[T] {
        &self.weights[k]
    }

    fn real_valued(&self) -> bool {
        true
    }

    fn forward_frame(&self, k: usize, rho: ArrayView2<'_, T>) -> Result<Array2<Complex<T>>> {
        check_shape("density slice", &self.grid.slice_shape(), rho.shape())?;
        let n = self.weights[k].len();
        if n == 0 {
            return Ok(Array2::zeros((1, 0)));
        }
        let flat: Vec<Complex<T>> = rho.iter().map(|&v| Complex::new(v, T::zero())).collect();
        Ok(Array2::from_shape_vec((1, n), flat).expect("slice length equals cell count"))
    }

    fn adjoint_frame(&self, k: usize, h: &Array2<Complex<T>>) -> Result<Array2<T>> {
        let n = self.weights[k].len();
        frame_shape_check(h, 1, n)?;
        let g = &self.grid;
        if n == 0 {
            return Ok(Array2::zeros((g.nx, g.ny)));
        }
        let w = self.frame_weights[k];
        Ok(Array2::from_shape_fn((g.nx, g.ny), |(i, j)| h[[0, i * g.ny + j]].re * w))
    }
}

/// Power-iteration estimate of `|K*_k|^2` in the `L^2(dx dy) -> H_k` norms.
pub fn frame_norm_sq<T: Real, O: FrameOperator<T> + ?Sized>(op: &O, k: usize, iters: usize, seed: u64) -> Result<T> {
    let g = *op.grid();
    if op.n_samples(k) == 0 {
        return Ok(T::zero());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::from_shape_fn((g.nx, g.ny), |_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        T::lit(v)
    });
    let l2 = |a: &Array2<T>| (a.iter().map(|v| *v * *v).sum::<T>() * g.cell_area()).sqrt();
    let mut est = T::zero();
    for _ in 0..iters.max(1) {
        let n = l2(&x);
        if n.is_zero() {
            return Ok(T::zero());
        }
        x.mapv_inplace(|v| v / n);
        let y = op.forward_frame(k, x.view())?;
        est = ht_norm(&y, op.weights(k));
        est = est * est;
        x = op.adjoint_frame(k, &y)?;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meas::pattern::{pattern_cartesian_lines, pattern_full_cartesian, pattern_radial};
    use crate::meas::measurement::frame_inner;
    use rand::Rng;

    fn random_frame<R: Rng>(n: usize, s: usize, rng: &mut R) -> Array2<Complex<f64>> {
        Array2::from_shape_fn((n, s), |_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_slice<R: Rng>(g: &Grid<f64>, rng: &mut R) -> Array2<f64> {
        Array2::from_shape_fn((g.nx, g.ny), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn unit_point_mass_at_origin() {
        let g = Grid::<f64>::new(1, 1, 1, [-0.25, -0.5], [0.25, 0.5]).unwrap();
        let rho = Array2::from_elem((1, 1), 1.0 / g.cell_area());
        let frame = PatternFrame {
            freqs: vec![[0.0, 0.0], [3.0, -1.0]],
            weights: vec![1.0, 1.0],
        };
        let out = forward_frame(rho.view(), &CoilSet::uniform(&g), &frame, &g).unwrap();
        let inv_two_pi = 0.5 / std::f64::consts::PI;
        assert!((out[[0, 0]] - Complex::new(inv_two_pi, 0.0)).norm() < 1e-15);
        assert!((out[[0, 1]] - Complex::new(inv_two_pi, 0.0)).norm() < 1e-15);
        let zero = forward_frame(Array2::zeros((1, 1)).view(), &CoilSet::uniform(&g), &frame, &g).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn shift_multiplies_by_phase() {
        let g = Grid::<f64>::unit_square(1, 6, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rho = random_slice(&g, &mut rng);
        rho.row_mut(5).fill(0.0);
        let shifted = Array2::from_shape_fn((6, 5), |(i, j)| if i == 0 { 0.0 } else { rho[[i - 1, j]] });
        let frame = PatternFrame {
            freqs: vec![[1.3, -0.4], [-7.0, 2.0]],
            weights: vec![1.0, 0.5],
        };
        let coils = CoilSet::uniform(&g);
        let a = forward_frame(rho.view(), &coils, &frame, &g).unwrap();
        let b = forward_frame(shifted.view(), &coils, &frame, &g).unwrap();
        for (s, w) in frame.freqs.iter().enumerate() {
            let phase = Complex::from_polar(1.0, -w[0] * g.dx());
            assert!((b[[0, s]] - a[[0, s]] * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_paths_match_direct_summation() {
        let g = Grid::<f64>::new(3, 5, 4, [-0.5, -0.3], [0.6, 0.5]).unwrap();
        let coils = CoilSet::gaussian_ring(&g, 3, 0.4, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for pattern in [
            pattern_cartesian_lines(&g, 6).unwrap(),
            pattern_radial(&g, 7).unwrap(),
            pattern_full_cartesian(&g).unwrap(),
        ] {
            let op = MriOperator::new(&g, coils.clone(), pattern.clone()).unwrap();
            for k in 0..g.nt {
                let rho = random_slice(&g, &mut rng);
                let fast = op.forward_frame(k, rho.view()).unwrap();
                let slow = forward_frame(rho.view(), &coils, &pattern.frames[k], &g).unwrap();
                assert!(fast.iter().zip(&slow).all(|(a, b)| (a - b).norm() < 1e-13));
                let h = random_frame(3, pattern.frames[k].len(), &mut rng);
                let fast = op.adjoint_frame(k, &h).unwrap();
                let slow = adjoint_frame(&h, &coils, &pattern.frames[k], &g).unwrap();
                assert!(fast.iter().zip(&slow).all(|(a, b)| (a - b).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn adjoint_identity_for_every_pattern() {
        let g = Grid::<f64>::unit_square(4, 6, 5).unwrap();
        let coils = CoilSet::gaussian_ring(&g, 2, 0.5, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ops: Vec<Box<dyn FrameOperator<f64>>> = vec![
            Box::new(MriOperator::new(&g, coils.clone(), pattern_cartesian_lines(&g, 5).unwrap()).unwrap()),
            Box::new(MriOperator::new(&g, coils.clone(), pattern_radial(&g, 8).unwrap()).unwrap()),
            Box::new(MriOperator::new(&g, coils, pattern_full_cartesian(&g).unwrap()).unwrap()),
            Box::new(IdentityOperator::with_frame_weights(&g, vec![2.0, 0.0, 1.0, 0.5]).unwrap()),
        ];
        for op in &ops {
            for k in 0..g.nt {
                let rho = random_slice(&g, &mut rng);
                let h = random_frame(op.n_coils(), op.n_samples(k), &mut rng);
                let lhs = frame_inner(&op.forward_frame(k, rho.view()).unwrap(), &h, op.weights(k));
                let back = op.adjoint_frame(k, &h).unwrap();
                let rhs = (&rho * &back).sum() * g.cell_area();
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn matched_filter_peaks_at_the_source_cell() {
        let g = Grid::<f64>::unit_square(1, 8, 8).unwrap();
        let op = MriOperator::new(&g, CoilSet::uniform(&g), pattern_full_cartesian(&g).unwrap()).unwrap();
        let mut rho = Array2::zeros((8, 8));
        rho[[2, 5]] = 1.0;
        let h = op.forward_frame(0, rho.view()).unwrap();
        let back = op.adjoint_frame(0, &h).unwrap();
        let argmax = back.indexed_iter().fold(((0, 0), f64::MIN), |a, (ij, &v)| if v > a.1 { (ij, v) } else { a });
        assert_eq!(argmax.0, (2, 5));
        // the full lattice makes the normal operator the identity
        assert!((back[[2, 5]] - 1.0).abs() < 1e-12);
        assert!(op.adjoint_frame(0, &Array2::zeros(h.dim())).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn power_iteration_respects_the_norm_bound() {
        let g = Grid::<f64>::unit_square(3, 6, 6).unwrap();
        let coils = CoilSet::gaussian_ring(&g, 3, 0.4, 0.6).unwrap();
        for pattern in [pattern_cartesian_lines(&g, 8).unwrap(), pattern_radial(&g, 8).unwrap()] {
            let op = MriOperator::new(&g, coils.clone(), pattern).unwrap();
            for k in 0..g.nt {
                let est = frame_norm_sq(&op, k, 50, 1).unwrap();
                assert!(est > 0.0 && est <= op.norm_sq_bound(k) * (1.0 + 1e-12));
            }
        }
        let id = IdentityOperator::with_frame_weights(&g, vec![3.0, 0.0, 1.0]).unwrap();
        assert!((frame_norm_sq(&id, 0, 20, 0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(frame_norm_sq(&id, 1, 20, 0).unwrap(), 0.0);
    }

    #[test]
    fn shape_errors() {
        let g = Grid::<f64>::unit_square(2, 3, 3).unwrap();
        let op = MriOperator::new(&g, CoilSet::uniform(&g), pattern_radial(&g, 4).unwrap()).unwrap();
        assert!(op.forward_frame(0, Array2::zeros((2, 3)).view()).is_err());
        assert!(op.adjoint_frame(0, &Array2::zeros((2, 4))).is_err());
        assert!(op.forward_frame(5, Array2::zeros((3, 3)).view()).is_err());
        let short = Grid::<f64>::unit_square(3, 3, 3).unwrap();
        assert!(MriOperator::new(&short, CoilSet::uniform(&g), pattern_radial(&g, 4).unwrap()).is_err());
    }
}
