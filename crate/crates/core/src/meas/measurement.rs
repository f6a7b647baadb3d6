use ndarray::Array2;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_shape, Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Per-frame complex sample values `f_k in H_k`, shaped `(coils, samples)`,
/// together with the quadrature weights that define the frame norms.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    pub frames: Vec<Array2<Complex<T>>>,
    pub weights: Vec<Vec<T>>,
    /// Values are real (identity sampling); noise then has no imaginary part.
    pub real_valued: bool,
}

impl<T: Real> Measurement<T> {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// Frame count, sample counts and weights agree with `other`.
    pub fn conforms(&self, other: &Self) -> Result<()> {
        if self.frames.len() != other.frames.len() {
            return Err(Error::Shape {
                what: "measurement frames",
                expected: vec![other.frames.len()],
                got: vec![self.frames.len()],
            });
        }
        for (a, b) in self.frames.iter().zip(&other.frames) {
            check_shape("measurement frame", b.shape(), a.shape())?;
        }
        if self.weights != other.weights {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "measurements use different sampling weights".into(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_layout(&self) -> Result<()> {
        if self.weights.len() != self.frames.len() {
            return Err(Error::Shape {
                what: "measurement weights",
                expected: vec![self.frames.len()],
                got: vec![self.weights.len()],
            });
        }
        for (f, w) in self.frames.iter().zip(&self.weights) {
            if f.ncols() != w.len() {
                return Err(Error::Shape {
                    what: "frame samples",
                    expected: vec![w.len()],
                    got: vec![f.ncols()],
                });
            }
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.conforms(other)?;
        Ok(Self {
            frames: self.frames.iter().zip(&other.frames).map(|(a, b)| a - b).collect(),
            weights: self.weights.clone(),
            real_valued: self.real_valued && other.real_valued,
        })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            frames: self.frames.iter().map(|f| f.mapv(|z| z * a)).collect(),
            weights: self.weights.clone(),
            real_valued: self.real_valued,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.frames
            .iter()
            .flat_map(|f| f.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Real inner product `Re sum_j sum_s w_s a_j(s) conj(b_j(s))` of `H_k`.
pub fn frame_inner<T: Real>(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>, weights: &[T]) -> T {
    let mut acc = T::zero();
    for (ra, rb) in a.rows().into_iter().zip(b.rows()) {
        for ((x, y), &w) in ra.iter().zip(rb.iter()).zip(weights) {
            acc += w * (x.re * y.re + x.im * y.im);
        }
    }
    acc
}

/// `|h|_{H_k} = (sum_j sum_s w_s |h_j(s)|^2)^{1/2}`.
pub fn ht_norm<T: Real>(h: &Array2<Complex<T>>, weights: &[T]) -> T {
    frame_inner(h, h, weights).sqrt()
}

/// `|f|_{L^2(0,1; H)} = (sum_k dt |f_k|_{H_k}^2)^{1/2}`.
pub fn l2h_norm<T: Real>(f: &Measurement<T>, g: &Grid<T>) -> T {
    f.frames
        .iter()
        .zip(&f.weights)
        .map(|(h, w)| {
            let n = ht_norm(h, w);
            n * n
        })
        .sum::<T>()
        .mul(g.dt())
        .sqrt()
}

/// Add a seeded complex Gaussian perturbation rescaled to `L^2(H)` norm
/// exactly `gamma`. Returns the noisy data and the achieved noise level.
pub fn add_noise<T: Real>(f: &Measurement<T>, gamma: T, seed: u64, g: &Grid<T>) -> Result<(Measurement<T>, T)> {
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be nonnegative and finite, got {gamma}"),
        });
    }
    f.check_layout()?;
    if gamma.is_zero() {
        return Ok((f.clone(), T::zero()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> T {
        let v: f64 = StandardNormal.sample(&mut rng);
        T::lit(v)
    };
    let noise = Measurement {
        frames: f
            .frames
            .iter()
            .map(|fr| {
                fr.mapv(|_| {
                    let re = draw();
                    let im = if f.real_valued { T::zero() } else { draw() };
                    Complex::new(re, im)
                })
            })
            .collect(),
        weights: f.weights.clone(),
        real_valued: f.real_valued,
    };
    let norm = l2h_norm(&noise, g);
    if !(norm > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "measurement has no samples to perturb".into(),
        });
    }
    let scale = gamma / norm;
    let frames = f
        .frames
        .iter()
        .zip(&noise.frames)
        .map(|(a, n)| a + &n.mapv(|z| z * scale))
        .collect();
    let out = Measurement {
        frames,
        weights: f.weights.clone(),
        real_valued: f.real_valued,
    };
    let achieved = l2h_norm(&out.sub(f)?, g);
    Ok((out, achieved))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(g: &Grid<f64>) -> Measurement<f64> {
        Measurement {
            frames: (0..g.nt)
                .map(|k| Array2::from_shape_fn((2, 3 + k), |(j, s)| Complex::new(j as f64 - s as f64, 0.5 * s as f64)))
                .collect(),
            weights: (0..g.nt).map(|k| vec![0.5; 3 + k]).collect(),
            real_valued: false,
        }
    }

    #[test]
    fn single_sample_norm() {
        let h = Array2::from_elem((1, 1), Complex::new(0.0, 3.0));
        assert!((ht_norm(&h, &[2.0]) - 18f64.sqrt()).abs() < 1e-15);
        assert_eq!(ht_norm(&Array2::<Complex<f64>>::zeros((2, 3)), &[1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn weight_scaling_is_square_root() {
        let g = Grid::<f64>::unit_square(3, 2, 2).unwrap();
        let f = sample(&g);
        let mut scaled = f.clone();
        for w in &mut scaled.weights {
            w.iter_mut().for_each(|v| *v *= 4.0);
        }
        assert!((l2h_norm(&scaled, &g) - 2.0 * l2h_norm(&f, &g)).abs() < 1e-13);
    }

    #[test]
    fn noise_is_calibrated_and_deterministic() {
        let g = Grid::<f64>::unit_square(3, 2, 2).unwrap();
        let f = sample(&g);
        let (same, achieved) = add_noise(&f, 0.0, 1, &g).unwrap();
        assert_eq!(same, f);
        assert_eq!(achieved, 0.0);
        for gamma in [1e-6, 0.1, 3.0] {
            let (a, achieved) = add_noise(&f, gamma, 42, &g).unwrap();
            let (b, _) = add_noise(&f, gamma, 42, &g).unwrap();
            assert_eq!(a, b);
            assert!((achieved - gamma).abs() < 1e-12 * gamma.max(1.0));
            assert!((l2h_norm(&a.sub(&f).unwrap(), &g) - gamma).abs() < 1e-12);
        }
        let (c, _) = add_noise(&f, 0.1, 43, &g).unwrap();
        assert_ne!(c, add_noise(&f, 0.1, 42, &g).unwrap().0);
        assert!(add_noise(&f, -1.0, 0, &g).is_err());
    }

    #[test]
    fn real_noise_stays_real() {
        let g = Grid::<f64>::unit_square(2, 2, 2).unwrap();
        let mut f = sample(&g);
        f.real_valued = true;
        let (n, _) = add_noise(&f, 0.2, 7, &g).unwrap();
        for (a, b) in n.frames.iter().zip(&f.frames) {
            assert!(a.iter().zip(b).all(|(x, y)| x.im == y.im));
        }
    }
}
