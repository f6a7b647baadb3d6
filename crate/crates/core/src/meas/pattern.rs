//! Per-frame k-space sampling measures.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Samples of one frame: frequencies (radians per unit length) and their
/// positive quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternFrame<T> {
    pub freqs: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

impl<T: Real> PatternFrame<T> {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// A discrete time-dependent sampling measure, one [`PatternFrame`] per time cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPattern<T> {
    pub frames: Vec<PatternFrame<T>>,
}

impl<T: Real> SamplingPattern<T> {
    pub fn new(frames: Vec<PatternFrame<T>>) -> Result<Self> {
        for (k, f) in frames.iter().enumerate() {
            if f.freqs.len() != f.weights.len() {
                return Err(Error::Shape {
                    what: "pattern weights",
                    expected: vec![f.freqs.len()],
                    got: vec![f.weights.len()],
                });
            }
            if f.weights.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "weights",
                    reason: format!("frame {k} has a non-positive quadrature weight"),
                });
            }
            if f.freqs.iter().flatten().any(|w| !w.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "freqs",
                    reason: format!("frame {k} has a non-finite frequency"),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn total_weight(&self, k: usize) -> T {
        self.frames[k].total_weight()
    }

    /// `max_k total_weight(k)`, the uniform mass bound of the sampling measures.
    pub fn max_total_weight(&self) -> T {
        self.frames
            .iter()
            .map(|f| f.total_weight())
            .fold(T::zero(), T::max)
    }

    pub fn n_samples(&self) -> usize {
        self.frames.iter().map(|f| f.len()).sum()
    }

    /// Start offset of every frame in the concatenated sample list, plus the total.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.frames.len() + 1);
        let mut acc = 0;
        out.push(0);
        for f in &self.frames {
            acc += f.len();
            out.push(acc);
        }
        out
    }
}

fn check_count(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter {
            name: "samples_per_frame",
            reason: format!("need at least 2 samples, got {m}"),
        });
    }
    Ok(())
}

/// Midpoints of `m` equal subsegments of `[-1, 1]`, each carrying weight `2/m`.
fn midpoints<T: Real>(m: usize) -> (Vec<T>, T) {
    let mf = T::from_usize_lossy(m);
    let h = T::lit(2.0) / mf;
    let pts = (0..m)
        .map(|s| -T::one() + (T::from_usize_lossy(s) + T::lit(0.5)) * h)
        .collect();
    (pts, h)
}

/// Horizontal lines `[-1, 1] x {2 t_k - 1}` at frame midpoints `t_k`,
/// discretized by the midpoint rule. Every frame has total weight 2.
pub fn pattern_cartesian_lines<T: Real>(g: &Grid<T>, samples_per_line: usize) -> Result<SamplingPattern<T>> {
    check_count(samples_per_line)?;
    let (pts, w) = midpoints::<T>(samples_per_line);
    let frames = (0..g.nt)
        .map(|k| {
            let ordinate = T::lit(2.0) * g.t_center(k) - T::one();
            PatternFrame {
                freqs: pts.iter().map(|&s| [s, ordinate]).collect(),
                weights: vec![w; samples_per_line],
            }
        })
        .collect();
    SamplingPattern::new(frames)
}

/// Diameters `{(cos(pi t_k) s, sin(pi t_k) s) : |s| < 1}` rotating with time,
/// discretized by the midpoint rule. Every frame has total weight 2.
pub fn pattern_radial<T: Real>(g: &Grid<T>, samples_per_spoke: usize) -> Result<SamplingPattern<T>> {
    pattern_radial_scaled(g, samples_per_spoke, T::one())
}

/// Radial spokes of radius `radius`; weights scale so the total weight is the
/// spoke length `2 * radius`.
pub fn pattern_radial_scaled<T: Real>(g: &Grid<T>, samples_per_spoke: usize, radius: T) -> Result<SamplingPattern<T>> {
    check_count(samples_per_spoke)?;
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidParameter {
            name: "radius",
            reason: format!("must be positive, got {radius}"),
        });
    }
    let (pts, w) = midpoints::<T>(samples_per_spoke);
    let frames = (0..g.nt)
        .map(|k| {
            let angle = T::PI() * g.t_center(k);
            let (sin, cos) = angle.sin_cos();
            PatternFrame {
                freqs: pts.iter().map(|&s| [cos * s * radius, sin * s * radius]).collect(),
                weights: vec![w * radius; samples_per_spoke],
            }
        })
        .collect();
    SamplingPattern::new(frames)
}

/// Moving point sets `P_t = {x_t^1, ..., x_t^M}` with unit weights, evaluated
/// at frame midpoints. Points within a frame must be pairwise distinct.
pub fn pattern_cs_points<T: Real, F>(trajectories: &[F], g: &Grid<T>) -> Result<SamplingPattern<T>>
where
    F: Fn(T) -> [T; 2],
{
    if trajectories.is_empty() {
        return Err(Error::InvalidParameter {
            name: "trajectories",
            reason: "need at least one trajectory".into(),
        });
    }
    let mut frames = Vec::with_capacity(g.nt);
    for k in 0..g.nt {
        let t = g.t_center(k);
        let freqs: Vec<[T; 2]> = trajectories.iter().map(|f| f(t)).collect();
        for a in 0..freqs.len() {
            for b in a + 1..freqs.len() {
                if freqs[a] == freqs[b] {
                    return Err(Error::CoincidentSamples {
                        frame: k,
                        first: a,
                        second: b,
                    });
                }
            }
        }
        let n = freqs.len();
        frames.push(PatternFrame {
            freqs,
            weights: vec![T::one(); n],
        });
    }
    SamplingPattern::new(frames)
}

/// The full DFT lattice `2 pi (p / L_x, q / L_y)`, `p in [-nx/2, nx/2)`, in
/// every frame. Weights are the lattice cell area in frequency space, which
/// makes the forward operator an isometry for a unit coil.
pub fn pattern_full_cartesian<T: Real>(g: &Grid<T>) -> Result<SamplingPattern<T>> {
    let lx = g.upper[0] - g.lower[0];
    let ly = g.upper[1] - g.lower[1];
    let two_pi = T::lit(2.0) * T::PI();
    let w = (two_pi / lx) * (two_pi / ly);
    let idx = |n: usize, p: usize| T::from_usize_lossy(p) - T::from_usize_lossy(n / 2);
    let mut freqs = Vec::with_capacity(g.n_cells());
    for p in 0..g.nx {
        for q in 0..g.ny {
            freqs.push([two_pi * idx(g.nx, p) / lx, two_pi * idx(g.ny, q) / ly]);
        }
    }
    let frame = PatternFrame {
        weights: vec![w; freqs.len()],
        freqs,
    };
    SamplingPattern::new(vec![frame; g.nt])
}
