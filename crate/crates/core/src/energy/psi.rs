//! The perspective integrand `Psi_delta` and its dual set `K_delta`.
//!
//! `Psi_delta` is the support function of
//! `K_delta = { (a, b, c) : a + (|b|^2 + c^2/delta^2)/2 <= 0 }`, so the
//! proximal map of any positive multiple of `Psi_delta` reduces to a
//! Euclidean projection onto a scaled copy of `K_delta`.

use super::params::Delta;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Value of `Psi_delta`, with infinity carried explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiValue<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> PsiValue<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    /// The value as a scalar, `+inf` for [`PsiValue::Infinite`].
    pub fn value(&self) -> T {
        match *self {
            Self::Finite(v) => v,
            Self::Infinite => T::infinity(),
        }
    }
}

/// `Psi_delta(t, x, y)`:
/// `(|x|^2 + delta^2 y^2) / (2t)` for `t > 0`, `0` at the origin, `+inf`
/// otherwise. For `delta = inf` any `y != 0` is infinite.
pub fn psi_delta<T: Real>(t: T, x: [T; 2], y: T, delta: Delta<T>) -> PsiValue<T> {
    if t.is_nan() || x[0].is_nan() || x[1].is_nan() || y.is_nan() {
        return PsiValue::Infinite;
    }
    if t > T::zero() {
        let xx = x[0] * x[0] + x[1] * x[1];
        let v = match delta {
            Delta::Finite(d) => (xx + d * d * y * y) / (t + t),
            Delta::Infinite if y.is_zero() => xx / (t + t),
            Delta::Infinite => return PsiValue::Infinite,
        };
        if v.is_finite() {
            PsiValue::Finite(v)
        } else {
            PsiValue::Infinite
        }
    } else if t.is_zero() && x[0].is_zero() && x[1].is_zero() && y.is_zero() {
        PsiValue::Finite(T::zero())
    } else {
        PsiValue::Infinite
    }
}

/// Exact membership test `a + (|b|^2 + c^2/delta^2)/2 <= 0`.
pub fn in_k_delta<T: Real>(a: T, b: [T; 2], c: T, delta: Delta<T>) -> bool {
    a + T::lit(0.5) * (b[0] * b[0] + b[1] * b[1] + c * c * delta.inv_sq()) <= T::zero()
}

/// Projection onto `scale * K_delta` together with the KKT multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KProjection<T> {
    /// Projected point `(a, b_x, b_y, c)`.
    pub point: [T; 4],
    /// Multiplier `lambda >= 0` with `p - q = lambda * grad h(q)`.
    pub multiplier: T,
}

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITERS: usize = 100;

/// Euclidean projection of `p = (a, b_x, b_y, c)` onto
/// `{ q : q_a/scale + (|q_b/scale|^2 + (q_c/scale)^2/delta^2)/2 <= 0 }`.
///
/// The multiplier solves a scalar monotone equation, found by Newton's method
/// safeguarded with bisection on a bracket derived from the data.
pub fn project_k_delta_full<T: Real>(p: [T; 4], delta: Delta<T>, scale: T) -> Result<KProjection<T>> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::InvalidParameter {
            name: "scale",
            reason: format!("must be positive and finite, got {scale}"),
        });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "point",
            reason: "projection requires finite coordinates".into(),
        });
    }
    let [a0, bx, by, c0] = p;
    let inv_d2 = delta.inv_sq();
    let bb = bx * bx + by * by;
    let cc = c0 * c0 * inv_d2;
    let two_s = scale + scale;
    let g0 = a0 + (bb + cc) / two_s;
    if g0 <= T::zero() {
        return Ok(KProjection {
            point: p,
            multiplier: T::zero(),
        });
    }
    // g(l) = a0 - l + (bb/(1+l/s)^2 + cc/(1+l inv_d2/s)^2) / (2s), decreasing and convex.
    let eval = |l: T| -> (T, T) {
        let fb = T::one() + l / scale;
        let fc = T::one() + l * inv_d2 / scale;
        let g = a0 - l + (bb / (fb * fb) + cc / (fc * fc)) / two_s;
        let dg = -T::one()
            - bb / (scale * scale * fb * fb * fb)
            - cc * inv_d2 / (scale * scale * fc * fc * fc);
        (g, dg)
    };
    // The curvature terms are at most p_sum / l^2, so g(a+ + cbrt(p_sum)) <= 0.
    let c_sq = match delta {
        Delta::Finite(d) => d * d * c0 * c0,
        Delta::Infinite => T::zero(),
    };
    let p_sum = T::lit(0.5) * scale * (bb + c_sq);
    let a_plus = a0.max(T::zero());
    let (mut lo, mut hi) = (a_plus, g0.min(a_plus + p_sum.cbrt()));
    // Newton from the right overshoots once, then climbs monotonically.
    let mut l = hi;
    let tol = T::lit(ROOT_TOL);
    for _ in 0..ROOT_MAX_ITERS {
        let (g, dg) = eval(l);
        if g.is_zero() {
            break;
        }
        if g > T::zero() {
            lo = l;
        } else {
            hi = l;
        }
        let mut next = l - g / dg;
        if !(next >= lo && next <= hi) || !next.is_finite() {
            next = T::lit(0.5) * (lo + hi);
        }
        let step = (next - l).abs();
        l = next;
        if step <= tol * (T::one() + l) || hi - lo <= tol * (T::one() + hi) {
            break;
        }
    }
    let fb = T::one() + l / scale;
    let fc = T::one() + l * inv_d2 / scale;
    Ok(KProjection {
        point: [a0 - l, bx / fb, by / fb, c0 / fc],
        multiplier: l,
    })
}

/// Projection onto `scale * K_delta`.
pub fn project_k_delta<T: Real>(p: [T; 4], delta: Delta<T>, scale: T) -> Result<[T; 4]> {
    project_k_delta_full(p, delta, scale).map(|r| r.point)
}

/// `prox_{s Psi_delta}(p) = p - proj_{s K_delta}(p)`.
///
/// Assembled from the multiplier so the output always lies in the domain of
/// `Psi_delta`: zero when `p` is in `s K_delta`, positive density otherwise.
pub fn prox_psi<T: Real>(p: [T; 4], delta: Delta<T>, s: T) -> Result<[T; 4]> {
    let KProjection { point: q, multiplier: l } = project_k_delta_full(p, delta, s)?;
    if l.is_zero() {
        return Ok([T::zero(); 4]);
    }
    let c = match delta {
        Delta::Finite(_) => l * q[3] * delta.inv_sq() / s,
        Delta::Infinite => T::zero(),
    };
    Ok([l, l * q[1] / s, l * q[2] / s, c])
}

/// Moreau envelope `min_w Psi(w) + |w - p|^2 / (2 eps)`: finite everywhere,
/// below `Psi`, and increasing to `Psi` as `eps -> 0`.
pub fn psi_envelope<T: Real>(p: [T; 4], delta: Delta<T>, eps: T) -> Result<T> {
    let w = prox_psi(p, delta, eps)?;
    let psi = psi_delta(w[0], [w[1], w[2]], w[3], delta).value();
    let dist: T = (0..4).map(|i| (w[i] - p[i]) * (w[i] - p[i])).sum();
    Ok(psi + dist / (eps + eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: Delta<f64> = Delta::Finite(1.0);

    #[test]
    fn psi_cases() {
        assert_eq!(psi_delta(0.0, [0.0, 0.0], 0.0, ONE), PsiValue::Finite(0.0));
        assert_eq!(psi_delta(-1.0, [0.0, 0.0], 0.0, ONE), PsiValue::Infinite);
        assert_eq!(psi_delta(2.0, [2.0, 0.0], 0.0, ONE), PsiValue::Finite(1.0));
        assert_eq!(psi_delta(0.0, [1e-300, 0.0], 0.0, ONE), PsiValue::Infinite);
        assert_eq!(psi_delta(0.0, [0.0, 0.0], 1.0, ONE), PsiValue::Infinite);
        assert_eq!(
            psi_delta(2.0, [1.0, 1.0], 1.0, Delta::Finite(2.0)),
            PsiValue::Finite((2.0 + 4.0) / 4.0)
        );
    }

    #[test]
    fn psi_infinite_delta() {
        assert_eq!(psi_delta(1.0, [1.0, 0.0], 0.5, Delta::Infinite), PsiValue::Infinite);
        assert_eq!(psi_delta(1.0, [1.0, 0.0], 0.0, Delta::Infinite), PsiValue::Finite(0.5));
        assert_eq!(psi_delta(0.0, [0.0, 0.0], 0.0, Delta::<f64>::Infinite), PsiValue::Finite(0.0));
    }

    #[test]
    fn k_delta_membership() {
        assert!(in_k_delta(0.0, [0.0, 0.0], 0.0, ONE));
        assert!(in_k_delta(-1.0, [1.0, 0.0], 1.0, ONE));
        assert!(!in_k_delta(0.1, [0.0, 0.0], 0.0, ONE));
        assert!(in_k_delta(-0.5, [1.0, 0.0], 100.0, Delta::Infinite));
    }

    #[test]
    fn projection_fixes_members_and_maps_apex() {
        let p = [-2.0, 0.5, -0.3, 0.7];
        assert_eq!(project_k_delta(p, ONE, 1.0).unwrap(), p);
        let q = project_k_delta([3.0, 0.0, 0.0, 0.0], ONE, 1.0).unwrap();
        assert!(q.iter().all(|v| v.abs() < 1e-12), "{q:?}");
    }

    #[test]
    fn projection_lands_on_scaled_boundary() {
        for (p, s) in [
            ([1.0, 2.0, -1.0, 0.5], 1.0),
            ([0.0, 10.0, 3.0, -4.0], 0.01),
            ([5.0, -0.1, 0.2, 7.0], 50.0),
        ] {
            for delta in [ONE, Delta::Finite(0.3), Delta::Infinite] {
                let q = project_k_delta(p, delta, s).unwrap();
                let h = q[0] / s + 0.5 * ((q[1] / s).powi(2) + (q[2] / s).powi(2) + (q[3] / s).powi(2) * delta.inv_sq());
                assert!(h.abs() < 1e-10 * (1.0 + q[0].abs() / s), "{h} {q:?}");
            }
        }
    }

    #[test]
    fn prox_output_is_in_domain() {
        for p in [[-1e-9, 1e-9, 0.0, 1e-9], [1.0, 0.3, -0.2, 0.1], [-3.0, 0.0, 0.0, 0.0]] {
            let w = prox_psi(p, ONE, 0.5).unwrap();
            assert!(psi_delta(w[0], [w[1], w[2]], w[3], ONE).is_finite());
        }
        let w = prox_psi([1.0, 0.3, 0.0, 0.4], Delta::Infinite, 0.5).unwrap();
        assert_eq!(w[3], 0.0);
    }

    #[test]
    fn envelope_is_below_and_close_to_psi() {
        let p = [1.3, 0.4, -0.2, 0.25];
        let psi = psi_delta(p[0], [p[1], p[2]], p[3], ONE).value();
        let e = psi_envelope(p, ONE, 1e-9).unwrap();
        assert!(e <= psi + 1e-15);
        assert!(psi - e < 1e-8);
        assert!(psi_envelope([-1.0, 1.0, 0.0, 0.0], ONE, 1e-3).unwrap().is_finite());
    }

    #[test]
    fn invalid_inputs() {
        assert!(project_k_delta([0.0; 4], ONE, 0.0).is_err());
        assert!(project_k_delta([f64::NAN, 0.0, 0.0, 0.0], ONE, 1.0).is_err());
    }
}
