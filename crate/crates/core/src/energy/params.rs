use crate::error::{Error, Result};
use crate::scalar::Real;

/// Growth penalty `delta` in `(0, +inf]`.
///
/// `Infinite` forbids growth: any nonzero source has infinite energy and the
/// `c^2 / delta^2` term of `K_delta` vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Delta<T> {
    pub fn finite(delta: T) -> Result<Self> {
        if delta > T::zero() && delta.is_finite() {
            Ok(Self::Finite(delta))
        } else {
            Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must be positive and finite, got {delta}"),
            })
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// `1 / delta^2`, zero for the infinite case.
    #[inline]
    pub fn inv_sq(&self) -> T {
        match *self {
            Self::Finite(d) => (d * d).recip(),
            Self::Infinite => T::zero(),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Self::Finite(d) => d.as_f64(),
            Self::Infinite => f64::INFINITY,
        }
    }
}

/// Regularization weights of the Tikhonov functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams<T> {
    pub alpha: T,
    pub beta: T,
    pub delta: Delta<T>,
}

impl<T: Real> EnergyParams<T> {
    pub fn new(alpha: T, beta: T, delta: Delta<T>) -> Result<Self> {
        let p = Self { alpha, beta, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if let Delta::Finite(d) = self.delta {
            Delta::finite(d)?;
        }
        Ok(())
    }
}
