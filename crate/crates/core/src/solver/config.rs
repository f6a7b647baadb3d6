use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the reconstruction treats the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFidelity {
    /// Quadratic misfit `1/2 |K rho - f|^2`.
    Quadratic,
    /// Hard constraint `K rho = f`; the solver then minimizes
    /// `alpha B_delta + beta |rho|` over exact-data solutions.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub params: EnergyParams<T>,
    pub fidelity: DataFidelity,
    pub max_iters: usize,
    /// Primal step `tau`; `0.99 / L` when unset.
    pub primal_step: Option<T>,
    /// Dual step `sigma`; `0.99 / L` when unset.
    pub dual_step: Option<T>,
    /// Rebalance `tau` and `sigma` at fixed product from the primal and dual
    /// residuals, with geometrically decaying adjustments.
    pub adaptive: bool,
    /// Over-relaxation in `[0, 1]`.
    pub theta: T,
    /// Relative continuity residual accepted at every recorded iterate.
    pub feasibility_tol: T,
    /// Stop once `gap / (1 + |objective|)` falls below this.
    pub gap_tol: T,
    /// Operator norm `L`; estimated by power iteration when unset.
    pub op_norm: Option<T>,
    pub power_iters: usize,
    /// Random initial primal iterate from this seed; zero when unset.
    pub init_seed: Option<u64>,
    /// Record a trace row every this many iterations (and at the last one).
    pub record_every: usize,
    /// Envelope parameter used to report energies of iterates.
    pub envelope_eps: T,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(params: EnergyParams<T>) -> Self {
        Self {
            params,
            fidelity: DataFidelity::Quadratic,
            max_iters: 5000,
            primal_step: None,
            dual_step: None,
            adaptive: true,
            theta: T::one(),
            feasibility_tol: T::lit(1e-8),
            gap_tol: T::lit(1e-6),
            op_norm: None,
            power_iters: 50,
            init_seed: None,
            record_every: 10,
            envelope_eps: T::lit(1e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let positive = |name: &'static str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("feasibility_tol", self.feasibility_tol)?;
        positive("gap_tol", self.gap_tol)?;
        positive("envelope_eps", self.envelope_eps)?;
        if let Some(v) = self.primal_step {
            positive("primal_step", v)?;
        }
        if let Some(v) = self.dual_step {
            positive("dual_step", v)?;
        }
        if let Some(v) = self.op_norm {
            positive("op_norm", v)?;
        }
        if !(self.theta >= T::zero() && self.theta <= T::one()) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must lie in [0, 1], got {}", self.theta),
            });
        }
        for (name, n) in [
            ("max_iters", self.max_iters),
            ("power_iters", self.power_iters),
            ("record_every", self.record_every),
        ] {
            if n == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    /// `(tau, sigma)` for operator norm `l`, checking `tau sigma l^2 <= 1`.
    pub fn steps(&self, l: T) -> Result<(T, T)> {
        let default = T::lit(0.99) / l;
        let tau = self.primal_step.unwrap_or(default);
        let sigma = self.dual_step.unwrap_or(default);
        let product = tau * sigma * l * l;
        if product > T::one() {
            return Err(Error::StepSize {
                product: product.as_f64(),
            });
        }
        Ok((tau, sigma))
    }
}
