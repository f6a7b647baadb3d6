use std::time::Instant;

use ndarray::{Array3, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DataFidelity, SolverConfig};
use crate::energy::{objective_terms_relaxed, project_k_delta, Delta, ObjectiveTerms};
use crate::error::{Error, Result};
use crate::grid::{
    interp_adjoint, interp_to_centered, relative_residual, CenteredTriple, ContinuityProjector, Grid, StaggeredTriple,
};
use crate::meas::{frame_inner, FrameOperator, Measurement};
use crate::random::random_staggered;
use crate::scalar::Real;

/// Step balancing: checked every `ADAPT_EVERY` iterations, triggered when
/// `tau / sigma` is off by more than `ADAPT_BAND`, changing it by at most
/// `1 + a` where `a` starts at `ADAPT_START` and decays by `ADAPT_DECAY`
/// per change, so the steps settle after finitely many significant changes.
const ADAPT_EVERY: usize = 10;
const ADAPT_START: f64 = 1.0;
const ADAPT_DECAY: f64 = 0.95;
const ADAPT_BAND: f64 = 1.5;

/// Largest negative density, relative to the peak density or the density
/// scale of the data, cleared by a constant lift.
pub const LIFT_TOL: f64 = 1e-4;

/// Densities below this are a solver failure.
pub const DENSITY_FLOOR: f64 = -1e-8;

/// Primal and dual iterates of the splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct PdhgState<T> {
    pub primal: StaggeredTriple<T>,
    /// Dual of the energy block, shifted by `beta` in its density component.
    pub dual_energy: CenteredTriple<T>,
    pub dual_data: Measurement<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub iter: usize,
    pub objective: T,
    pub misfit: T,
    pub energy: T,
    pub mass: T,
    pub residual: T,
    pub gap: T,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace<T> {
    pub rows: Vec<TraceRow<T>>,
    pub stop: StopReason,
    pub iterations: usize,
    pub op_norm: T,
    /// Final `(tau, sigma)`.
    pub steps: (T, T),
}

#[derive(Debug, Clone)]
pub struct SolverOutput<T> {
    pub state: PdhgState<T>,
    pub trace: SolverTrace<T>,
    /// Smallest centered density of the returned triple.
    pub min_density: T,
    /// Constant added to every density node to clear negatives left by the
    /// iteration, at most `LIFT_TOL` times the density scale.
    pub lift: T,
}

impl<T> SolverOutput<T> {
    pub fn triple(&self) -> &StaggeredTriple<T> {
        &self.state.primal
    }
}

/// A failed solve, carrying whatever trace was recorded before the failure.
#[derive(Debug, Clone)]
pub struct SolveFailure<T> {
    pub error: Error,
    pub trace: SolverTrace<T>,
    pub last: Option<StaggeredTriple<T>>,
}

impl<T> From<SolveFailure<T>> for Error {
    fn from(f: SolveFailure<T>) -> Self {
        f.error
    }
}

impl<T> std::fmt::Display for SolveFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

/// Stacked operator `u -> (interp u, K rho_c)` and its adjoint, in the inner
/// products weighted by the cell volume (primal, energy block) and by
/// `dt` times the frame weights (data block).
struct Stack<'a, T, O: ?Sized> {
    g: &'a Grid<T>,
    op: &'a O,
}

impl<T: Real, O: FrameOperator<T> + ?Sized> Stack<'_, T, O> {
    fn apply(&self, u: &StaggeredTriple<T>) -> Result<(CenteredTriple<T>, Measurement<T>)> {
        let c = interp_to_centered(u, self.g)?;
        let d = self.op.forward(&c.rho)?;
        Ok((c, d))
    }

    fn adjoint(&self, y: &CenteredTriple<T>, h: &Measurement<T>) -> Result<StaggeredTriple<T>> {
        let mut w = y.clone();
        w.rho += &self.op.adjoint(h)?;
        interp_adjoint(&w, self.g)
    }
}

fn meas_dot<T: Real>(a: &Measurement<T>, b: &Measurement<T>, g: &Grid<T>) -> T {
    a.frames
        .iter()
        .zip(&b.frames)
        .zip(&a.weights)
        .map(|((x, y), w)| frame_inner(x, y, w))
        .sum::<T>()
        * g.dt()
}

fn volume_norm<T: Real>(u: &StaggeredTriple<T>, g: &Grid<T>) -> T {
    u.norm() * g.cell_volume().sqrt()
}

fn projector<T: Real>(g: &Grid<T>, delta: Delta<T>) -> ContinuityProjector<T> {
    ContinuityProjector::spectral(g, !delta.is_infinite())
}

/// Power-iteration estimate of the norm of the stacked operator restricted to
/// the continuity set, inflated by 2% against underestimation.
pub fn estimate_op_norm<T: Real, O: FrameOperator<T> + ?Sized>(
    op: &O,
    g: &Grid<T>,
    delta: Delta<T>,
    iters: usize,
) -> Result<T> {
    let stack = Stack { g, op };
    let proj = projector(g, delta);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = proj.project(&random_staggered(g, &mut rng))?;
    let mut lambda = T::zero();
    for _ in 0..iters {
        let n = v.norm();
        if n.is_zero() {
            break;
        }
        v.scale(n.recip());
        let (c, d) = stack.apply(&v)?;
        let w = proj.project(&stack.adjoint(&c, &d)?)?;
        lambda = w.dot(&v);
        v = w;
    }
    Ok(lambda.max(T::zero()).sqrt() * T::lit(1.02))
}

fn dual_energy_prox<T: Real>(y: &mut CenteredTriple<T>, params: &crate::energy::EnergyParams<T>) -> Result<()> {
    let (nt, nx, ny) = y.rho.dim();
    for k in 0..nt {
        for i in 0..nx {
            for j in 0..ny {
                let mut p = y.cell(k, i, j);
                p[0] -= params.beta;
                let mut q = project_k_delta(p, params.delta, params.alpha)?;
                q[0] += params.beta;
                y.set_cell(k, i, j, q);
            }
        }
    }
    Ok(())
}

/// Primal objective of the current iterate (energy via its Moreau envelope)
/// and the gap surrogate
/// `|P(u) - D(y)| + (1 + |u|) |P_C K^T y| [+ (1 + |y_data|) |K rho - f|]`,
/// where `D(y) = -F^*(y)` and the bracketed term enters for exact data.
/// Each term vanishes at a saddle point.
pub fn primal_dual_gap<T: Real, O: FrameOperator<T> + ?Sized>(
    state: &PdhgState<T>,
    data: &Measurement<T>,
    op: &O,
    cfg: &SolverConfig<T>,
    g: &Grid<T>,
) -> Result<(T, ObjectiveTerms<T>)> {
    let stack = Stack { g, op };
    let u = &state.primal;
    let mut terms = objective_terms_relaxed(u, data, op, &cfg.params, g, cfg.envelope_eps)?;
    let f_dot = meas_dot(&state.dual_data, data, g);
    let dual = match cfg.fidelity {
        DataFidelity::Quadratic => {
            -(T::lit(0.5) * meas_dot(&state.dual_data, &state.dual_data, g) + f_dot)
        }
        DataFidelity::Exact => -f_dot,
    };
    let mut data_term = T::zero();
    if cfg.fidelity == DataFidelity::Exact {
        terms.total = terms.total - terms.misfit;
        let r = (T::lit(2.0) * terms.misfit).sqrt();
        let yn = meas_dot(&state.dual_data, &state.dual_data, g).sqrt();
        data_term = (T::one() + yn) * r;
    }
    let kty = stack.adjoint(&state.dual_energy, &state.dual_data)?;
    let orth = projector(g, cfg.params.delta).project(&kty)?;
    let gap = (terms.total - dual).abs() + (T::one() + volume_norm(u, g)) * volume_norm(&orth, g) + data_term;
    Ok((gap, terms))
}

/// Minimize the discrete functional over the continuity set by the
/// primal-dual hybrid gradient method.
///
/// Splitting: `G` is the indicator of the continuity set (prox: spectral
/// projection); `F` acts on `(interp u, K rho_c)`. The mass term is folded
/// into the energy block, since on the domain of `Psi_delta`
/// `beta |rho| = beta rho` is linear: the dual prox is the projection onto
/// `alpha K_delta + (beta, 0, 0, 0)`. The data block uses the closed-form
/// prox of the conjugate quadratic, or of the conjugate of an equality
/// constraint for exact data.
pub fn pdhg_solve<T: Real, O: FrameOperator<T> + ?Sized>(
    data: &Measurement<T>,
    op: &O,
    g: &Grid<T>,
    cfg: &SolverConfig<T>,
) -> std::result::Result<SolverOutput<T>, SolveFailure<T>> {
    let mut trace = SolverTrace {
        rows: Vec::new(),
        stop: StopReason::MaxIters,
        iterations: 0,
        op_norm: T::zero(),
        steps: (T::zero(), T::zero()),
    };
    let fail = |error: Error, trace: &SolverTrace<T>, last: Option<&StaggeredTriple<T>>| SolveFailure {
        error,
        trace: trace.clone(),
        last: last.cloned(),
    };
    let setup = || -> Result<(T, T, T)> {
        cfg.validate()?;
        data.conforms(&op.zero_measurement())?;
        if !data.is_finite() {
            return Err(Error::InvalidParameter {
                name: "data",
                reason: "measurement contains non-finite values".into(),
            });
        }
        let l = match cfg.op_norm {
            Some(l) => l,
            None => estimate_op_norm(op, g, cfg.params.delta, cfg.power_iters)?,
        };
        let (tau, sigma) = cfg.steps(l)?;
        Ok((l, tau, sigma))
    };
    let (l, tau, sigma) = setup().map_err(|e| fail(e, &trace, None))?;
    trace.op_norm = l;
    trace.steps = (tau, sigma);

    let stack = Stack { g, op };
    let proj = projector(g, cfg.params.delta);
    let start = Instant::now();
    let primal = match cfg.init_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            proj.project(&random_staggered(g, &mut rng)).map_err(|e| fail(e, &trace, None))?
        }
        None => StaggeredTriple::zeros(g),
    };
    let mut state = PdhgState {
        primal,
        dual_energy: CenteredTriple::zeros(g),
        dual_data: op.zero_measurement(),
    };
    let (mut tau, mut sigma) = (tau, sigma);
    let mut adapt = T::lit(ADAPT_START);
    let (mut ku, mut kd) = stack.apply(&state.primal).map_err(|e| fail(e, &trace, None))?;
    let mut ku_bar = (ku.clone(), kd.clone());

    for it in 1..=cfg.max_iters {
        let mut step = || -> Result<()> {
            let (c, d) = &ku_bar;
            state.dual_energy.rho.scaled_add(sigma, &c.rho);
            state.dual_energy.m.scaled_add(sigma, &c.m);
            state.dual_energy.mu.scaled_add(sigma, &c.mu);
            dual_energy_prox(&mut state.dual_energy, &cfg.params)?;
            let denom = T::one() + sigma;
            for ((y, kd), f) in state.dual_data.frames.iter_mut().zip(&d.frames).zip(&data.frames) {
                Zip::from(y).and(kd).and(f).for_each(|y, &kd, &f| {
                    let v = *y + kd * sigma - f * sigma;
                    *y = match cfg.fidelity {
                        DataFidelity::Quadratic => v / denom,
                        DataFidelity::Exact => v,
                    };
                });
            }
            let kty_new = stack.adjoint(&state.dual_energy, &state.dual_data)?;
            let mut next = state.primal.clone();
            next.axpy(-tau, &kty_new);
            let next = proj.project(&next)?;
            let (ku_new, kd_new) = stack.apply(&next)?;

            let theta = cfg.theta;
            let bar_of = |new: &Array3<T>, old: &Array3<T>| new * (T::one() + theta) - old * theta;
            let c_bar = CenteredTriple {
                rho: bar_of(&ku_new.rho, &ku.rho),
                m: &ku_new.m * (T::one() + theta) - &ku.m * theta,
                mu: bar_of(&ku_new.mu, &ku.mu),
            };
            let d_bar = Measurement {
                frames: kd_new
                    .frames
                    .iter()
                    .zip(&kd.frames)
                    .map(|(a, b)| a.mapv(|z| z * (T::one() + theta)) - b.mapv(|z| z * theta))
                    .collect(),
                weights: kd_new.weights.clone(),
                real_valued: kd_new.real_valued,
            };
            ku_bar = (c_bar, d_bar);
            state.primal = next;
            ku = ku_new;
            kd = kd_new;

            if cfg.adaptive && it % ADAPT_EVERY == 0 {
                let y_norm = (state.dual_energy.norm() * g.cell_volume().sqrt())
                    .hypot(meas_dot(&state.dual_data, &state.dual_data, g).sqrt());
                let target = volume_norm(&state.primal, g) / y_norm;
                let ratio = tau / sigma;
                let band = T::lit(ADAPT_BAND);
                if target.is_finite() && target > T::zero() && (target > band * ratio || ratio > band * target) {
                    let f = (target / ratio).max((T::one() + adapt).recip()).min(T::one() + adapt).sqrt();
                    tau = tau * f;
                    sigma = sigma / f;
                    adapt = adapt * T::lit(ADAPT_DECAY);
                }
            }
            Ok(())
        };
        step().map_err(|e| fail(e, &trace, Some(&state.primal)))?;
        trace.iterations = it;
        if !state.primal.is_finite() {
            return Err(fail(Error::NotFinite { iteration: it }, &trace, Some(&state.primal)));
        }
        if it % cfg.record_every == 0 || it == cfg.max_iters {
            let (gap, terms) =
                primal_dual_gap(&state, data, op, cfg, g).map_err(|e| fail(e, &trace, Some(&state.primal)))?;
            let residual = relative_residual(&state.primal, g).map_err(|e| fail(e, &trace, Some(&state.primal)))?;
            let row = TraceRow {
                iter: it,
                objective: terms.total,
                misfit: terms.misfit,
                energy: terms.energy,
                mass: terms.mass,
                residual,
                gap,
                seconds: start.elapsed().as_secs_f64(),
            };
            if ![row.objective, row.misfit, row.energy, row.mass, row.residual, row.gap]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(fail(Error::NotFinite { iteration: it }, &trace, Some(&state.primal)));
            }
            trace.rows.push(row);
            if residual > cfg.feasibility_tol {
                let e = Error::Infeasible {
                    residual: residual.as_f64(),
                };
                return Err(fail(e, &trace, Some(&state.primal)));
            }
            if gap <= cfg.gap_tol * (T::one() + terms.total.abs()) {
                trace.stop = StopReason::Converged;
                break;
            }
        }
    }

    trace.steps = (tau, sigma);
    // Negative densities at the level of the solver tolerance are removed by
    // a constant shift of every node, which keeps the triple exactly feasible.
    let c = interp_to_centered(&state.primal, g).map_err(|e| fail(e, &trace, Some(&state.primal)))?;
    let min_raw = c.rho.iter().copied().fold(T::infinity(), T::min);
    let peak = c.rho.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    // density scale implied by the data, for solutions that are nearly zero
    let back = op.adjoint(data).map_err(|e| fail(e, &trace, Some(&state.primal)))?;
    let data_scale = back.iter().fold(T::zero(), |a, v| a.max(v.abs())) / (l * l);
    let mut lift = T::zero();
    if min_raw < T::zero() {
        if -min_raw > T::lit(LIFT_TOL) * peak.max(data_scale) {
            let e = Error::NegativeDensity {
                min_density: min_raw.as_f64(),
            };
            return Err(fail(e, &trace, Some(&state.primal)));
        }
        lift = -(min_raw + min_raw);
        state.primal.rho.mapv_inplace(|v| v + lift);
    }
    let min_density = min_raw + lift;
    if min_density < T::lit(DENSITY_FLOOR) {
        let e = Error::NegativeDensity {
            min_density: min_density.as_f64(),
        };
        return Err(fail(e, &trace, Some(&state.primal)));
    }
    Ok(SolverOutput {
        state,
        trace,
        min_density,
        lift,
    })
}
