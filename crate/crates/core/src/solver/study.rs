use super::config::{DataFidelity, SolverConfig};
use super::pdhg::{pdhg_solve, SolverOutput, SolverTrace};
use crate::energy::{data_residual, objective_terms_relaxed, EnergyParams};
use crate::error::{Error, Result};
use crate::grid::{interp_to_centered, Grid, StaggeredTriple};
use crate::meas::{add_noise, FrameOperator, Measurement};
use crate::phantom::relative_error;
use crate::scalar::Real;

/// Slack allowed on "nonincreasing" in the stability trend.
const TREND_SLACK: f64 = 0.10;
/// Allowed relative gap between the final and the reference energy.
const ENERGY_SLACK: f64 = 0.10;

fn distance<T: Real>(a: &StaggeredTriple<T>, b: &StaggeredTriple<T>, g: &Grid<T>) -> T {
    a.sub(b).norm() * g.cell_volume().sqrt()
}

#[derive(Debug, Clone)]
pub struct StabilityRow<T> {
    /// Seed of the perturbation direction.
    pub direction: u64,
    /// `|f_n - f|` in `L^2(H)`.
    pub size: T,
    /// Volume-weighted distance of the triples.
    pub distance: T,
    /// Relative distance of the centered densities.
    pub relative_density_distance: T,
    pub output: SolverOutput<T>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport<T> {
    pub reference: SolverOutput<T>,
    pub rows: Vec<StabilityRow<T>>,
    /// Distances are nonincreasing along every direction up to 10% slack.
    pub monotone: bool,
}

/// Solve for `f` and for `f + size * d` along every seeded unit direction
/// `d` and every size, recording how far the reconstructions move.
pub fn run_stability_study<T: Real, O: FrameOperator<T> + ?Sized>(
    f: &Measurement<T>,
    sizes: &[T],
    directions: &[u64],
    op: &O,
    g: &Grid<T>,
    cfg: &SolverConfig<T>,
) -> Result<StabilityReport<T>> {
    if sizes.is_empty() || directions.is_empty() {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: "need at least one size and one direction".into(),
        });
    }
    for w in sizes.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidParameter {
                name: "sizes",
                reason: "perturbation sizes must strictly decrease".into(),
            });
        }
    }
    if !(sizes[sizes.len() - 1] >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: "perturbation sizes must be nonnegative".into(),
        });
    }
    let reference = pdhg_solve(f, op, g, cfg)?;
    let mut rows = Vec::new();
    let mut monotone = true;
    for &seed in directions {
        let mut previous: Option<T> = None;
        for &size in sizes {
            let (fn_, achieved) = add_noise(f, size, seed, g)?;
            let output = pdhg_solve(&fn_, op, g, cfg)?;
            let d = distance(output.triple(), reference.triple(), g);
            let rel = relative_error(output.triple(), reference.triple(), g)?;
            if let Some(p) = previous {
                monotone &= d <= p * T::lit(1.0 + TREND_SLACK) + T::lit(1e-12);
            }
            previous = Some(d);
            rows.push(StabilityRow {
                direction: seed,
                size: achieved,
                distance: d,
                relative_density_distance: rel,
                output,
            });
        }
    }
    Ok(StabilityReport {
        reference,
        rows,
        monotone,
    })
}

/// One step `(gamma_n, alpha_n, beta_n)` of a vanishing-noise schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry<T> {
    pub gamma: T,
    pub alpha: T,
    pub beta: T,
}

/// Check a finite schedule against the parameter-choice rule: noise strictly
/// decreasing, weights nonincreasing with `min(alpha, beta)` decreasing, and
/// `gamma^2 / alpha`, `gamma^2 / beta` nonincreasing with a net decrease.
///
/// Returns the limit weights `(alpha*, beta*)`, read off the last entry as
/// `(alpha, beta) / min(alpha, beta)`.
pub fn validate_schedule<T: Real>(schedule: &[ScheduleEntry<T>]) -> Result<(T, T)> {
    let bad = |msg: String| Err(Error::Schedule(msg));
    let Some(last) = schedule.last() else {
        return bad("schedule is empty".into());
    };
    for (n, e) in schedule.iter().enumerate() {
        if !(e.gamma >= T::zero() && e.gamma.is_finite()) {
            return bad(format!("gamma_{n} = {} is not a noise level", e.gamma));
        }
        if !(e.alpha > T::zero() && e.alpha.is_finite() && e.beta > T::zero() && e.beta.is_finite()) {
            return bad(format!("alpha_{n}, beta_{n} must be positive"));
        }
    }
    let ratio = |e: &ScheduleEntry<T>, w: T| e.gamma * e.gamma / w;
    for (n, w) in schedule.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if !(b.gamma < a.gamma) {
            return bad(format!("gamma must strictly decrease (entry {})", n + 1));
        }
        if b.alpha > a.alpha || b.beta > a.beta {
            return bad(format!("alpha and beta must not increase (entry {})", n + 1));
        }
        if ratio(b, b.alpha) > ratio(a, a.alpha) || ratio(b, b.beta) > ratio(a, a.beta) {
            return bad(format!("gamma^2/alpha and gamma^2/beta must not increase (entry {})", n + 1));
        }
    }
    if schedule.len() > 1 {
        let first = &schedule[0];
        let c0 = first.alpha.min(first.beta);
        let cn = last.alpha.min(last.beta);
        if !(cn < c0) {
            return bad("min(alpha, beta) must decrease towards zero".into());
        }
        let decreasing = |w0: T, wn: T| ratio(last, wn).is_zero() || ratio(last, wn) < ratio(first, w0);
        if !decreasing(first.alpha, last.alpha) || !decreasing(first.beta, last.beta) {
            return bad("gamma^2/alpha and gamma^2/beta must decrease towards zero".into());
        }
    }
    let c = last.alpha.min(last.beta);
    Ok((last.alpha / c, last.beta / c))
}

#[derive(Debug, Clone)]
pub struct VanishingRow<T> {
    pub entry: ScheduleEntry<T>,
    /// Achieved `|f_n - f|`.
    pub noise: T,
    /// `|K rho_n - f|` against the exact data.
    pub residual: T,
    /// `alpha* B_delta + beta* |rho|` of the reconstruction.
    pub energy: T,
    /// Relative distance of centered densities to the reference.
    pub distance: T,
    pub output: SolverOutput<T>,
}

#[derive(Debug, Clone)]
pub struct VanishingReport<T> {
    pub alpha_star: T,
    pub beta_star: T,
    /// Energy-minimizing exact-data solution.
    pub reference: SolverOutput<T>,
    pub reference_energy: T,
    pub rows: Vec<VanishingRow<T>>,
    pub residuals_decreasing: bool,
    /// The last energy is within 10% of the reference energy.
    pub energy_converged: bool,
}

impl<T> VanishingReport<T> {
    pub fn traces(&self) -> impl Iterator<Item = &SolverTrace<T>> {
        std::iter::once(&self.reference.trace).chain(self.rows.iter().map(|r| &r.output.trace))
    }
}

fn weighted_energy<T: Real, O: FrameOperator<T> + ?Sized>(
    u: &StaggeredTriple<T>,
    f: &Measurement<T>,
    op: &O,
    params: &EnergyParams<T>,
    g: &Grid<T>,
    eps: T,
) -> Result<T> {
    let t = objective_terms_relaxed(u, f, op, params, g, eps)?;
    Ok(params.alpha * t.energy + params.beta * t.mass)
}

/// Regularized reconstructions from data perturbed by `gamma_n`-calibrated
/// noise, compared with the energy-minimizing solution for the exact data.
pub fn run_vanishing_noise_study<T: Real, O: FrameOperator<T> + ?Sized>(
    f_exact: &Measurement<T>,
    schedule: &[ScheduleEntry<T>],
    noise_seed: u64,
    op: &O,
    g: &Grid<T>,
    cfg: &SolverConfig<T>,
) -> Result<VanishingReport<T>> {
    let (alpha_star, beta_star) = validate_schedule(schedule)?;
    let limit = EnergyParams::new(alpha_star, beta_star, cfg.params.delta)?;
    let mut ref_cfg = *cfg;
    ref_cfg.params = limit;
    ref_cfg.fidelity = DataFidelity::Exact;
    let reference = pdhg_solve(f_exact, op, g, &ref_cfg)?;
    let reference_energy = weighted_energy(reference.triple(), f_exact, op, &limit, g, cfg.envelope_eps)?;

    let mut rows = Vec::new();
    for &entry in schedule {
        let (f_n, noise) = add_noise(f_exact, entry.gamma, noise_seed, g)?;
        let mut run_cfg = *cfg;
        run_cfg.params = EnergyParams::new(entry.alpha, entry.beta, cfg.params.delta)?;
        run_cfg.fidelity = DataFidelity::Quadratic;
        let output = pdhg_solve(&f_n, op, g, &run_cfg)?;
        let c = interp_to_centered(output.triple(), g)?;
        rows.push(VanishingRow {
            entry,
            noise,
            residual: data_residual(&c.rho, f_exact, op, g)?,
            energy: weighted_energy(output.triple(), f_exact, op, &limit, g, cfg.envelope_eps)?,
            distance: relative_error(output.triple(), reference.triple(), g)?,
            output,
        });
    }
    let residuals_decreasing = rows.windows(2).all(|w| w[1].residual < w[0].residual);
    let last = rows.last().expect("schedule is nonempty").energy;
    let energy_converged = (last - reference_energy).abs() <= T::lit(ENERGY_SLACK) * reference_energy.abs();
    Ok(VanishingReport {
        alpha_star,
        beta_star,
        reference,
        reference_energy,
        rows,
        residuals_decreasing,
        energy_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Delta;
    use crate::meas::IdentityOperator;
    use ndarray::Array3;

    fn entry(gamma: f64, alpha: f64, beta: f64) -> ScheduleEntry<f64> {
        ScheduleEntry { gamma, alpha, beta }
    }

    #[test]
    fn geometric_schedule_is_accepted() {
        let s: Vec<_> = (0..5).map(|n| 0.1 / 2f64.powi(n)).map(|g| entry(g, g, g)).collect();
        assert_eq!(validate_schedule(&s).unwrap(), (1.0, 1.0));
        let s: Vec<_> = (0..4).map(|n| 0.1 / 2f64.powi(n)).map(|g| entry(g, 2.0 * g, g)).collect();
        assert_eq!(validate_schedule(&s).unwrap(), (2.0, 1.0));
    }

    #[test]
    fn bad_schedules_are_rejected() {
        let cases = [
            vec![],
            vec![entry(0.1, 0.1, 0.1), entry(0.1, 0.05, 0.05)],
            vec![entry(0.1, 0.1, 0.1), entry(0.05, 0.2, 0.05)],
            // gamma^2 / alpha grows when alpha falls faster than gamma^2
            vec![entry(0.1, 0.1, 0.1), entry(0.09, 0.001, 0.1)],
            // weights never shrink
            vec![entry(0.1, 0.1, 0.1), entry(0.05, 0.1, 0.1)],
            vec![entry(0.1, 0.0, 0.1)],
            vec![entry(f64::NAN, 0.1, 0.1)],
        ];
        for s in cases {
            assert!(matches!(validate_schedule(&s), Err(Error::Schedule(_))), "{s:?}");
        }
    }

    #[test]
    fn stability_distances_shrink_with_the_perturbation() {
        let g = Grid::<f64>::unit_square(3, 6, 6).unwrap();
        let op = IdentityOperator::new(&g);
        let rho = Array3::from_shape_fn(g.cell_shape(), |(_, i, j)| 1.0 + 0.1 * (i as f64 - j as f64));
        let f = op.forward(&rho).unwrap();
        let mut cfg = SolverConfig::new(EnergyParams::new(0.1, 0.01, Delta::Finite(1.0)).unwrap());
        cfg.max_iters = 2000;
        let r = run_stability_study(&f, &[0.1, 0.01, 0.001], &[1, 2], &op, &g, &cfg).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert!(r.monotone);
        assert!(r.rows[2].distance < r.rows[0].distance);
        assert!(run_stability_study(&f, &[0.01, 0.1], &[1], &op, &g, &cfg).is_err());
    }
}
