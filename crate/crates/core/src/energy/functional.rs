use super::params::Delta;
use super::psi::{in_k_delta, psi_delta, psi_envelope};
use crate::error::{Error, Result};
use crate::grid::{CenteredTriple, Grid};
use crate::scalar::Real;

/// Discrete transport-growth energy `sum_cells Psi_delta(cell) * cell_volume`.
///
/// Returns `+inf` as soon as one cell is outside the domain of `Psi_delta`.
pub fn b_delta_primal<T: Real>(c: &CenteredTriple<T>, g: &Grid<T>, delta: Delta<T>) -> Result<T> {
    c.conforms(g)?;
    let mut sum = T::zero();
    for k in 0..g.nt {
        for i in 0..g.nx {
            for j in 0..g.ny {
                let [r, mx, my, mu] = c.cell(k, i, j);
                let v = psi_delta(r, [mx, my], mu, delta).value();
                if !v.is_finite() {
                    return Ok(T::infinity());
                }
                sum += v;
            }
        }
    }
    Ok(sum * g.cell_volume())
}

/// Moreau envelope of the discrete energy with parameter `eps` (per cell,
/// on density values). Finite for every input, never above
/// [`b_delta_primal`], and converging to it as `eps -> 0`. Used to report
/// energies of solver iterates, which satisfy positivity only up to the
/// solver tolerance.
pub fn b_delta_envelope<T: Real>(c: &CenteredTriple<T>, g: &Grid<T>, delta: Delta<T>, eps: T) -> Result<T> {
    c.conforms(g)?;
    let mut sum = T::zero();
    for k in 0..g.nt {
        for i in 0..g.nx {
            for j in 0..g.ny {
                sum += psi_envelope(c.cell(k, i, j), delta, eps)?;
            }
        }
    }
    Ok(sum * g.cell_volume())
}

/// Weak-duality lower bound `max_probes sum (a rho + b.m + c mu) * cell_volume`
/// over probe fields that lie pointwise in `K_delta`.
pub fn b_delta_dual_lower_bound<T: Real>(
    c: &CenteredTriple<T>,
    g: &Grid<T>,
    delta: Delta<T>,
    probes: &[CenteredTriple<T>],
) -> Result<T> {
    c.conforms(g)?;
    let mut best = T::neg_infinity();
    for probe in probes {
        probe.conforms(g)?;
        for k in 0..g.nt {
            for i in 0..g.nx {
                for j in 0..g.ny {
                    let [a, bx, by, cc] = probe.cell(k, i, j);
                    if !in_k_delta(a, [bx, by], cc, delta) {
                        return Err(Error::ProbeOutsideK {
                            cell: (k * g.nx + i) * g.ny + j,
                        });
                    }
                }
            }
        }
        best = best.max(probe.dot(c) * g.cell_volume());
    }
    Ok(best)
}

/// `sum |rho_c| * cell_volume`, the total variation of the space-time density.
pub fn mass_norm<T: Real>(c: &CenteredTriple<T>, g: &Grid<T>) -> T {
    c.rho.iter().fold(T::zero(), |a, v| a + v.abs()) * g.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_centered;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ONE: Delta<f64> = Delta::Finite(1.0);

    #[test]
    fn static_fields_have_zero_energy() {
        let g = Grid::<f64>::unit_square(3, 4, 4).unwrap();
        let mut c = CenteredTriple::zeros(&g);
        c.rho.mapv_inplace(|_| 0.7);
        c.rho[[1, 2, 3]] = 0.0;
        assert_eq!(b_delta_primal(&c, &g, ONE).unwrap(), 0.0);
    }

    #[test]
    fn negative_density_is_infinite() {
        let g = Grid::<f64>::unit_square(2, 2, 2).unwrap();
        let mut c = CenteredTriple::zeros(&g);
        c.rho.fill(1.0);
        c.rho[[1, 0, 1]] = -1e-3;
        assert!(b_delta_primal(&c, &g, ONE).unwrap().is_infinite());
    }

    #[test]
    fn uniform_flow_energy() {
        let g = Grid::<f64>::unit_square(4, 5, 3).unwrap();
        let w = 0.8;
        let mut c = CenteredTriple::zeros(&g);
        c.rho.fill(1.0);
        c.m.index_axis_mut(ndarray::Axis(3), 0).fill(w);
        let primal = b_delta_primal(&c, &g, ONE).unwrap();
        assert!((primal - 0.5 * w * w).abs() < 1e-14);

        let mut probe = CenteredTriple::zeros(&g);
        probe.rho.fill(-0.5 * w * w);
        probe.m.index_axis_mut(ndarray::Axis(3), 0).fill(w);
        let dual = b_delta_dual_lower_bound(&c, &g, ONE, &[CenteredTriple::zeros(&g), probe]).unwrap();
        assert!((dual - primal).abs() < 1e-14);
    }

    #[test]
    fn zero_probe_gives_zero() {
        let g = Grid::<f64>::unit_square(2, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = random_centered(&g, &mut rng);
        let z = CenteredTriple::zeros(&g);
        assert_eq!(b_delta_dual_lower_bound(&c, &g, ONE, &[z]).unwrap(), 0.0);
    }

    #[test]
    fn probe_outside_k_is_rejected() {
        let g = Grid::<f64>::unit_square(1, 2, 2).unwrap();
        let c = CenteredTriple::zeros(&g);
        let mut probe = CenteredTriple::zeros(&g);
        probe.rho[[0, 1, 1]] = 0.1;
        assert_eq!(
            b_delta_dual_lower_bound(&c, &g, ONE, &[probe]),
            Err(Error::ProbeOutsideK { cell: 3 })
        );
    }

    #[test]
    fn infinite_delta_requires_zero_source() {
        let g = Grid::<f64>::unit_square(2, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = random_centered(&g, &mut rng);
        c.rho.mapv_inplace(|v| v.abs() + 0.5);
        assert!(b_delta_primal(&c, &g, Delta::Infinite).unwrap().is_infinite());
        c.mu.fill(0.0);
        let kinetic = b_delta_primal(&c, &g, Delta::Infinite).unwrap();
        for d in [0.1, 1.0, 10.0] {
            let e = b_delta_primal(&c, &g, Delta::Finite(d)).unwrap();
            assert!((e - kinetic).abs() < 1e-14);
        }
        let env = b_delta_envelope(&c, &g, Delta::Infinite, 1e-10).unwrap();
        assert!(env <= kinetic && kinetic - env < 1e-8);
    }

    #[test]
    fn envelope_never_exceeds_primal() {
        let g = Grid::<f64>::unit_square(2, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let mut c = random_centered(&g, &mut rng);
            if rng.random::<bool>() {
                c.rho.mapv_inplace(|v| v.abs() + 0.1);
            }
            let primal = b_delta_primal(&c, &g, ONE).unwrap();
            let env = b_delta_envelope(&c, &g, ONE, 1e-6).unwrap();
            assert!(env.is_finite() && env <= primal + 1e-12);
        }
    }
}
