use dotreg::energy::{objective_terms, Delta, EnergyParams};
use dotreg::grid::{interp_to_centered, Grid};
use dotreg::meas::{FrameOperator, IdentityOperator, Measurement};
use dotreg::phantom::{make_phantom, PhantomSpec};
use dotreg::solver::{estimate_op_norm, pdhg_solve, primal_dual_gap, DataFidelity, SolverConfig, StopReason};
use dotreg::Error;
use ndarray::{Array3, Axis};

fn static_data(g: &Grid<f64>, op: &IdentityOperator<f64>) -> Measurement<f64> {
    let rho = Array3::from_shape_fn(g.cell_shape(), |(_, i, j)| {
        let (x, y) = (g.x_center(i), g.y_center(j));
        1.0 + 0.5 * (3.0 * x).cos() * (2.0 * y).sin()
    });
    op.forward(&rho).unwrap()
}

fn config(alpha: f64, beta: f64, delta: Delta<f64>) -> SolverConfig<f64> {
    SolverConfig::new(EnergyParams::new(alpha, beta, delta).unwrap())
}

#[test]
fn zero_data_gives_the_zero_triple() {
    let g = Grid::<f64>::unit_square(3, 6, 6).unwrap();
    let op = IdentityOperator::new(&g);
    let out = pdhg_solve(&op.zero_measurement(), &op, &g, &config(0.1, 0.01, Delta::Finite(1.0))).unwrap();
    assert_eq!(out.trace.stop, StopReason::Converged);
    assert!(out.triple().max_abs() <= 1e-12);
    assert!(out.trace.rows.last().unwrap().gap <= 1e-10);
}

#[test]
fn static_data_gives_a_static_reconstruction() {
    let g = Grid::<f64>::unit_square(4, 8, 8).unwrap();
    let op = IdentityOperator::new(&g);
    let f = static_data(&g, &op);
    let mut cfg = config(1.0, 0.01, Delta::Finite(1.0));
    cfg.max_iters = 3000;
    let out = pdhg_solve(&f, &op, &g, &cfg).unwrap();
    let rho = &out.triple().rho;
    let first = rho.index_axis(Axis(0), 0);
    let scale = first.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for slice in rho.axis_iter(Axis(0)) {
        let d = (&slice - &first).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(d <= 1e-4 * scale, "time variation {d}");
    }
    assert!(out.triple().mx.iter().chain(out.triple().my.iter()).all(|v| v.abs() <= 1e-4));
}

#[test]
fn iterates_stay_feasible_and_the_gap_shrinks() {
    let g = Grid::<f64>::unit_square(4, 8, 8).unwrap();
    let op = IdentityOperator::new(&g);
    let f = static_data(&g, &op);
    let mut cfg = config(0.1, 0.01, Delta::Finite(1.0));
    cfg.max_iters = 1000;
    cfg.init_seed = Some(3);
    let out = pdhg_solve(&f, &op, &g, &cfg).unwrap();
    let rows = &out.trace.rows;
    assert!(rows.iter().all(|r| r.residual <= cfg.feasibility_tol));
    assert!(rows.iter().all(|r| r.gap >= 0.0));
    assert!(rows.last().unwrap().gap < 1e-2 * rows[0].gap);
    // trend: every tenth of the run improves on the one before
    let chunk = rows.len() / 10;
    let best = |s: &[dotreg::solver::TraceRow<f64>]| s.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    for w in rows.chunks(chunk).collect::<Vec<_>>().windows(2) {
        assert!(best(w[1]) <= best(w[0]) * 1.5);
    }
}

#[test]
fn final_objective_matches_a_recomputation() {
    let g = Grid::<f64>::unit_square(4, 8, 8).unwrap();
    let op = IdentityOperator::new(&g);
    let f = static_data(&g, &op);
    let cfg = config(0.1, 0.01, Delta::Finite(1.0));
    let out = pdhg_solve(&f, &op, &g, &cfg).unwrap();
    let last = out.trace.rows.last().unwrap();
    let exact = objective_terms(out.triple(), &f, &op, &cfg.params, &g).unwrap();
    assert!(exact.total.is_finite());
    assert!((exact.total - last.objective).abs() <= 1e-6 * exact.total.abs());
    let (gap, terms) = primal_dual_gap(&out.state, &f, &op, &cfg, &g).unwrap();
    assert!(gap.is_finite());
    assert!((terms.total - exact.total).abs() <= 1e-6 * exact.total.abs());
}

#[test]
fn larger_mass_weight_gives_smaller_mass() {
    let g = Grid::<f64>::unit_square(3, 8, 8).unwrap();
    let op = IdentityOperator::new(&g);
    let f = static_data(&g, &op);
    let mut previous = f64::INFINITY;
    for beta in [0.01, 0.1, 0.5, 2.0] {
        let mut cfg = config(0.1, beta, Delta::Finite(1.0));
        cfg.max_iters = 3000;
        let out = pdhg_solve(&f, &op, &g, &cfg).unwrap();
        let mass = out.trace.rows.last().unwrap().mass;
        assert!(mass <= previous * (1.0 + 1e-6), "beta {beta}: mass {mass} after {previous}");
        previous = mass;
    }
}

#[test]
fn exact_fidelity_reproduces_fully_observed_data() {
    let g = Grid::<f64>::unit_square(3, 6, 6).unwrap();
    let op = IdentityOperator::new(&g);
    let truth = make_phantom(&PhantomSpec::translating_gaussian([-0.05, 0.0], [0.05, 0.0], 0.08), &g).unwrap();
    let rho_c = interp_to_centered(&truth.triple, &g).unwrap().rho;
    let f = op.forward(&rho_c).unwrap();
    let mut cfg = config(1.0, 0.01, Delta::Finite(1.0));
    cfg.fidelity = DataFidelity::Exact;
    cfg.max_iters = 20_000;
    cfg.gap_tol = 1e-8;
    let out = pdhg_solve(&f, &op, &g, &cfg).unwrap();
    let got = interp_to_centered(out.triple(), &g).unwrap().rho;
    let err = (&got - &rho_c).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let peak = rho_c.iter().fold(0.0f64, |a, v| a.max(*v));
    assert!(err <= 1e-4 * peak, "{err}");
}

#[test]
fn oversized_steps_are_rejected() {
    let g = Grid::<f64>::unit_square(2, 4, 4).unwrap();
    let op = IdentityOperator::new(&g);
    let mut cfg = config(0.1, 0.01, Delta::Finite(1.0));
    let l = estimate_op_norm(&op, &g, cfg.params.delta, 50).unwrap();
    cfg.primal_step = Some(1.5 / l);
    cfg.dual_step = Some(1.0 / l);
    let err = pdhg_solve(&static_data(&g, &op), &op, &g, &cfg).unwrap_err();
    assert!(matches!(err.error, Error::StepSize { .. }));
    cfg.primal_step = Some(1.0 / l);
    assert!(pdhg_solve(&static_data(&g, &op), &op, &g, &cfg).is_ok());
}

#[test]
fn operator_norm_estimate_bounds_the_stacked_operator() {
    let g = Grid::<f64>::unit_square(3, 5, 5).unwrap();
    let op = IdentityOperator::new(&g);
    let l = estimate_op_norm(&op, &g, Delta::Finite(1.0), 100).unwrap();
    let again = estimate_op_norm(&op, &g, Delta::Finite(1.0), 100).unwrap();
    assert_eq!(l, again);
    assert!(l > 0.0 && l.is_finite());
}

#[test]
fn invalid_configurations_are_rejected() {
    let g = Grid::<f64>::unit_square(2, 4, 4).unwrap();
    let op = IdentityOperator::new(&g);
    let f = op.zero_measurement();
    let mut cfg = config(0.1, 0.01, Delta::Finite(1.0));
    cfg.theta = 1.5;
    assert!(matches!(pdhg_solve(&f, &op, &g, &cfg).unwrap_err().error, Error::InvalidParameter { .. }));
    let mut cfg = config(0.1, 0.01, Delta::Finite(1.0));
    cfg.max_iters = 0;
    assert!(pdhg_solve(&f, &op, &g, &cfg).is_err());
    let mut bad = f.clone();
    bad.frames[0][[0, 0]].re = f64::NAN;
    assert!(pdhg_solve(&bad, &op, &g, &config(0.1, 0.01, Delta::Finite(1.0))).is_err());
}

#[test]
fn tiny_instance_matches_a_conic_solver() {
    let fixture: serde_json::Value =
        serde_json::from_str(include_str!("fixtures/tiny_oracle.json")).expect("fixture parses");
    let num = |k: &str| fixture[k].as_f64().unwrap();
    let dim = |k: &str| fixture[k].as_u64().unwrap() as usize;
    let g = Grid::<f64>::unit_square(dim("nt"), dim("nx"), dim("ny")).unwrap();
    let op = IdentityOperator::new(&g);
    let rho = Array3::from_shape_fn(g.cell_shape(), |(k, i, j)| {
        let (x, y) = (g.x_center(i), g.y_center(j));
        1.0 + 0.5 * (2.0 * std::f64::consts::PI * (x + 0.3 * k as f64)).sin() * (std::f64::consts::PI * y).cos()
    });
    let f = op.forward(&rho).unwrap();
    let mut cfg = config(num("alpha"), num("beta"), Delta::Finite(num("delta")));
    cfg.max_iters = 50_000;
    cfg.gap_tol = 1e-10;
    let out = pdhg_solve(&f, &op, &g, &cfg).unwrap();
    let got = objective_terms(out.triple(), &f, &op, &cfg.params, &g).unwrap().total;
    let want = num("objective");
    assert!((got - want).abs() <= 1e-4 * want, "{got} vs {want}");
}
