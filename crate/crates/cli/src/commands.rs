//! The subcommands. Each reads and writes only the artifacts listed in its docs.

use std::path::{Path, PathBuf};

use dotreg::energy::{check_narrow_continuity_bounds, objective_terms, EnergyEvaluation, TestField};
use dotreg::grid::{interp_to_centered, node_masses, relative_residual, Grid, StaggeredTriple};
use dotreg::meas::{add_noise, l2h_norm, FrameOperator, Measurement};
use dotreg::phantom::{make_phantom, relative_error};
use dotreg::solver::{pdhg_solve, run_stability_study, run_vanishing_noise_study, SolverOutput, SolverTrace};
use ndarray::{Array2, ArrayD, Axis, Ix2, Ix3, IxDyn};
use num_complex::Complex64;
use serde_json::json;

use crate::artifact::{exists, read_array, read_triple, write_array, write_json, write_triple, ArrayData};
use crate::config::{Operator, RunConfig, StudyKind};
use crate::error::{CliError, Result};
use crate::metrics::{num, write_csv, write_trace};
use crate::render::write_pgm;

pub fn phantom_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("phantom")
}

pub fn data_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("forward").join("data")
}

pub fn reconstruct_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("reconstruct")
}

/// `phantom/{rho,mx,my,mu}` and `phantom/phantom.json`.
pub fn cmd_phantom(cfg: &RunConfig) -> Result<PathBuf> {
    let g = cfg.grid()?;
    let p = make_phantom(&cfg.phantom_spec()?, &g)?;
    let dir = phantom_dir(cfg);
    write_triple(&dir, &p.triple)?;
    let summary = json!({
        "analytic_energy": p.analytic_energy,
        "projection_displacement": p.projection_displacement,
        "node_masses": node_masses(&p.triple.rho, &g),
    });
    write_json(&dir.join("phantom.json"), &summary)?;
    Ok(dir)
}

fn real(shape: &[usize], values: Vec<f64>) -> ArrayData {
    ArrayData::Real(ArrayD::from_shape_vec(IxDyn(shape), values).expect("shape matches length"))
}

/// `sample/{freqs,weights,offsets,coils}`: concatenated per-frame sample
/// locations `(n, 2)` and weights `(n)`, frame offsets `(nt + 1)`, and coil
/// maps `(coils, nx, ny)`. Identity sampling records cell centers as locations.
pub fn cmd_sample(cfg: &RunConfig) -> Result<PathBuf> {
    let g = cfg.grid()?;
    let op = cfg.operator()?;
    let dir = cfg.output.join("sample");
    let mut offsets = vec![0.0];
    let mut weights = Vec::new();
    let mut freqs = Vec::new();
    for k in 0..g.nt {
        weights.extend_from_slice(op.as_dyn().weights(k));
        offsets.push(weights.len() as f64);
    }
    let coils = match &op {
        Operator::Identity(id) => {
            for k in 0..g.nt {
                for n in 0..id.n_samples(k) {
                    freqs.extend([g.x_center(n / g.ny), g.y_center(n % g.ny)]);
                }
            }
            vec![Array2::from_elem((g.nx, g.ny), Complex64::new(1.0, 0.0))]
        }
        Operator::Mri(mri) => {
            for frame in &mri.pattern().frames {
                freqs.extend(frame.freqs.iter().flatten());
            }
            mri.coils().maps.clone()
        }
    };
    let n = weights.len();
    write_array(&dir.join("freqs"), "pattern_freqs", &real(&[n, 2], freqs))?;
    write_array(&dir.join("weights"), "pattern_weights", &real(&[n], weights))?;
    write_array(&dir.join("offsets"), "pattern_offsets", &real(&[g.nt + 1], offsets))?;
    let flat: Vec<Complex64> = coils.iter().flat_map(|m| m.iter().copied()).collect();
    let maps = ArrayD::from_shape_vec(IxDyn(&[coils.len(), g.nx, g.ny]), flat).expect("coil maps match the grid");
    write_array(&dir.join("coils"), "coils", &ArrayData::Complex(maps))?;
    Ok(dir)
}

/// Frames concatenated along the sample axis: `(coils, total samples)`.
fn measurement_array(f: &Measurement<f64>, coils: usize) -> ArrayData {
    let total: usize = f.frames.iter().map(|h| h.ncols()).sum();
    let mut out = ArrayD::zeros(IxDyn(&[coils, total]));
    let mut at = 0;
    for h in &f.frames {
        for (c, row) in h.rows().into_iter().enumerate() {
            for (s, z) in row.iter().enumerate() {
                out[[c, at + s]] = *z;
            }
        }
        at += h.ncols();
    }
    ArrayData::Complex(out)
}

pub fn read_measurement(path: &Path, op: &dyn FrameOperator<f64>) -> Result<Measurement<f64>> {
    let mut f = op.zero_measurement();
    let total: usize = f.frames.iter().map(|h| h.ncols()).sum();
    let expected = [op.n_coils(), total];
    let a = match read_array(path)? {
        (_, ArrayData::Complex(a)) if a.shape() == expected => a,
        (h, _) => {
            return Err(CliError::artifact(
                path,
                format!("expected c128 data of shape {expected:?}, found {:?} of shape {:?}", h.dtype, h.shape),
            ))
        }
    };
    let a = a.into_dimensionality::<Ix2>().expect("rank checked");
    let mut at = 0;
    for h in &mut f.frames {
        let n = h.ncols();
        h.assign(&a.slice(ndarray::s![.., at..at + n]));
        at += n;
    }
    if !f.is_finite() {
        return Err(CliError::artifact(path, "data contains non-finite values"));
    }
    Ok(f)
}

fn exact_data(cfg: &RunConfig, g: &Grid<f64>, op: &dyn FrameOperator<f64>) -> Result<Measurement<f64>> {
    let truth = make_phantom(&cfg.phantom_spec()?, g)?;
    Ok(op.forward(&interp_to_centered(&truth.triple, g)?.rho)?)
}

/// `forward/data` (c128, `(coils, total samples)`) and `forward/forward.json`,
/// from the phantom in `input` (default `phantom/`) plus seeded noise.
pub fn cmd_forward(cfg: &RunConfig, input: Option<&Path>) -> Result<PathBuf> {
    let g = cfg.grid()?;
    let op = cfg.operator()?;
    let op = op.as_dyn();
    let dir = input.map(Path::to_path_buf).unwrap_or_else(|| phantom_dir(cfg));
    let truth = read_triple(&dir, &g)?;
    let clean = op.forward(&interp_to_centered(&truth, &g)?.rho)?;
    let (noisy, achieved) = add_noise(&clean, cfg.noise.gamma, cfg.noise.seed, &g)?;
    let path = data_path(cfg);
    write_array(&path, "data", &measurement_array(&noisy, op.n_coils()))?;
    let summary = json!({
        "gamma": cfg.noise.gamma,
        "achieved_noise": achieved,
        "seed": cfg.noise.seed,
        "clean_norm": l2h_norm(&clean, &g),
    });
    write_json(&path.with_file_name("forward.json"), &summary)?;
    Ok(path)
}

fn solve_summary(out: &SolverOutput<f64>, g: &Grid<f64>) -> Result<serde_json::Value> {
    let t = &out.trace;
    let last = t.rows.last().expect("a solve records its last iterate");
    Ok(json!({
        "iterations": t.iterations,
        "stop": format!("{:?}", t.stop),
        "objective": last.objective,
        "misfit": last.misfit,
        "energy": last.energy,
        "mass": last.mass,
        "residual": relative_residual(out.triple(), g)?,
        "gap": last.gap,
        "min_density": out.min_density,
        "lift": out.lift,
        "op_norm": t.op_norm,
        "primal_step": t.steps.0,
        "dual_step": t.steps.1,
    }))
}

/// `reconstruct/{rho,mx,my,mu}`, `reconstruct/trace.csv` and
/// `reconstruct/summary.json`. On solver failure the trace and the last
/// iterate are still written.
pub fn cmd_reconstruct(cfg: &RunConfig, data: Option<&Path>, truth: Option<&Path>) -> Result<PathBuf> {
    let g = cfg.grid()?;
    let op = cfg.operator()?;
    let op = op.as_dyn();
    let f = read_measurement(&data.map(Path::to_path_buf).unwrap_or_else(|| data_path(cfg)), op)?;
    let dir = reconstruct_dir(cfg);
    let out = match pdhg_solve(&f, op, &g, &cfg.solver_config()?) {
        Ok(out) => out,
        Err(failure) => {
            write_trace(&dir.join("trace.csv"), &failure.trace, true)?;
            if let Some(last) = &failure.last {
                write_triple(&dir, last)?;
            }
            return Err(CliError::Solver {
                iterations: failure.trace.iterations,
                error: failure.error,
            });
        }
    };
    write_triple(&dir, out.triple())?;
    write_trace(&dir.join("trace.csv"), &out.trace, true)?;
    let mut summary = solve_summary(&out, &g)?;
    let truth_dir = truth.map(Path::to_path_buf).unwrap_or_else(|| phantom_dir(cfg));
    if exists(&truth_dir.join("rho")) {
        let t = read_triple(&truth_dir, &g)?;
        summary["relative_error"] = json!(relative_error(out.triple(), &t, &g)?);
    }
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(dir)
}

fn write_run(dir: &Path, trace: &SolverTrace<f64>, u: &StaggeredTriple<f64>) -> Result<()> {
    write_trace(&dir.join("trace.csv"), trace, false)?;
    write_triple(dir, u)
}

/// `study/run_NNN/{trace.csv, rho, ...}` per solve (`run_000` is the
/// reference), `study/summary.csv` and `study/study.json`. Traces omit wall
/// time so reruns are byte-identical.
pub fn cmd_study(cfg: &RunConfig, data: Option<&Path>) -> Result<PathBuf> {
    let g = cfg.grid()?;
    let op = cfg.operator()?;
    let op = op.as_dyn();
    let f = match data {
        Some(path) => read_measurement(path, op)?,
        None => exact_data(cfg, &g, op)?,
    };
    let solver = cfg.solver_config()?;
    let dir = cfg.output.join("study");
    let run_dir = |n: usize| dir.join(format!("run_{n:03}"));
    match cfg.study.kind {
        StudyKind::Stability => {
            let r = run_stability_study(&f, &cfg.study.sizes, &cfg.study.directions, op, &g, &solver)?;
            write_run(&run_dir(0), &r.reference.trace, r.reference.triple())?;
            let mut rows = vec![vec![
                "run_000".to_string(),
                String::new(),
                num(0.0),
                num(0.0),
                num(0.0),
                r.reference.trace.iterations.to_string(),
                format!("{:?}", r.reference.trace.stop),
            ]];
            for (n, row) in r.rows.iter().enumerate() {
                write_run(&run_dir(n + 1), &row.output.trace, row.output.triple())?;
                rows.push(vec![
                    format!("run_{:03}", n + 1),
                    row.direction.to_string(),
                    num(row.size),
                    num(row.distance),
                    num(row.relative_density_distance),
                    row.output.trace.iterations.to_string(),
                    format!("{:?}", row.output.trace.stop),
                ]);
            }
            let header = ["run", "direction", "size", "distance", "relative_density_distance", "iterations", "stop"];
            write_csv(&dir.join("summary.csv"), &header, &rows)?;
            write_json(&dir.join("study.json"), &json!({ "kind": "stability", "monotone": r.monotone }))?;
        }
        StudyKind::VanishingNoise => {
            let r = run_vanishing_noise_study(&f, &cfg.schedule(), cfg.noise.seed, op, &g, &solver)?;
            write_run(&run_dir(0), &r.reference.trace, r.reference.triple())?;
            let ref_rho = interp_to_centered(r.reference.triple(), &g)?.rho;
            let ref_residual = dotreg::energy::data_residual(&ref_rho, &f, op, &g)?;
            let mut rows = vec![vec![
                "run_000".to_string(),
                num(0.0),
                num(r.alpha_star),
                num(r.beta_star),
                num(0.0),
                num(ref_residual),
                num(r.reference_energy),
                num(0.0),
                r.reference.trace.iterations.to_string(),
                format!("{:?}", r.reference.trace.stop),
            ]];
            for (n, row) in r.rows.iter().enumerate() {
                write_run(&run_dir(n + 1), &row.output.trace, row.output.triple())?;
                rows.push(vec![
                    format!("run_{:03}", n + 1),
                    num(row.entry.gamma),
                    num(row.entry.alpha),
                    num(row.entry.beta),
                    num(row.noise),
                    num(row.residual),
                    num(row.energy),
                    num(row.distance),
                    row.output.trace.iterations.to_string(),
                    format!("{:?}", row.output.trace.stop),
                ]);
            }
            let header = [
                "run", "gamma", "alpha", "beta", "noise", "residual", "energy", "distance", "iterations", "stop",
            ];
            write_csv(&dir.join("summary.csv"), &header, &rows)?;
            let summary = json!({
                "kind": "vanishing_noise",
                "alpha_star": r.alpha_star,
                "beta_star": r.beta_star,
                "reference_energy": r.reference_energy,
                "residuals_decreasing": r.residuals_decreasing,
                "energy_converged": r.energy_converged,
            });
            write_json(&dir.join("study.json"), &summary)?;
        }
    }
    Ok(dir)
}

/// One PGM per time slice of a real 3-d array (or one image of a 2-d array),
/// written as `<out>/<stem>_NNN.pgm`.
pub fn cmd_render(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let (header, data) = read_array(input)?;
    let ArrayData::Real(a) = data else {
        return Err(CliError::artifact(input, "only real arrays can be rendered"));
    };
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("array").to_string();
    let mut written = Vec::new();
    match a.ndim() {
        2 => {
            let path = out.join(format!("{stem}.pgm"));
            write_pgm(&path, a.into_dimensionality::<Ix2>().expect("rank checked").view())?;
            written.push(path);
        }
        3 => {
            let a = a.into_dimensionality::<Ix3>().expect("rank checked");
            for (k, slice) in a.axis_iter(Axis(0)).enumerate() {
                let path = out.join(format!("{stem}_{k:03}.pgm"));
                write_pgm(&path, slice)?;
                written.push(path);
            }
        }
        _ => {
            return Err(CliError::artifact(
                input,
                format!("cannot render an array of shape {:?}", header.shape),
            ))
        }
    }
    Ok(written)
}

/// `<input>/metrics.json` for the triple in `input` (default `reconstruct/`):
/// objective terms against the data, feasibility, node masses, the
/// narrow-continuity bounds and, when a phantom is present, the relative error.
pub fn cmd_metrics(cfg: &RunConfig, input: Option<&Path>, data: Option<&Path>, truth: Option<&Path>) -> Result<PathBuf> {
    let g = cfg.grid()?;
    let op = cfg.operator()?;
    let op = op.as_dyn();
    let dir = input.map(Path::to_path_buf).unwrap_or_else(|| reconstruct_dir(cfg));
    let u = read_triple(&dir, &g)?;
    let data_file = data.map(Path::to_path_buf).unwrap_or_else(|| data_path(cfg));
    let mut m = json!({
        "residual": relative_residual(&u, &g)?,
        "node_masses": node_masses(&u.rho, &g),
    });
    if exists(&data_file) {
        let f = read_measurement(&data_file, op)?;
        let t = objective_terms(&u, &f, op, &cfg.energy_params()?, &g)?;
        m["objective"] = json!(finite_or_null(t.total));
        m["misfit"] = json!(t.misfit);
        m["energy"] = json!(finite_or_null(t.energy));
        m["mass"] = json!(t.mass);
    }
    let fields = [TestField::constant(&g, 1.0)];
    let eval = EnergyEvaluation::Envelope(cfg.solver.envelope_eps);
    if let Ok(r) = check_narrow_continuity_bounds(&u, &g, &fields, eval, 1e-6) {
        m["narrow"] = json!({
            "min_mass": r.min_mass,
            "max_mass": r.max_mass,
            "energy": finite_or_null(r.energy),
            "bound_constant": finite_or_null(r.bound_constant),
            "mass_bound_holds": r.mass_bound_holds,
            "holder_holds": r.holder_holds,
        });
    }
    let truth_dir = truth.map(Path::to_path_buf).unwrap_or_else(|| phantom_dir(cfg));
    if exists(&truth_dir.join("rho")) {
        let t = read_triple(&truth_dir, &g)?;
        m["relative_error"] = json!(relative_error(&u, &t, &g)?);
    }
    let path = dir.join("metrics.json");
    write_json(&path, &m)?;
    Ok(path)
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
