use std::path::Path;
use std::process::{Command, Output};

use dotreg::grid::{Grid, StaggeredTriple};
use dotreg_cli::artifact::{read_array, read_triple, write_array, write_triple, ArrayData};
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use serde_json::Value;

fn dotreg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dotreg"))
        .args(args)
        .arg(format!("--output={}", out.display()))
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) {
    let o = dotreg(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn error_line(o: &Output) -> Value {
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    serde_json::from_str(err.trim()).unwrap()
}

const SMALL: [&str; 3] = ["--grid.nt=3", "--grid.nx=8", "--grid.ny=8"];

fn with_small<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(SMALL);
    v.extend(extra);
    v
}

#[test]
fn zero_data_reconstructs_the_zero_triple() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let g = Grid::<f64>::unit_square(3, 8, 8).unwrap();
    let zero = tmp.path().join("zero");
    write_triple(&zero, &StaggeredTriple::zeros(&g)).unwrap();
    let input = format!("--input={}", zero.display());
    ok(&with_small("forward", &[&input]), out);
    ok(&with_small("reconstruct", &[]), out);
    let u = read_triple(&out.join("reconstruct"), &g).unwrap();
    assert_eq!(u.max_abs(), 0.0);
    assert_eq!(json(&out.join("reconstruct/summary.json"))["objective"], 0.0);
    let trace = std::fs::read_to_string(out.join("reconstruct/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "iter,objective,misfit,energy,mass,residual,gap,seconds");
    assert!(lines.last().unwrap().split(',').nth(1).unwrap().parse::<f64>().unwrap() == 0.0);
}

#[test]
fn noiseless_full_sampling_recovers_the_phantom() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(&["phantom"], out);
    ok(&["forward", "--pattern.kind=full_cartesian"], out);
    ok(&["reconstruct", "--pattern.kind=full_cartesian"], out);
    let summary = json(&out.join("reconstruct/summary.json"));
    let err = summary["relative_error"].as_f64().unwrap();
    assert!(err <= 1e-2, "{err}");
    ok(&["metrics", "--pattern.kind=full_cartesian"], out);
    let m = json(&out.join("reconstruct/metrics.json"));
    assert!(m["relative_error"].as_f64().unwrap() <= 1e-2);
    assert_eq!(m["narrow"]["mass_bound_holds"], true);
}

#[test]
fn every_pattern_kind_samples_and_forwards() {
    for kind in ["cartesian_lines", "radial", "compressed_sensing", "full_cartesian", "identity", "end_frames"] {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path();
        let pattern = format!("--pattern.kind={kind}");
        ok(&with_small("phantom", &[]), out);
        ok(&with_small("sample", &[&pattern]), out);
        ok(&with_small("forward", &[&pattern, "--noise.gamma=0.01"]), out);
        let (h, _) = read_array(&out.join("sample/offsets")).unwrap();
        assert_eq!(h.shape, vec![4]);
        let (h, data) = read_array(&out.join("forward/data")).unwrap();
        assert_eq!(h.role, "data");
        assert!(matches!(data, ArrayData::Complex(_)));
        let fwd = json(&out.join("forward/forward.json"));
        assert!((fwd["achieved_noise"].as_f64().unwrap() - 0.01).abs() < 1e-12, "{kind}");
    }
}

#[test]
fn constant_slices_render_mid_gray() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("flat");
    write_array(&path, "rho", &ArrayData::Real(ArrayD::from_elem(IxDyn(&[2, 3, 4]), 2.5))).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dotreg"))
        .args(["render", "--input", path.with_extension("bin").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    for k in 0..2 {
        let img = std::fs::read(tmp.path().join(format!("flat_{k:03}.pgm"))).unwrap();
        let header = b"P5\n# min=2.5e0 max=2.5e0\n3 4\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert!(img[header.len()..].iter().all(|&b| b == 128));
        assert_eq!(img.len(), header.len() + 12);
    }
}

#[test]
fn artifacts_round_trip_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let specials = [0.0, -0.0, 1e-310, f64::MAX, f64::NAN, f64::INFINITY, -1.5, std::f64::consts::PI];
    let real = ArrayD::from_shape_vec(IxDyn(&[2, 4]), specials.to_vec()).unwrap();
    let complex = real.mapv(|v| Complex64::new(v, -v / 3.0));
    for (name, data) in [("r", ArrayData::Real(real.clone())), ("c", ArrayData::Complex(complex.clone()))] {
        let path = tmp.path().join(name);
        write_array(&path, name, &data).unwrap();
        let (h, back) = read_array(&path).unwrap();
        assert_eq!(h.shape, vec![2, 4]);
        assert_eq!(h.order, "C");
        let bits = |d: &ArrayData| -> Vec<u64> {
            match d {
                ArrayData::Real(a) => a.iter().map(|v| v.to_bits()).collect(),
                ArrayData::Complex(a) => a.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect(),
            }
        };
        assert_eq!(bits(&data), bits(&back));
        let bytes = std::fs::read(path.with_extension("bin")).unwrap();
        write_array(&path, name, &back).unwrap();
        assert_eq!(bytes, std::fs::read(path.with_extension("bin")).unwrap());
    }
}

#[test]
fn config_errors_name_the_field_and_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    for (args, field) in [
        (vec!["phantom", "--grid.nt=abc"], "grid.nt"),
        (vec!["phantom", "--grid.bogus=1"], "grid.bogus"),
        (vec!["phantom", "--energy.delta_infinite=true"], "energy.delta"),
        (vec!["phantom", "--solver.theta=2"], "solver"),
    ] {
        let o = dotreg(&args, out);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let e = error_line(&o);
        assert_eq!(e["error"], "config");
        assert!(e["message"].as_str().unwrap().starts_with(field), "{e}");
    }
    let cfg = out.join("bad.json");
    std::fs::write(&cfg, r#"{"grid": {"nt": 4, "nxx": 3}}"#).unwrap();
    let o = dotreg(&["phantom", "--config", cfg.to_str().unwrap()], out);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o)["message"].as_str().unwrap().starts_with("grid.nxx"));

    let o = dotreg(&["phantom", "--no-such-flag"], out);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_line(&o)["error"], "usage");
}

#[test]
fn runtime_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let o = dotreg(&["reconstruct"], out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "io");

    ok(&with_small("phantom", &[]), out);
    ok(&with_small("forward", &[]), out);
    let o = dotreg(&["reconstruct", "--grid.nt=4", "--grid.nx=8", "--grid.ny=8"], out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "artifact");

    // too few iterations to reach nonnegative densities: the trace is still written
    ok(&["phantom"], out);
    ok(&["forward"], out);
    let o = dotreg(&["reconstruct", "--solver.max_iters=5"], out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "solver");
    let trace = std::fs::read_to_string(out.join("reconstruct/trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
    assert!(out.join("reconstruct/rho.bin").exists());
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"grid": {"nt": 5}, "noise": {"gamma": 0.5}}"#).unwrap();
    let loaded =
        dotreg_cli::config::RunConfig::load(Some(&cfg), &["--noise.gamma=0.25".to_string()]).unwrap();
    assert_eq!(loaded.grid.nt, 5);
    assert_eq!(loaded.grid.nx, 16);
    assert_eq!(loaded.noise.gamma, 0.25);
    let loaded = dotreg_cli::config::RunConfig::load(None, &["--output=elsewhere".to_string()]).unwrap();
    assert_eq!(loaded.output, Path::new("elsewhere"));
}
