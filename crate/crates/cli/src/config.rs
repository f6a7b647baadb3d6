//! Run configuration: one JSON document, overridable by `--key=value` flags.

use std::fs;
use std::path::{Path, PathBuf};

use dotreg::energy::{Delta, EnergyParams};
use dotreg::grid::Grid;
use dotreg::meas::{
    pattern_cartesian_lines, pattern_cs_points, pattern_full_cartesian, pattern_radial_scaled, CoilSet,
    FrameOperator, IdentityOperator, MriOperator,
};
use dotreg::phantom::{PhantomKind, PhantomSpec};
use dotreg::solver::{DataFidelity, ScheduleEntry, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nt: 8,
            nx: 16,
            ny: 16,
            lower: [-0.5, -0.5],
            upper: [0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKindConfig {
    TranslatingGaussian,
    GrowingGaussian,
    TranslatingDisk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub kind: PhantomKindConfig,
    /// Start center; the fixed center of a growing phantom.
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Gaussian width or disk radius.
    pub width: f64,
    pub mass: f64,
    /// Ratio of final to initial mass.
    pub growth: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            kind: PhantomKindConfig::TranslatingGaussian,
            start: [-0.15, 0.0],
            end: [0.15, 0.0],
            width: 0.07,
            mass: 1.0,
            growth: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    CartesianLines,
    Radial,
    CompressedSensing,
    FullCartesian,
    Identity,
    EndFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    pub kind: PatternKind,
    /// Samples per line or spoke.
    pub samples: usize,
    /// Spoke radius, and the frequency box half-width of random trajectories.
    pub radius: f64,
    /// Number of moving points for compressed sensing.
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            kind: PatternKind::Radial,
            samples: 24,
            radius: 20.0,
            trajectories: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoilConfig {
    /// Number of ring coils; 0 selects a single uniform coil.
    pub count: usize,
    pub width: f64,
    pub ring_radius: f64,
}

impl Default for CoilConfig {
    fn default() -> Self {
        Self {
            count: 4,
            width: 0.6,
            ring_radius: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: Option<f64>,
    pub delta_infinite: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.001,
            delta: Some(1.0),
            delta_infinite: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityConfig {
    Quadratic,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub fidelity: FidelityConfig,
    pub max_iters: usize,
    pub primal_step: Option<f64>,
    pub dual_step: Option<f64>,
    pub adaptive: bool,
    pub theta: f64,
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub op_norm: Option<f64>,
    pub power_iters: usize,
    pub init_seed: Option<u64>,
    pub record_every: usize,
    pub envelope_eps: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::new(EnergyParams::new(1.0, 1.0, Delta::Infinite).expect("valid"));
        Self {
            fidelity: FidelityConfig::Quadratic,
            max_iters: d.max_iters,
            primal_step: d.primal_step,
            dual_step: d.dual_step,
            adaptive: d.adaptive,
            theta: d.theta,
            feasibility_tol: d.feasibility_tol,
            gap_tol: d.gap_tol,
            op_norm: d.op_norm,
            power_iters: d.power_iters,
            init_seed: d.init_seed,
            record_every: d.record_every,
            envelope_eps: d.envelope_eps,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub gamma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Stability,
    VanishingNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    /// Perturbation sizes of the stability study, strictly decreasing.
    pub sizes: Vec<f64>,
    /// Seeds of the perturbation directions.
    pub directions: Vec<u64>,
    /// Vanishing-noise schedule.
    pub schedule: Vec<ScheduleConfig>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            kind: StudyKind::VanishingNoise,
            sizes: vec![0.1, 0.05, 0.025],
            directions: vec![1, 2],
            schedule: (0..5)
                .map(|n| {
                    let gamma = 0.1 / f64::from(1u32 << n);
                    ScheduleConfig {
                        gamma,
                        alpha: gamma,
                        beta: gamma,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub phantom: PhantomConfig,
    pub pattern: PatternConfig,
    pub coils: CoilConfig,
    pub energy: EnergyConfig,
    pub solver: SolverSettings,
    pub noise: NoiseConfig,
    pub study: StudyConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            phantom: PhantomConfig::default(),
            pattern: PatternConfig::default(),
            coils: CoilConfig::default(),
            energy: EnergyConfig::default(),
            solver: SolverSettings::default(),
            noise: NoiseConfig::default(),
            study: StudyConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

/// The forward operator selected by the pattern section.
#[derive(Debug, Clone)]
pub enum Operator {
    Identity(IdentityOperator<f64>),
    Mri(MriOperator<f64>),
}

impl Operator {
    pub fn as_dyn(&self) -> &dyn FrameOperator<f64> {
        match self {
            Self::Identity(op) => op,
            Self::Mri(op) => op,
        }
    }
}

/// Split `--a.b=v` into the path `["a", "b"]` and the value `v`.
fn parse_override(arg: &str) -> Result<(Vec<&str>, &str)> {
    let body = arg
        .strip_prefix("--")
        .ok_or_else(|| CliError::Usage(format!("override {arg:?} must look like --key=value")))?;
    let (key, value) = body
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override {arg:?} must look like --key=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Usage(format!("override {arg:?} has an empty key")));
    }
    Ok((key.split('.').collect(), value))
}

fn set_path(root: &mut Value, path: &[&str], value: Value, full: &str) -> Result<()> {
    let mut node = root;
    for (n, key) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::config(path[..n].join("."), "is not a section"))?;
        if !obj.contains_key(*key) {
            return Err(CliError::config(full, "unknown field"));
        }
        node = obj.get_mut(*key).expect("key checked");
    }
    *node = value;
    Ok(())
}

/// A flag value is read as JSON when it parses, and as a string otherwise.
fn flag_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn from_value(value: Value, origin: &str) -> Result<RunConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { origin.to_string() } else { field };
        CliError::config(field, e.into_inner().to_string())
    })
}

impl RunConfig {
    /// Defaults, then the config file, then the flags.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(RunConfig::default()).expect("serializable");
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::config(path.display().to_string(), e.to_string()))?;
            // validate the file on its own so errors name the file's fields
            let parsed = from_value(file, "config")?;
            value = serde_json::to_value(parsed).expect("serializable");
        }
        for arg in overrides {
            let (key, raw) = parse_override(arg)?;
            set_path(&mut value, &key, flag_value(raw), &key.join("."))?;
        }
        let cfg = from_value(value, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.phantom_spec()?;
        self.solver_config()?;
        self.operator()?;
        if !(self.noise.gamma >= 0.0 && self.noise.gamma.is_finite()) {
            return Err(CliError::config("noise.gamma", "must be nonnegative and finite"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid<f64>> {
        let g = &self.grid;
        Grid::new(g.nt, g.nx, g.ny, g.lower, g.upper).map_err(|e| CliError::config("grid", e.to_string()))
    }

    pub fn delta(&self) -> Result<Delta<f64>> {
        match (self.energy.delta_infinite, self.energy.delta) {
            (true, Some(_)) => Err(CliError::config(
                "energy.delta",
                "must be null when energy.delta_infinite is true",
            )),
            (true, None) => Ok(Delta::Infinite),
            (false, Some(d)) => Delta::finite(d).map_err(|e| CliError::config("energy.delta", e.to_string())),
            (false, None) => Err(CliError::config(
                "energy.delta",
                "is required unless energy.delta_infinite is true",
            )),
        }
    }

    pub fn energy_params(&self) -> Result<EnergyParams<f64>> {
        EnergyParams::new(self.energy.alpha, self.energy.beta, self.delta()?)
            .map_err(|e| CliError::config("energy", e.to_string()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig<f64>> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(self.energy_params()?);
        cfg.fidelity = match s.fidelity {
            FidelityConfig::Quadratic => DataFidelity::Quadratic,
            FidelityConfig::Exact => DataFidelity::Exact,
        };
        cfg.max_iters = s.max_iters;
        cfg.primal_step = s.primal_step;
        cfg.dual_step = s.dual_step;
        cfg.adaptive = s.adaptive;
        cfg.theta = s.theta;
        cfg.feasibility_tol = s.feasibility_tol;
        cfg.gap_tol = s.gap_tol;
        cfg.op_norm = s.op_norm;
        cfg.power_iters = s.power_iters;
        cfg.init_seed = s.init_seed;
        cfg.record_every = s.record_every;
        cfg.envelope_eps = s.envelope_eps;
        cfg.validate().map_err(|e| CliError::config("solver", e.to_string()))?;
        Ok(cfg)
    }

    pub fn phantom_spec(&self) -> Result<PhantomSpec<f64>> {
        let p = &self.phantom;
        let kind = match p.kind {
            PhantomKindConfig::TranslatingGaussian => PhantomKind::TranslatingGaussian,
            PhantomKindConfig::GrowingGaussian => PhantomKind::GrowingGaussian,
            PhantomKindConfig::TranslatingDisk => PhantomKind::TranslatingDisk,
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(format!("phantom.{name}"), format!("must be positive, got {v}")))
            }
        };
        positive("width", p.width)?;
        positive("mass", p.mass)?;
        positive("growth", p.growth)?;
        if kind != PhantomKind::GrowingGaussian && p.growth != 1.0 {
            return Err(CliError::config("phantom.growth", "only a growing phantom changes mass"));
        }
        let end = if kind == PhantomKind::GrowingGaussian { p.start } else { p.end };
        let delta = self.delta().unwrap_or(Delta::Infinite);
        Ok(PhantomSpec {
            kind,
            start: p.start,
            end,
            width: p.width,
            mass: p.mass,
            growth: p.growth,
            delta,
        })
    }

    pub fn coils(&self, g: &Grid<f64>) -> Result<CoilSet<f64>> {
        let c = &self.coils;
        if c.count == 0 {
            return Ok(CoilSet::uniform(g));
        }
        CoilSet::gaussian_ring(g, c.count, c.width, c.ring_radius).map_err(|e| CliError::config("coils", e.to_string()))
    }

    pub fn operator(&self) -> Result<Operator> {
        let g = self.grid()?;
        let p = &self.pattern;
        let bad = |e: dotreg::Error| CliError::config("pattern", e.to_string());
        let pattern = match p.kind {
            PatternKind::Identity => return Ok(Operator::Identity(IdentityOperator::new(&g))),
            PatternKind::EndFrames => return Ok(Operator::Identity(IdentityOperator::end_frames(&g))),
            PatternKind::CartesianLines => pattern_cartesian_lines(&g, p.samples),
            PatternKind::Radial => pattern_radial_scaled(&g, p.samples, p.radius),
            PatternKind::FullCartesian => pattern_full_cartesian(&g),
            PatternKind::CompressedSensing => {
                if !(p.radius > 0.0 && p.radius.is_finite()) {
                    return Err(CliError::config("pattern.radius", "must be positive"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
                let r = p.radius;
                let ends: Vec<[f64; 4]> = (0..p.trajectories)
                    .map(|_| std::array::from_fn(|_| rng.random_range(-r..r)))
                    .collect();
                let paths: Vec<_> = ends
                    .iter()
                    .map(|&[a0, a1, b0, b1]| move |t: f64| [a0 + (b0 - a0) * t, a1 + (b1 - a1) * t])
                    .collect();
                pattern_cs_points(&paths, &g)
            }
        }
        .map_err(bad)?;
        Ok(Operator::Mri(MriOperator::new(&g, self.coils(&g)?, pattern).map_err(bad)?))
    }

    pub fn schedule(&self) -> Vec<ScheduleEntry<f64>> {
        self.study
            .schedule
            .iter()
            .map(|s| ScheduleEntry {
                gamma: s.gamma,
                alpha: s.alpha,
                beta: s.beta,
            })
            .collect()
    }
}
