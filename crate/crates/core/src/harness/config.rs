//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gch_solver::{PeriodicGrid, TimeScheme};
use crate::potential::Potential;
use crate::profile1d::ProfileGrid;
use crate::willmore_ref::CurveScheme;

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// A scalar or a per-axis pair.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Pair<T> {
    One(T),
    Two([T; 2]),
}

impl<T: Copy> Pair<T> {
    pub fn get(&self) -> [T; 2] {
        match *self {
            Pair::One(v) => [v, v],
            Pair::Two(v) => v,
        }
    }
}

/// A single value or one value per ε.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PerEps<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Copy> PerEps<T> {
    fn resolve(&self, n: usize, key: &str) -> Result<Vec<T>> {
        match self {
            PerEps::One(v) => Ok(vec![*v; n]),
            PerEps::Many(v) if v.len() == n => Ok(v.clone()),
            PerEps::Many(v) => Err(config_error(
                key,
                format!("{} values given for {n} eps entries", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub preset: Option<String>,
    pub c4: Option<f64>,
    pub c3: Option<f64>,
    pub c2: Option<f64>,
    pub c1: Option<f64>,
    pub c0: Option<f64>,
}

impl PotentialConfig {
    pub fn build(&self) -> Result<Potential> {
        let coeffs = [self.c4, self.c3, self.c2, self.c1, self.c0];
        let p = match self.preset.as_deref() {
            Some("standard-quartic") => {
                if coeffs.iter().any(Option::is_some) {
                    return Err(config_error(
                        "potential.preset",
                        "give either a preset or coefficients, not both",
                    ));
                }
                Potential::standard_quartic()
            }
            Some(other) => {
                return Err(config_error(
                    "potential.preset",
                    format!("unknown preset `{other}` (expected `standard-quartic`)"),
                ))
            }
            None if coeffs.iter().all(Option::is_none) => Potential::standard_quartic(),
            None => {
                let names = ["c4", "c3", "c2", "c1", "c0"];
                let mut c = [0.0; 5];
                for i in 0..5 {
                    c[i] = coeffs[i].ok_or_else(|| {
                        config_error(&format!("potential.{}", names[i]), "missing coefficient")
                    })?;
                }
                Potential::new(c[0], c[1], c[2], c[3], c[4])
            }
        };
        let report = p.validate_double_well();
        if !report.pass() {
            let failed: Vec<String> = report
                .failures()
                .map(|f| format!("{} ({:.3e})", f.name, f.value))
                .collect();
            return Err(config_error(
                "potential",
                format!("not a double well with wells at ±1: {}", failed.join(", ")),
            ));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "default_z_max")]
    pub z_max: f64,
    #[serde(default = "default_profile_h")]
    pub h: f64,
}

fn default_z_max() -> f64 {
    20.0
}

fn default_profile_h() -> f64 {
    0.01
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            z_max: default_z_max(),
            h: default_profile_h(),
        }
    }
}

impl ProfileConfig {
    pub fn build(&self) -> Result<ProfileGrid> {
        ProfileGrid::new(self.z_max, self.h).map_err(|e| config_error("profile", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: Pair<usize>,
    pub extent: Pair<f64>,
    /// Lower corner; defaults to a box centred on the origin.
    pub lower: Option<Pair<f64>>,
}

impl GridConfig {
    pub fn build(&self) -> Result<PeriodicGrid> {
        let n = self.points.get();
        let ext = self.extent.get();
        let lower = self
            .lower
            .map(|l| l.get())
            .unwrap_or([-ext[0] / 2.0, -ext[1] / 2.0]);
        PeriodicGrid::new_2d(n, lower, ext).map_err(|e| config_error("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stabilization {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialField {
    /// Glued circle expansion with mass matched to |Ω| − 2πR².
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        ell: Option<f64>,
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default)]
        perturbation: f64,
    },
    /// Distance-function front around an ellipse with matched mass.
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "default_curve_nodes")]
        m: usize,
        ell: Option<f64>,
        #[serde(default)]
        perturbation: f64,
    },
    /// Two fronts at x = ±extent/4.
    PlanarFront {
        #[serde(default)]
        perturbation: f64,
    },
    /// Raw little-endian f64 values, row-major.
    File { path: PathBuf },
}

fn default_order() -> usize {
    1
}

fn default_curve_nodes() -> usize {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Time-series row every this many accepted steps.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Field snapshot and interface polyline every this many steps; 0 keeps
    /// only the initial and final state.
    #[serde(default)]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    10
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            stride: default_stride(),
            snapshot_stride: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRun {
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualRun {
    #[serde(default = "default_order")]
    pub k: usize,
    pub eps: Vec<f64>,
    pub grid: GridConfig,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub center: [f64; 2],
    pub ell: f64,
    /// Centered-difference step for ∂t u_a; omitted means a stationary circle.
    pub dt_probe: Option<f64>,
    /// dR/dt used with `dt_probe`.
    #[serde(default)]
    pub radius_rate: f64,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
}

fn default_radius() -> f64 {
    1.0
}

impl Default for ResidualRun {
    /// Unit circle in [−2, 2)² at 256², ε ∈ {0.2, 0.1, 0.05}, ℓ = 0.45.
    fn default() -> Self {
        Self {
            k: 1,
            eps: vec![0.2, 0.1, 0.05],
            grid: GridConfig {
                points: Pair::One(256),
                extent: Pair::One(4.0),
                lower: None,
            },
            radius: 1.0,
            center: [0.0, 0.0],
            ell: 0.45,
            dt_probe: None,
            radius_rate: 0.0,
            potential: PotentialConfig::default(),
            profile: ProfileConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveRun {
    pub eps: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub grid: GridConfig,
    #[serde(default = "default_field_scheme")]
    pub scheme: TimeScheme,
    pub stabilization: Option<Stabilization>,
    #[serde(default = "default_true")]
    pub energy_backtrack: bool,
    pub initial: InitialField,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
}

fn default_field_scheme() -> TimeScheme {
    TimeScheme::StabilizedImex
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCurve {
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRun {
    pub initial: InitialCurve,
    #[serde(default = "default_curve_nodes")]
    pub m: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_reparam")]
    pub reparam_every: usize,
    #[serde(default = "default_curve_scheme")]
    pub scheme: CurveScheme,
    #[serde(default = "default_stride")]
    pub sample_every: usize,
    /// Polyline snapshot every this many steps; 0 keeps the first and last.
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_reparam() -> usize {
    50
}

fn default_curve_scheme() -> CurveScheme {
    CurveScheme::SemiImplicit
}

/// Parametric reference settings for the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default = "default_curve_nodes")]
    pub m: usize,
    #[serde(default = "default_reference_dt")]
    pub dt: f64,
    #[serde(default = "default_reparam")]
    pub reparam_every: usize,
}

fn default_reference_dt() -> f64 {
    2.5e-5
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            m: default_curve_nodes(),
            dt: default_reference_dt(),
            reparam_every: default_reparam(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeRun {
    pub eps: Vec<f64>,
    /// Grid points per side, one value or one per ε.
    pub points: PerEps<usize>,
    pub extent: Pair<f64>,
    pub dt: PerEps<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_converge_scheme")]
    pub scheme: TimeScheme,
    pub initial: InitialCurve,
    /// Tube half-width of the glued initial data.
    pub ell: f64,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
}

fn default_converge_scheme() -> TimeScheme {
    TimeScheme::ImplicitEuler
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Profile(ProfileRun),
    ResidualStudy(ResidualRun),
    Evolve(EvolveRun),
    CurveEvolve(CurveRun),
    Converge(ConvergeRun),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct Envelope {
    #[serde(default)]
    seed: u64,
    output_dir: Option<PathBuf>,
    #[serde(flatten)]
    experiment: toml::Table,
}

/// Parsed configuration: experiment, seed and output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            output_dir: PathBuf::from("out"),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.experiment {
            Experiment::Profile(_) => "profile",
            Experiment::ResidualStudy(_) => "residual-study",
            Experiment::Evolve(_) => "evolve",
            Experiment::CurveEvolve(_) => "curve-evolve",
            Experiment::Converge(_) => "converge",
        }
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let env: Envelope = toml::from_str(text).map_err(|e| toml_error(e, text))?;
        let experiment: Experiment = env.experiment.try_into().map_err(|e| toml_error(e, text))?;
        let cfg = Self {
            experiment,
            seed: env.seed,
            output_dir: env.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            base_dir: base_dir.to_path_buf(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_error("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml_str(&text, &base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Checks ranges, ε ordering, grid resolution and referenced files.
    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::Profile(r) => {
                r.potential.build()?;
                r.profile.build()?;
            }
            Experiment::ResidualStudy(r) => {
                r.potential.build()?;
                r.profile.build()?;
                check_eps_list(&r.eps, 1, "eps")?;
                if !(1..=2).contains(&r.k) {
                    return Err(config_error("k", format!("order {} not in {{1, 2}}", r.k)));
                }
                let grid = r.grid.build()?;
                for &e in &r.eps {
                    check_h(&grid, e, "grid.points")?;
                }
                positive(r.radius, "radius")?;
                positive(r.ell, "ell")?;
                if let Some(dt) = r.dt_probe {
                    positive(dt, "dt_probe")?;
                }
            }
            Experiment::Evolve(r) => {
                r.potential.build()?;
                r.profile.build()?;
                positive(r.eps, "eps")?;
                positive(r.dt, "dt")?;
                positive(r.t_end, "T")?;
                let grid = r.grid.build()?;
                check_h(&grid, r.eps, "grid.points")?;
                if let Some(s) = r.stabilization {
                    if !(s.k1 >= 0.0 && s.k2 >= 0.0) {
                        return Err(config_error("stabilization", "k1 and k2 must be >= 0"));
                    }
                }
                if r.output.stride == 0 {
                    return Err(config_error("output.stride", "must be at least 1"));
                }
                match &r.initial {
                    InitialField::Circle { radius, ell, order, .. } => {
                        positive(*radius, "initial.radius")?;
                        if let Some(l) = ell {
                            positive(*l, "initial.ell")?;
                        }
                        if *order > 2 {
                            return Err(config_error("initial.order", "order must be 0, 1 or 2"));
                        }
                    }
                    InitialField::Ellipse { a, b, m, ell, .. } => {
                        positive(*a, "initial.a")?;
                        positive(*b, "initial.b")?;
                        if *m < crate::willmore_ref::MIN_NODES {
                            return Err(config_error("initial.m", "too few curve nodes"));
                        }
                        if let Some(l) = ell {
                            positive(*l, "initial.ell")?;
                        }
                    }
                    InitialField::PlanarFront { .. } => {}
                    InitialField::File { path } => {
                        let full = self.resolve(path);
                        if !full.is_file() {
                            return Err(config_error(
                                "initial.path",
                                format!("{} does not exist", full.display()),
                            ));
                        }
                    }
                }
            }
            Experiment::CurveEvolve(r) => {
                positive(r.dt, "dt")?;
                positive(r.t_end, "T")?;
                check_curve(&r.initial)?;
                if r.m < crate::willmore_ref::MIN_NODES {
                    return Err(config_error("m", "too few curve nodes"));
                }
            }
            Experiment::Converge(r) => {
                r.potential.build()?;
                r.profile.build()?;
                check_eps_list(&r.eps, 2, "eps")?;
                let points = r.points.resolve(r.eps.len(), "points")?;
                let dts = r.dt.resolve(r.eps.len(), "dt")?;
                for (i, &e) in r.eps.iter().enumerate() {
                    let grid = self.converge_grid(r, points[i])?;
                    check_h(&grid, e, "points")?;
                    positive(dts[i], "dt")?;
                }
                positive(r.t_end, "T")?;
                positive(r.ell, "ell")?;
                check_curve(&r.initial)?;
                positive(r.reference.dt, "reference.dt")?;
            }
        }
        Ok(())
    }

    pub fn converge_grid(&self, r: &ConvergeRun, n: usize) -> Result<PeriodicGrid> {
        GridConfig {
            points: Pair::One(n),
            extent: r.extent,
            lower: None,
        }
        .build()
    }
}

fn positive(v: f64, key: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("{v} must be positive")))
    }
}

fn check_eps_list(eps: &[f64], min_len: usize, key: &str) -> Result<()> {
    if eps.len() < min_len {
        return Err(config_error(
            key,
            format!("need at least {min_len} eps values, got {}", eps.len()),
        ));
    }
    for &e in eps {
        positive(e, key)?;
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config_error(key, "eps values must be strictly decreasing"));
    }
    Ok(())
}

fn check_h(grid: &PeriodicGrid, eps: f64, key: &str) -> Result<()> {
    crate::geometry_asym::check_resolution(grid, eps).map_err(|e| config_error(key, e.to_string()))
}

fn check_curve(c: &InitialCurve) -> Result<()> {
    match *c {
        InitialCurve::Circle { radius, .. } => positive(radius, "initial.radius"),
        InitialCurve::Ellipse { a, b, .. } => {
            positive(a, "initial.a")?;
            positive(b, "initial.b")
        }
    }
}

/// Maps a TOML/serde error to a config error naming the offending key,
/// qualified by its `[section]` when the key can be found in the text.
fn toml_error(e: toml::de::Error, text: &str) -> Error {
    let msg = e.message().to_string();
    let quoted = |pat: &str| {
        msg.find(pat).and_then(|i| {
            let rest = &msg[i + pat.len()..];
            rest.find('`').map(|j| rest[..j].to_string())
        })
    };
    let qualify = |(section, key): (Option<String>, String)| match section {
        Some(s) => format!("{s}.{key}"),
        None => key,
    };
    let key = if let Some(name) = quoted("unknown field `").or_else(|| quoted("missing field `")) {
        locate(text, |l| l.split('=').next().map(str::trim) == Some(name.as_str()))
            .map(qualify)
            .unwrap_or(name)
    } else if let Some(value) = quoted("unknown variant `") {
        let needle = format!("\"{value}\"");
        locate(text, |l| l.contains(&needle))
            .map(qualify)
            .unwrap_or_else(|| "experiment".to_string())
    } else {
        "config".to_string()
    };
    Error::Config { key, message: msg }
}

/// Section header above and key of the first `key = value` line matching `pred`.
fn locate(text: &str, pred: impl Fn(&str) -> bool) -> Option<(Option<String>, String)> {
    let mut section = None;
    for line in text.lines().map(str::trim) {
        if line.starts_with('[') && line.ends_with(']') {
            section = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
        } else if line.contains('=') && pred(line) {
            let key = line.split('=').next().unwrap_or_default().trim().to_string();
            return Some((section, key));
        }
    }
    None
}
