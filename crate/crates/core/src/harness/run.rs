//! Experiment drivers behind [`run_config`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::*;
use super::initial::{circle_expansion, curve_front, curve_clearance, planar_fronts};
use super::output::{read_f64_le, read_polyline, OutputDir};
use crate::error::{Error, Result};
use crate::gch_solver::{extract_interface, Field, GchSolver, PeriodicGrid, PhaseState, Sample, SolverParams};
use crate::geometry_asym::{build_expansion, radial_quantities, residual, RadialGeometry, ResidualReport, TimeProbe};
use crate::potential::Potential;
use crate::profile1d::{solve_heteroclinic, verify_identities, HeteroclinicProfile};
use crate::willmore_ref::{
    compare_interfaces, curve_evolve, radial_deviation, reparametrize, ClosedCurve, CurveFlowParams,
    CurveSample, InterfaceComparison,
};

/// What a run wrote and what it reports.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: &'static str,
    pub output_dir: PathBuf,
    /// Relative paths in write order, manifest excluded.
    pub files: Vec<PathBuf>,
    /// Human-readable result lines.
    pub report: Vec<String>,
}

struct Outcome {
    report: Vec<String>,
    failure: Option<String>,
}

impl Outcome {
    fn ok(report: Vec<String>) -> Self {
        Self { report, failure: None }
    }
}

/// Runs the configured experiment into `out` (or the configured directory)
/// and writes `manifest.csv` last.
///
/// A numerical failure detected after the files are written still produces
/// the manifest before the error is returned.
pub fn run_config(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.resolve(&cfg.output_dir));
    let mut od = OutputDir::create(&dir)?;
    let outcome = match &cfg.experiment {
        Experiment::Profile(r) => run_profile(r, &mut od)?,
        Experiment::ResidualStudy(r) => run_residual(r, &mut od)?,
        Experiment::Evolve(r) => run_evolve(cfg, r, &mut od)?,
        Experiment::CurveEvolve(r) => run_curve(r, &mut od)?,
        Experiment::Converge(r) => run_converge(cfg, r, &mut od)?,
    };
    od.write_manifest()?;
    if let Some(msg) = outcome.failure {
        return Err(Error::Numerical(msg));
    }
    Ok(RunSummary {
        experiment: cfg.kind(),
        output_dir: dir,
        files: od.files().to_vec(),
        report: outcome.report,
    })
}

fn profile_of(pot: &PotentialConfig, prof: &ProfileConfig) -> Result<(Potential, HeteroclinicProfile)> {
    let p = pot.build()?;
    let prof = solve_heteroclinic(&p, prof.build()?)?;
    Ok((p, prof))
}

fn run_profile(r: &ProfileRun, od: &mut OutputDir) -> Result<Outcome> {
    let (p, prof) = profile_of(&r.potential, &r.profile)?;
    let mut t = od.csv("profile.csv")?;
    t.header(&["z", "phi0", "dphi0", "ddphi0"])?;
    for i in 0..prof.grid.n() {
        t.row(&[prof.grid.z(i), prof.phi0[i], prof.dphi0[i], prof.ddphi0[i]])?;
    }
    t.finish()?;
    let ids = verify_identities(&prof, &p);
    let mut t = od.csv("identities.csv")?;
    t.header(&["identity", "lhs", "rhs", "gap"])?;
    for e in &ids.entries {
        t.cells(&[e.name.to_string(), fmt(e.lhs), fmt(e.rhs), fmt(e.gap)])?;
    }
    t.finish()?;
    let mut report = vec![
        format!("m1^2 = {:.12}", prof.m1_sq()),
        format!("newton iterations = {}", prof.newton_iterations),
    ];
    let worst = ids.entries.iter().map(|e| e.gap).fold(0.0, f64::max);
    report.push(format!("largest identity gap = {worst:.3e} (tolerance {:.1e})", ids.tolerance));
    Ok(Outcome {
        report,
        failure: (!ids.pass()).then(|| format!("identity gap {worst:.3e} exceeds {:.1e}", ids.tolerance)),
    })
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Residual sup-norms for each ε, plus fitted log-log slopes of R₁ and R₂.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStudy {
    pub reports: Vec<ResidualReport>,
    pub slope_r1: f64,
    pub slope_r2: f64,
}

pub fn residual_study(r: &ResidualRun) -> Result<ResidualStudy> {
    let (p, prof) = profile_of(&r.potential, &r.profile)?;
    let grid = r.grid.build()?;
    let geom = RadialGeometry::circle(r.center, r.radius)?;
    let sigma2 = if r.k == 2 {
        -0.5 * prof.m1_sq() * radial_quantities(&geom, 0.0)?.v0
    } else {
        0.0
    };
    let probe = r.dt_probe.map(|dt| TimeProbe {
        dt,
        radius_rate: r.radius_rate,
    });
    let reports = r
        .eps
        .iter()
        .map(|&e| {
            let exp = build_expansion(&prof, &p, &geom, e, r.k, sigma2, r.ell)?;
            residual(&exp, &p, &grid, probe)
        })
        .collect::<Result<Vec<_>>>()?;
    let r1: Vec<f64> = reports.iter().map(|x| x.r1_sup).collect();
    let r2: Vec<f64> = reports.iter().map(|x| x.r2_sup).collect();
    Ok(ResidualStudy {
        slope_r1: log_log_slope(&r.eps, &r1),
        slope_r2: log_log_slope(&r.eps, &r2),
        reports,
    })
}

fn run_residual(r: &ResidualRun, od: &mut OutputDir) -> Result<Outcome> {
    let study = residual_study(r)?;
    let mut t = od.csv("residual.csv")?;
    t.header(&["eps", "R1_sup", "R2_sup", "mass_defect"])?;
    for x in &study.reports {
        t.row(&[x.eps, x.r1_sup, x.r2_sup, x.mass_defect])?;
    }
    t.finish()?;
    let mut t = od.csv("slope.csv")?;
    t.header(&["quantity", "slope"])?;
    t.cells(&["R1_sup".into(), fmt(study.slope_r1)])?;
    t.cells(&["R2_sup".into(), fmt(study.slope_r2)])?;
    t.finish()?;
    let mut report: Vec<String> = study
        .reports
        .iter()
        .map(|x| {
            format!(
                "eps = {}: R1_sup = {:.4e}, R2_sup = {:.4e}, mass_defect = {:.4e}",
                x.eps, x.r1_sup, x.r2_sup, x.mass_defect
            )
        })
        .collect();
    report.push(format!("slope R1_sup = {:.3}, slope R2_sup = {:.3}", study.slope_r1, study.slope_r2));
    Ok(Outcome::ok(report))
}

fn default_circle_ell(grid: &PeriodicGrid, center: [f64; 2], radius: f64) -> f64 {
    (0.45 * radius).min(0.9 * (grid.clearance(center) - radius))
}

fn default_curve_ell(grid: &PeriodicGrid, curve: &ClosedCurve, inner: f64) -> f64 {
    (0.5 * inner).min(0.9 * curve_clearance(grid, curve))
}

/// Builds the initial field of an `evolve` run.
pub fn initial_field(
    cfg: &ExperimentConfig,
    init: &InitialField,
    p: &Potential,
    prof: &HeteroclinicProfile,
    grid: &PeriodicGrid,
    eps: f64,
) -> Result<Field> {
    let (mut u, perturbation) = match init {
        InitialField::Circle {
            radius,
            center,
            ell,
            order,
            perturbation,
        } => {
            let geom = RadialGeometry::circle(*center, *radius)?;
            let ell = ell.unwrap_or_else(|| default_circle_ell(grid, *center, *radius));
            (circle_expansion(prof, p, grid, &geom, eps, *order, ell)?.0, *perturbation)
        }
        InitialField::Ellipse {
            a,
            b,
            center,
            m,
            ell,
            perturbation,
        } => {
            let curve = reparametrize(&ClosedCurve::ellipse(*center, *a, *b, *m)?)?;
            let ell = ell.unwrap_or_else(|| default_curve_ell(grid, &curve, a.min(*b)));
            (curve_front(prof, grid, &curve, eps, ell)?.0, *perturbation)
        }
        InitialField::PlanarFront { perturbation } => (planar_fronts(prof, grid, eps), *perturbation),
        InitialField::File { path } => {
            let full = cfg.resolve(path);
            let u = read_f64_le(&full)?;
            if u.len() != grid.len() {
                return Err(Error::Config {
                    key: "initial.path".into(),
                    message: format!("{} holds {} values, the grid has {}", full.display(), u.len(), grid.len()),
                });
            }
            (Field::from(u), 0.0)
        }
    };
    if perturbation != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let noise: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = noise.iter().sum::<f64>() / noise.len() as f64;
        u.iter_mut()
            .zip(&noise)
            .for_each(|(x, n)| *x += perturbation * (n - mean));
    }
    Ok(u)
}

fn solver_params(p: &Potential, r: &EvolveRun) -> SolverParams {
    let mut params = SolverParams::for_potential(p, r.dt).with_scheme(r.scheme);
    if let Some(s) = r.stabilization {
        params.k1 = s.k1;
        params.k2 = s.k2;
    }
    params.energy_backtrack = r.energy_backtrack;
    params
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn run_evolve(cfg: &ExperimentConfig, r: &EvolveRun, od: &mut OutputDir) -> Result<Outcome> {
    let (p, prof) = profile_of(&r.potential, &r.profile)?;
    let grid = r.grid.build()?;
    let u0 = initial_field(cfg, &r.initial, &p, &prof, &grid, r.eps)?;
    let solver = GchSolver::new(grid, p, solver_params(&p, r))?;
    let state = PhaseState::new(&grid, u0, r.eps)?;
    let stride = r.output.stride;
    let snap = r.output.snapshot_stride;
    let every = if snap > 0 { gcd(stride, snap) } else { stride };
    let mut ts = od.csv("timeseries.csv")?;
    ts.header(&["step", "time", "mass", "energy", "sigma_eps", "radius_est"])?;
    let mut first_error: Option<Error> = None;
    let t_end = r.t_end;
    let mut observer = |s: &PhaseState, sample: &Sample| {
        if first_error.is_some() {
            return;
        }
        let last = sample.time == t_end;
        let res = (|| -> Result<()> {
            if sample.step % stride == 0 || last {
                ts.cells(&[
                    sample.step.to_string(),
                    fmt(sample.time),
                    fmt(sample.mass),
                    fmt(sample.energy),
                    fmt(sample.sigma_eps),
                    fmt(sample.radius_est.unwrap_or(f64::NAN)),
                ])?;
            }
            if sample.step == 0 || last || (snap > 0 && sample.step % snap == 0) {
                let name = format!("u_{:08}.bin", sample.step);
                od.snapshot(&name, &s.u, &grid, s.eps, s.t)?;
                if let Ok(c) = extract_interface(&s.u, &grid) {
                    od.polyline(&format!("interface_{:08}.csv", sample.step), &c)?;
                }
            }
            Ok(())
        })();
        if let Err(e) = res {
            first_error = Some(e);
        }
    };
    let tr = solver.evolve(state, t_end, every, &mut observer)?;
    if let Some(e) = first_error {
        return Err(e);
    }
    ts.finish()?;
    let e0 = tr.energies[0];
    let worst_rise = tr
        .energies
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let last = tr.samples.last().copied().unwrap();
    let mut report = vec![
        format!("steps = {}, rejections = {}", tr.steps, tr.rejections),
        format!("energy {e0:.10e} -> {:.10e}", last.energy),
        format!("max relative mass drift = {:.3e}", tr.max_mass_drift),
        format!("largest relative energy change per step = {worst_rise:.3e}"),
    ];
    if let Some(re) = last.radius_est {
        report.push(format!("radius estimate at T = {re:.10}"));
    }
    Ok(Outcome::ok(report))
}

/// Initial curve of a curve run with `m` nodes.
pub fn initial_curve(init: &InitialCurve, m: usize) -> Result<ClosedCurve> {
    match *init {
        InitialCurve::Circle { radius, center } => ClosedCurve::circle(center, radius, m),
        InitialCurve::Ellipse { a, b, center } => ClosedCurve::ellipse(center, a, b, m),
    }
}

/// Result of a sampled parametric run.
#[derive(Debug, Clone)]
pub struct CurveRunResult {
    pub samples: Vec<CurveSample>,
    pub energies: Vec<f64>,
    /// (time, curve) at the initial time, every snapshot and the end.
    pub snapshots: Vec<(f64, ClosedCurve)>,
    pub steps: usize,
}

/// Evolves in segments ending at `stops`, which must increase.
fn curve_segments(c0: &ClosedCurve, params: &CurveFlowParams, stops: &[f64]) -> Result<CurveRunResult> {
    let mut curve = c0.clone();
    let mut t = 0.0;
    let mut samples = Vec::new();
    let mut energies = Vec::new();
    let mut snapshots = Vec::new();
    let mut steps = 0;
    for &stop in stops {
        let tr = curve_evolve(&curve, params, stop - t)?;
        let skip = usize::from(!samples.is_empty());
        if snapshots.is_empty() {
            // the evolution starts from the redistributed curve
            let start = if params.reparam_every > 0 { reparametrize(&curve)? } else { curve.clone() };
            snapshots.push((0.0, start));
        }
        samples.extend(tr.samples.iter().skip(skip).map(|s| CurveSample { time: s.time + t, ..*s }));
        energies.extend(tr.energies.iter().skip(skip));
        steps += tr.steps;
        t = stop;
        curve = tr.curve;
        snapshots.push((t, curve.clone()));
    }
    Ok(CurveRunResult {
        samples,
        energies,
        snapshots,
        steps,
    })
}

pub fn curve_run(r: &CurveRun) -> Result<CurveRunResult> {
    let c0 = initial_curve(&r.initial, r.m)?;
    let params = CurveFlowParams {
        dt: r.dt,
        reparam_every: r.reparam_every,
        scheme: r.scheme,
        sample_every: r.sample_every,
        ..CurveFlowParams::semi_implicit(r.dt)
    };
    let mut stops = Vec::new();
    if r.snapshot_every > 0 {
        let span = r.snapshot_every as f64 * r.dt;
        let mut k = 1;
        while (k as f64) * span < r.t_end * (1.0 - 1e-12) {
            stops.push(k as f64 * span);
            k += 1;
        }
    }
    stops.push(r.t_end);
    curve_segments(&c0, &params, &stops)
}

fn run_curve(r: &CurveRun, od: &mut OutputDir) -> Result<Outcome> {
    let res = curve_run(r)?;
    let mut t = od.csv("curve_timeseries.csv")?;
    t.header(&["time", "area", "bending_energy"])?;
    for s in &res.samples {
        t.row(&[s.time, s.area, s.bending_energy])?;
    }
    t.finish()?;
    for (k, (_, c)) in res.snapshots.iter().enumerate() {
        od.polyline(&format!("curve_{k:04}.csv"), c)?;
    }
    let a0 = res.samples[0].area;
    let last = res.samples.last().unwrap();
    let curve = &res.snapshots.last().unwrap().1;
    let radius = (last.area / std::f64::consts::PI).sqrt();
    let monotone = res.energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-8));
    Ok(Outcome::ok(vec![
        format!("steps = {}", res.steps),
        format!("relative area drift = {:.3e}", (last.area - a0).abs() / a0),
        format!("bending energy {:.10e} -> {:.10e} (monotone: {monotone})", res.energies[0], last.bending_energy),
        format!("radial deviation = {:.3e}", radial_deviation(curve, curve.centroid(), radius)),
    ]))
}

/// Hausdorff distance and area difference of two polyline CSV files.
pub fn compare_files(a: &Path, b: &Path) -> Result<InterfaceComparison> {
    Ok(compare_interfaces(&read_polyline(a)?, &read_polyline(b)?))
}

/// One ε of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub points: usize,
    pub dt: f64,
    /// Hausdorff distance at T/8, T/4, T/2 and T.
    pub hausdorff: [f64; 4],
    /// L² distance at T between u and the glued front around the reference curve.
    pub l2_u: f64,
    /// Wall-clock seconds; reported but kept out of the files.
    pub runtime_s: f64,
}

/// Ratios between consecutive rows (coarser ε over finer ε).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRatio {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub hausdorff: [f64; 4],
    pub l2_u: f64,
    /// log(Hausdorff ratio at T) / log(ε ratio).
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub times: [f64; 4],
    pub rows: Vec<ConvergenceRow>,
    pub ratios: Vec<ConvergenceRatio>,
}

/// Phase-field runs for each ε against the parametric reference.
pub fn converge_study(r: &ConvergeRun, mut progress: impl FnMut(&ConvergenceRow)) -> Result<ConvergenceReport> {
    let (p, prof) = profile_of(&r.potential, &r.profile)?;
    let n = r.eps.len();
    let points = match &r.points {
        PerEps::One(v) => vec![*v; n],
        PerEps::Many(v) => v.clone(),
    };
    let dts = match &r.dt {
        PerEps::One(v) => vec![*v; n],
        PerEps::Many(v) => v.clone(),
    };
    let t = r.t_end;
    let times = [t / 8.0, t / 4.0, t / 2.0, t];
    let c0 = initial_curve(&r.initial, r.reference.m)?;
    let params = CurveFlowParams {
        reparam_every: r.reference.reparam_every,
        sample_every: usize::MAX,
        ..CurveFlowParams::semi_implicit(r.reference.dt)
    };
    let reference = curve_segments(&c0, &params, &times)?.snapshots;
    let mut rows = Vec::new();
    for i in 0..n {
        let eps = r.eps[i];
        let start = Instant::now();
        let grid = GridConfig {
            points: Pair::One(points[i]),
            extent: r.extent,
            lower: None,
        }
        .build()?;
        let glued = |c: &ClosedCurve| -> Result<Field> {
            match r.initial {
                InitialCurve::Circle { radius, center } => {
                    let geom = RadialGeometry::circle(center, radius)?;
                    Ok(circle_expansion(&prof, &p, &grid, &geom, eps, 1, r.ell)?.0)
                }
                InitialCurve::Ellipse { .. } => Ok(curve_front(&prof, &grid, c, eps, r.ell)?.0),
            }
        };
        let u0 = glued(&reference[0].1)?;
        let solver = GchSolver::new(
            grid,
            p,
            SolverParams::for_potential(&p, dts[i]).with_scheme(r.scheme),
        )?;
        let mut state = PhaseState::new(&grid, u0, eps)?;
        let mut hausdorff = [0.0; 4];
        for (k, &tk) in times.iter().enumerate() {
            state = solver.evolve(state, tk, usize::MAX, &mut |_, _| {})?.state;
            let iface = extract_interface(&state.u, &grid)?;
            hausdorff[k] = compare_interfaces(&iface, &reference[k + 1].1).hausdorff;
        }
        let u_ref = glued(&reference[4].1)?;
        let diff: Vec<f64> = state.u.iter().zip(u_ref.iter()).map(|(a, b)| (a - b).powi(2)).collect();
        let row = ConvergenceRow {
            eps,
            points: points[i],
            dt: dts[i],
            hausdorff,
            l2_u: grid.integrate(&diff).sqrt(),
            runtime_s: start.elapsed().as_secs_f64(),
        };
        progress(&row);
        rows.push(row);
    }
    let ratios = rows
        .windows(2)
        .map(|w| {
            let h = |k: usize| w[0].hausdorff[k] / w[1].hausdorff[k];
            ConvergenceRatio {
                eps_coarse: w[0].eps,
                eps_fine: w[1].eps,
                hausdorff: [h(0), h(1), h(2), h(3)],
                l2_u: w[0].l2_u / w[1].l2_u,
                order: h(3).ln() / (w[0].eps / w[1].eps).ln(),
            }
        })
        .collect();
    Ok(ConvergenceReport { times, rows, ratios })
}

fn run_converge(_cfg: &ExperimentConfig, r: &ConvergeRun, od: &mut OutputDir) -> Result<Outcome> {
    let rep = converge_study(r, |_| {})?;
    let mut t = od.csv("convergence.csv")?;
    t.header(&["eps", "hausdorff_T8", "hausdorff_T4", "hausdorff_T2", "hausdorff_T", "l2_u"])?;
    for row in &rep.rows {
        let h = row.hausdorff;
        t.row(&[row.eps, h[0], h[1], h[2], h[3], row.l2_u])?;
    }
    t.finish()?;
    let mut t = od.csv("ratios.csv")?;
    t.header(&["eps_coarse", "eps_fine", "ratio_T8", "ratio_T4", "ratio_T2", "ratio_T", "ratio_l2_u", "order_T"])?;
    for q in &rep.ratios {
        let h = q.hausdorff;
        t.row(&[q.eps_coarse, q.eps_fine, h[0], h[1], h[2], h[3], q.l2_u, q.order])?;
    }
    t.finish()?;
    let mut report: Vec<String> = rep
        .rows
        .iter()
        .map(|row| {
            format!(
                "eps = {}: hausdorff(T) = {:.4e}, l2_u = {:.4e}, {:.1} s",
                row.eps, row.hausdorff[3], row.l2_u, row.runtime_s
            )
        })
        .collect();
    report.extend(rep.ratios.iter().map(|q| {
        format!(
            "eps {} -> {}: hausdorff ratio at T = {:.3}, order = {:.2}",
            q.eps_coarse, q.eps_fine, q.hausdorff[3], q.order
        )
    }));
    Ok(Outcome::ok(report))
}

fn fmt(x: f64) -> String {
    super::output::fmt_f64(x)
}
