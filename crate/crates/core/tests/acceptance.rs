//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pfwillmore::geometry_asym::radial_quantities;
use pfwillmore::harness::config::{ConvergeRun, CurveRun, EvolveRun, Experiment, InitialCurve, PerEps, Pair};
use pfwillmore::gch_solver::Sample;
use pfwillmore::harness::run::initial_field;
use pfwillmore::harness::{converge_study, curve_run, residual_study, ExperimentConfig};
use pfwillmore::profile1d::{build_l0, fredholm_solve, solve_heteroclinic, verify_identities, DEFAULT_COMPAT_TOL};
use pfwillmore::willmore_ref::{radial_deviation, volume_preserving_velocity, willmore_velocity};
use pfwillmore::{
    ClosedCurve, CurveScheme, Error, GchSolver, PhaseState, Potential, ProfileGrid, RadialGeometry,
    SolverParams, TimeScheme,
};

const PHI0_SUP: f64 = 1e-8;
const M1_SQ_TOL: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-3;
const KERNEL_COS: f64 = 1.0 - 1e-6;
const IDENTITY_GAP: f64 = 1e-7;
const K2_TOL: f64 = 1e-6;
const FREDHOLM_SUP: f64 = 1e-5;
const SOLVABILITY_TOL: f64 = 1e-6;
const RESIDUAL_SLOPE: f64 = 1.7;
const MASS_DRIFT: f64 = 1e-10;
const ENERGY_RISE: f64 = 1e-8;
const RADIUS_FACTOR: f64 = 5.0;
const CIRCLE_SPEED: f64 = 1e-8;
const AREA_DRIFT: f64 = 1e-3;
const RADIAL_DEVIATION: f64 = 1e-2;
const SPEED_REL: f64 = 1e-3;
/// Node count of the stationary-circle check.
const CIRCLE_NODES: usize = 256;
const HAUSDORFF_RATIO: f64 = 1.5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn standard_profile() -> (Potential, pfwillmore::HeteroclinicProfile) {
    let p = Potential::standard_quartic();
    let prof = solve_heteroclinic(&p, ProfileGrid::new(20.0, 0.01).unwrap()).unwrap();
    (p, prof)
}

fn profile_fidelity() -> Verdict {
    let start = Instant::now();
    let (_, prof) = standard_profile();
    let elapsed = start.elapsed();
    let sup = (0..prof.grid.n())
        .map(|i| (prof.phi0[i] - (prof.grid.z(i) / SQRT_2).tanh()).abs())
        .fold(0.0, f64::max);
    let m1 = (prof.m1_sq() - 2.0 * SQRT_2 / 3.0).abs();
    verdict(
        sup <= PHI0_SUP && m1 <= M1_SQ_TOL && within(elapsed, 1.0),
        format!("sup|phi0 - tanh| = {sup:.2e}, |m1^2 - 2sqrt2/3| = {m1:.2e}, {elapsed:.2?}"),
    )
}

fn operator_spectrum() -> Verdict {
    let start = Instant::now();
    let (p, prof) = standard_profile();
    let pairs = build_l0(&prof, &p).lowest_eigenpairs(2).unwrap();
    let elapsed = start.elapsed();
    let (l0, l1) = (pairs[0].0, pairs[1].0);
    let v = &pairs[0].1;
    let dot: f64 = v.iter().zip(&prof.dphi0).map(|(a, b)| a * b).sum();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let cos = (dot / (norm(v) * norm(&prof.dphi0))).abs();
    verdict(
        l0.abs() <= EIGEN_TOL && (l1 - 1.5).abs() <= EIGEN_TOL && cos >= KERNEL_COS && within(elapsed, 10.0),
        format!("eigenvalues {l0:.3e}, {l1:.6}; kernel cosine {cos:.15}, {elapsed:.2?}"),
    )
}

fn identities() -> Verdict {
    let (p, prof) = standard_profile();
    let report = verify_identities(&prof, &p);
    let worst = report.entries.iter().map(|e| e.gap).fold(0.0, f64::max);
    let k2 = 8.0 * SQRT_2 / 15.0;
    let integral = report.get("int W'''(phi0) z phi0'^3 = 2 int phi0''^2").unwrap();
    let k2_err = (integral.lhs - k2).abs().max((integral.rhs - k2).abs());
    verdict(
        report.entries.len() >= 3 && worst <= IDENTITY_GAP && k2_err <= K2_TOL,
        format!("largest of {} gaps {worst:.2e}, integral sides off 8sqrt2/15 by {k2_err:.2e}", report.entries.len()),
    )
}

fn fredholm() -> Verdict {
    let (p, prof) = standard_profile();
    let op = build_l0(&prof, &p);
    let n = prof.grid.n();
    let w = fredholm_solve(&op, &prof, &prof.ddphi0, (0.0, 0.0), DEFAULT_COMPAT_TOL).unwrap();
    let err = (0..n)
        .map(|i| (w[i] + 0.5 * prof.grid.z(i) * prof.dphi0[i]).abs())
        .fold(0.0, f64::max);
    let rejected = |f: &[f64], far: (f64, f64)| match fredholm_solve(&op, &prof, f, far, DEFAULT_COMPAT_TOL) {
        Err(Error::Solvability { integral, .. }) => Some(integral),
        _ => None,
    };
    let a = rejected(&prof.dphi0, (0.0, 0.0));
    let b = rejected(&vec![1.0; n], (1.0, 1.0));
    let pass = err <= FREDHOLM_SUP
        && a.is_some_and(|x| (x - prof.m1_sq()).abs() <= SOLVABILITY_TOL)
        && b.is_some_and(|x| (x - 2.0).abs() <= SOLVABILITY_TOL);
    verdict(
        pass,
        format!("sup|w + z phi0'/2| = {err:.2e}, rejection integrals {a:?} and {b:?}"),
    )
}

fn residual_order() -> Verdict {
    let start = Instant::now();
    let cfg = pfwillmore::harness::config::ResidualRun::default();
    let study = residual_study(&cfg).unwrap();
    let elapsed = start.elapsed();
    let ok_setup = cfg.k == 1 && cfg.eps == [0.2, 0.1, 0.05] && cfg.grid.points.get() == [256, 256];
    verdict(
        ok_setup
            && study.slope_r1 >= RESIDUAL_SLOPE
            && study.slope_r2 >= RESIDUAL_SLOPE
            && within(elapsed, 120.0),
        format!(
            "slopes R1 {:.3}, R2 {:.3} over eps {:?} at 256^2, {elapsed:.2?}",
            study.slope_r1, study.slope_r2, cfg.eps
        ),
    )
}

struct EvolveResult {
    samples: Vec<Sample>,
    energies: Vec<f64>,
    m0: f64,
    volume: f64,
    rejections: usize,
    elapsed: Duration,
}

fn evolve(text: &str) -> EvolveResult {
    let cfg = ExperimentConfig::from_toml_str(text, Path::new(".")).unwrap();
    let Experiment::Evolve(r): &Experiment = &cfg.experiment else { panic!("not an evolve config") };
    let r: &EvolveRun = r;
    let start = Instant::now();
    let p = r.potential.build().unwrap();
    let prof = solve_heteroclinic(&p, r.profile.build().unwrap()).unwrap();
    let grid = r.grid.build().unwrap();
    let u0 = initial_field(&cfg, &r.initial, &p, &prof, &grid, r.eps).unwrap();
    let params = SolverParams::for_potential(&p, r.dt).with_scheme(r.scheme);
    let solver = GchSolver::new(grid, p, params).unwrap();
    let state = PhaseState::new(&grid, u0, r.eps).unwrap();
    let m0 = state.m0;
    let tr = solver.evolve(state, r.t_end, 1, &mut |_, _| {}).unwrap();
    EvolveResult {
        samples: tr.samples,
        energies: tr.energies,
        m0,
        volume: grid.volume(),
        rejections: tr.rejections,
        elapsed: start.elapsed(),
    }
}

const CIRCLE_RUN: &str = r#"
experiment = "evolve"
eps = 0.1
dt = 1e-2
T = 1.0
scheme = "implicit-euler"

[grid]
points = 256
extent = 12.566370614359172

[initial]
kind = "circle"
radius = 2.0
"#;

const ELLIPSE_RUN: &str = r#"
experiment = "evolve"
eps = 0.1
dt = 1e-4
T = 0.02
scheme = "stabilized-imex"

[grid]
points = 128
extent = 6.283185307179586

[initial]
kind = "ellipse"
a = 2.0
b = 1.0
"#;

/// Largest mass drift relative to |m0| (or the domain volume when m0 is near zero).
fn mass_drift(r: &EvolveResult) -> f64 {
    let scale = r.m0.abs().max(1e-3 * r.volume);
    r.samples.iter().map(|s| (s.mass - r.m0).abs() / scale).fold(0.0, f64::max)
}

fn energy_rise(r: &EvolveResult) -> f64 {
    r.energies
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn conservation(runs: &[(&str, &EvolveResult)]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        let drift = mass_drift(r);
        let rise = energy_rise(r);
        pass &= drift <= MASS_DRIFT && rise <= ENERGY_RISE;
        parts.push(format!(
            "{name}: mass drift {drift:.2e}, largest energy change {rise:.2e}, {} steps, {} rejections",
            r.energies.len() - 1,
            r.rejections
        ));
    }
    verdict(pass, parts.join("; "))
}

fn stationary_circle(r: &EvolveResult) -> Verdict {
    let eps = 0.1;
    let worst = r
        .samples
        .iter()
        .map(|s| s.radius_est.map_or(f64::INFINITY, |re| (re - 2.0).abs()))
        .fold(0.0, f64::max);
    let t_end = r.samples.last().map_or(0.0, |s| s.time);
    verdict(
        worst <= RADIUS_FACTOR * eps * eps && (t_end - 1.0).abs() < 1e-12 && within(r.elapsed, 300.0),
        format!(
            "max |R_est - 2| = {worst:.3e} (bound {:.3e}) to t = {t_end}, {:.2?}",
            RADIUS_FACTOR * eps * eps,
            r.elapsed
        ),
    )
}

fn sharp_interface_reference() -> Verdict {
    let start = Instant::now();
    let speeds: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&r| {
            let c = ClosedCurve::circle([0.0, 0.0], r, CIRCLE_NODES).unwrap();
            let v = volume_preserving_velocity(&c);
            v.iter().fold(0.0f64, |m, x| m.max(x.abs())) * r.powi(3)
        })
        .collect();
    let run = CurveRun {
        initial: InitialCurve::Ellipse {
            a: 2.0,
            b: 1.0,
            center: [0.0, 0.0],
        },
        m: 512,
        dt: 5e-4,
        t_end: 3.0,
        reparam_every: 50,
        scheme: CurveScheme::SemiImplicit,
        sample_every: 100,
        snapshot_every: 0,
    };
    let res = curve_run(&run).unwrap();
    let elapsed = start.elapsed();
    let rise = res
        .energies
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let a0 = res.samples[0].area;
    let last = res.samples.last().unwrap();
    let area = (last.area - a0).abs() / a0;
    let curve = &res.snapshots.last().unwrap().1;
    let dev = radial_deviation(curve, curve.centroid(), (last.area / PI).sqrt());
    let pass = speeds.iter().all(|&s| s <= CIRCLE_SPEED)
        && rise <= ENERGY_RISE
        && area <= AREA_DRIFT
        && dev <= RADIAL_DEVIATION
        && within(elapsed, 60.0);
    verdict(
        pass,
        format!(
            "circle speed x R^3 {:.1e} (m = {CIRCLE_NODES}); ellipse to T = {}: energy change {rise:.1e}, area drift {area:.2e}, radial deviation {dev:.2e}, {elapsed:.2?}",
            speeds.iter().cloned().fold(0.0, f64::max),
            last.time
        ),
    )
}

fn dictionary() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut at_one = f64::NAN;
    for r in [0.5, 1.0, 2.0] {
        let v0 = radial_quantities(&RadialGeometry::circle([0.0, 0.0], r).unwrap(), 0.0)
            .unwrap()
            .v0;
        if r == 1.0 {
            at_one = -v0;
        }
        let c = ClosedCurve::circle([0.0, 0.0], r, 512).unwrap();
        for s in willmore_velocity(&c) {
            worst = worst.max((s + v0).abs() / v0.abs());
        }
    }
    verdict(
        worst <= SPEED_REL && (at_one - 0.5).abs() <= 1e-12,
        format!("largest relative gap {worst:.2e}; -V0(R=1) = {at_one}"),
    )
}

fn sharp_interface_convergence() -> Verdict {
    let start = Instant::now();
    let r = ConvergeRun {
        eps: vec![0.1, 0.05],
        points: PerEps::One(256),
        extent: Pair::One(2.0 * PI),
        dt: PerEps::One(4e-3),
        t_end: 0.5,
        scheme: TimeScheme::ImplicitEuler,
        initial: InitialCurve::Ellipse {
            a: 2.0,
            b: 1.0,
            center: [0.0, 0.0],
        },
        ell: 1.0,
        reference: Default::default(),
        potential: Default::default(),
        profile: Default::default(),
    };
    let rep = converge_study(&r, |_| {}).unwrap();
    let elapsed = start.elapsed();
    let ratio = rep.ratios[0].hausdorff[3];
    verdict(
        ratio >= HAUSDORFF_RATIO && within(elapsed, 900.0),
        format!(
            "Hausdorff at T = 0.5: {:.3e} (eps 0.1), {:.3e} (eps 0.05), ratio {ratio:.2}, {elapsed:.2?}",
            rep.rows[0].hausdorff[3], rep.rows[1].hausdorff[3]
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Verdict)> = vec![
        (1, "profile fidelity", profile_fidelity()),
        (2, "operator spectrum", operator_spectrum()),
        (3, "identities", identities()),
        (4, "Fredholm contract", fredholm()),
        (5, "residual order", residual_order()),
    ];
    let circle = evolve(CIRCLE_RUN);
    let ellipse = evolve(ELLIPSE_RUN);
    results.push((6, "conservation and dissipation", conservation(&[("circle", &circle), ("ellipse", &ellipse)])));
    results.push((7, "stationary circle", stationary_circle(&circle)));
    results.push((8, "sharp-interface reference", sharp_interface_reference()));
    results.push((9, "cross-module dictionary", dictionary()));
    results.push((10, "sharp-interface convergence", sharp_interface_convergence()));

    let mut failed = 0;
    for (k, name, v) in &results {
        println!("criterion {k:>2} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
