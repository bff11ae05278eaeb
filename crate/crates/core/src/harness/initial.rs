//! Initial fields: glued expansions, distance-based fronts and mass matching.

use crate::error::{Error, Result};
use crate::gch_solver::{Field, PeriodicGrid};
use crate::geometry_asym::{build_expansion, cutoff_minus, cutoff_plus, ExpansionSet, RadialGeometry};
use crate::potential::Potential;
use crate::profile1d::HeteroclinicProfile;
use crate::willmore_ref::ClosedCurve;

/// Target mass |Ω| − 2·(enclosed area).
pub fn target_mass(grid: &PeriodicGrid, area: f64) -> f64 {
    grid.volume() - 2.0 * area
}

/// Signed distance from every grid node to a closed curve, negative inside.
pub fn signed_distance(grid: &PeriodicGrid, curve: &ClosedCurve) -> Vec<f64> {
    let q = curve.points();
    let m = q.len();
    grid.points()
        .map(|p| {
            let mut best = f64::INFINITY;
            let mut inside = false;
            for j in 0..m {
                let (a, b) = (q[j], q[(j + 1) % m]);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len2 = dx * dx + dy * dy;
                let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
                let (ex, ey) = (p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
                best = best.min(ex * ex + ey * ey);
                // crossing count of a ray towards +x
                if (a[1] > p[1]) != (b[1] > p[1]) {
                    let x = a[0] + (p[1] - a[1]) * dx / dy;
                    if x > p[0] {
                        inside = !inside;
                    }
                }
            }
            if inside {
                -best.sqrt()
            } else {
                best.sqrt()
            }
        })
        .collect()
}

/// Smallest distance from the curve to the box boundary.
pub fn curve_clearance(grid: &PeriodicGrid, curve: &ClosedCurve) -> f64 {
    curve
        .points()
        .iter()
        .map(|&p| grid.clearance(p))
        .fold(f64::INFINITY, f64::min)
}

/// φ₀((d + δ)/ε) glued to ±1 outside the tube |d + δ| < ℓ.
pub fn front_from_distance(prof: &HeteroclinicProfile, dist: &[f64], eps: f64, ell: f64, shift: f64) -> Field {
    dist.iter()
        .map(|&d| {
            let d = d + shift;
            let (cp, cm) = (cutoff_plus(d / ell), cutoff_minus(d / ell));
            let mut v = cp - cm;
            if cp + cm < 1.0 {
                v += (1.0 - cp - cm) * prof.grid.interpolate(&prof.phi0, d / eps);
            }
            v
        })
        .collect::<Vec<_>>()
        .into()
}

/// Finds the shift δ with ∫u(δ) = `target` by secant steps.
///
/// `build(δ)` must be increasing in mass; `slope` is a guess of d∫u/dδ.
pub fn match_mass(
    grid: &PeriodicGrid,
    target: f64,
    slope: f64,
    build: impl Fn(f64) -> Result<Field>,
) -> Result<(Field, f64)> {
    let tol = 1e-11 * grid.volume();
    let mut d0 = 0.0;
    let u0 = build(d0)?;
    let mut f0 = grid.integrate(&u0) - target;
    if f0.abs() <= tol {
        return Ok((u0, d0));
    }
    let mut d1 = -f0 / slope;
    for _ in 0..60 {
        let u1 = build(d1)?;
        let f1 = grid.integrate(&u1) - target;
        if f1.abs() <= tol {
            return Ok((u1, d1));
        }
        if f1 == f0 {
            break;
        }
        let d2 = d1 - f1 * (d1 - d0) / (f1 - f0);
        (d0, f0) = (d1, f1);
        d1 = d2;
    }
    Err(Error::NonConvergence {
        what: "mass matching",
        iterations: 60,
        residual: f0.abs() / grid.volume(),
    })
}

/// Glued distance-function front around `curve` with mass |Ω| − 2·area(curve).
pub fn curve_front(prof: &HeteroclinicProfile, grid: &PeriodicGrid, curve: &ClosedCurve, eps: f64, ell: f64) -> Result<(Field, f64)> {
    check_tube(grid, curve, ell)?;
    let dist = signed_distance(grid, curve);
    let target = target_mass(grid, curve.area());
    match_mass(grid, target, 2.0 * curve.perimeter(), |s| {
        Ok(front_from_distance(prof, &dist, eps, ell, s))
    })
}

fn check_tube(grid: &PeriodicGrid, curve: &ClosedCurve, ell: f64) -> Result<()> {
    let room = curve_clearance(grid, curve);
    if !(ell > 0.0 && ell < room) {
        return Err(Error::InvalidConfiguration(format!(
            "tube half-width {ell} must be positive and below the curve's clearance {room} to the box edge"
        )));
    }
    Ok(())
}

/// Glued k-th order circle expansion with the radius shifted so ∫u = |Ω| − 2πR².
pub fn circle_expansion(
    prof: &HeteroclinicProfile,
    p: &Potential,
    grid: &PeriodicGrid,
    geom: &RadialGeometry,
    eps: f64,
    k: usize,
    ell: f64,
) -> Result<(Field, ExpansionSet)> {
    let m1_sq = prof.m1_sq();
    let v0 = crate::geometry_asym::radial_quantities(geom, 0.0)?.v0;
    let sigma2 = -0.5 * m1_sq * v0;
    let exp = build_expansion(prof, p, geom, eps, k, sigma2, ell)?;
    let target = target_mass(grid, geom.enclosed_volume());
    // a larger radius lowers the mass
    let slope = -4.0 * std::f64::consts::PI * geom.r;
    let (u, shift) = match_mass(grid, target, slope, |s| exp.with_radius(geom.r + s)?.glued_u(grid))?;
    Ok((u, exp.with_radius(geom.r + shift)?))
}

/// Two fronts at x = ±extent/4, u = +1 between them.
pub fn planar_fronts(prof: &HeteroclinicProfile, grid: &PeriodicGrid, eps: f64) -> Field {
    let q = grid.extent()[0] / 4.0;
    let c = grid.lower()[0] + grid.extent()[0] / 2.0;
    grid.sample(|x| {
        let s = x[0] - c;
        -prof.grid.interpolate(&prof.phi0, (s - q) / eps) * prof.grid.interpolate(&prof.phi0, (s + q) / eps)
    })
}
