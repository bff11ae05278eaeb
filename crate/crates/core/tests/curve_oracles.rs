//! Parametric Willmore reference flow.

use pfwillmore::geometry_asym::radial_quantities;
use pfwillmore::willmore_ref::*;
use pfwillmore::{ClosedCurve, CurveFlowParams, Error, RadialGeometry};
use proptest::prelude::*;
use std::f64::consts::PI;

fn weighted_mean(v: &[f64], c: &ClosedCurve) -> f64 {
    let w = c.node_weights();
    v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
}

#[test]
fn circle_curvature() {
    for (r, m) in [(1.0, 256), (2.0, 256), (0.5, 64)] {
        let c = ClosedCurve::circle([0.3, -0.2], r, m).unwrap();
        assert!(curvature(&c).iter().all(|k| (k - 1.0 / r).abs() <= 1e-3));
    }
}

#[test]
fn ellipse_curvature_extrema() {
    let c = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 512).unwrap();
    let k = curvature(&c);
    let max = k.iter().cloned().fold(f64::MIN, f64::max);
    let min = k.iter().cloned().fold(f64::MAX, f64::min);
    assert!((max - 2.0).abs() <= 2e-2, "max {max}");
    assert!((min - 0.25).abs() <= 2e-2, "min {min}");
}

#[test]
fn willmore_speed_matches_the_radial_formula() {
    for r in [0.5, 1.0, 2.0] {
        let c = ClosedCurve::circle([0.0, 0.0], r, 256).unwrap();
        let v0 = radial_quantities(&RadialGeometry::circle([0.0, 0.0], r).unwrap(), 0.0)
            .unwrap()
            .v0;
        for s in willmore_velocity(&c) {
            assert!((s + v0).abs() <= 1e-3 * v0.abs(), "R = {r}: {s} vs {}", -v0);
            assert!((s - 0.5 / r.powi(3)).abs() <= 1e-3);
        }
    }
    let big = ClosedCurve::circle([0.0, 0.0], 1e3, 256).unwrap();
    assert!(willmore_velocity(&big).iter().all(|s| s.abs() < 1e-9));
}

#[test]
fn circles_are_stationary() {
    for r in [0.5, 1.0, 3.0] {
        let c = ClosedCurve::circle([1.0, 2.0], r, 128).unwrap();
        let v = volume_preserving_velocity(&c);
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max <= 1e-8 / r.powi(3), "R = {r}: {max:e}");
        let params = CurveFlowParams::semi_implicit(1e-3);
        let next = curve_step(&c, &params).unwrap();
        for (a, b) in c.points().iter().zip(next.points()) {
            assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() <= 1e-10);
        }
    }
}

#[test]
fn projected_speed_has_zero_mean() {
    let c = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 256).unwrap();
    let v = volume_preserving_velocity(&c);
    assert!(weighted_mean(&v, &c).abs() <= 1e-12);
    assert!(v.iter().any(|x| x.abs() > 1e-2));
    assert!(weighted_mean(&willmore_velocity(&c), &c).abs() > 1e-2);
}

#[test]
fn uniform_circle_reparametrizes_to_itself() {
    let c = ClosedCurve::circle([0.0, 0.0], 1.5, 128).unwrap();
    let r = reparametrize(&c).unwrap();
    for (a, b) in c.points().iter().zip(r.points()) {
        assert!((a[0] - b[0]).abs() <= 1e-10 && (a[1] - b[1]).abs() <= 1e-10);
    }
}

#[test]
fn reparametrization_equalizes_spacing() {
    let c = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 256).unwrap();
    let s = c.segment_lengths();
    let spread = |s: &[f64]| {
        let max = s.iter().cloned().fold(f64::MIN, f64::max);
        let min = s.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / max
    };
    assert!(spread(&s) > 0.3);
    let r = reparametrize(&c).unwrap();
    assert!(spread(&r.segment_lengths()) < 1e-3);
    // no larger than the inscribed-polygon error already present
    assert!((r.area() - c.area()).abs() <= (c.area() - 2.0 * PI).abs());
    assert_eq!(r.points()[0], c.points()[0]);
    let exact = |p: [f64; 2]| (p[0] / 2.0).powi(2) + p[1].powi(2) - 1.0;
    assert!(r.points().iter().all(|&p| exact(p).abs() < 1e-6));
}

#[test]
fn ellipse_step_keeps_area() {
    let c = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 256).unwrap();
    let c = reparametrize(&c).unwrap();
    let h = c.segment_lengths().iter().cloned().fold(f64::MAX, f64::min);
    let params = CurveFlowParams::explicit(0.1 * h.powi(4));
    let next = curve_step(&c, &params).unwrap();
    assert!((next.area() - c.area()).abs() <= 1e-6 * c.area());
    assert!(bending_energy(&next) < bending_energy(&c));
    let semi = curve_step(&c, &CurveFlowParams::semi_implicit(1e-4)).unwrap();
    assert!((semi.area() - c.area()).abs() <= 1e-6 * c.area());
    assert!(bending_energy(&semi) < bending_energy(&c));
}

#[test]
fn time_steps_beyond_the_bound_are_refused() {
    let c = ClosedCurve::circle([0.0, 0.0], 1.0, 64).unwrap();
    assert!(matches!(
        curve_step(&c, &CurveFlowParams::explicit(1e-4)),
        Err(Error::Cfl { .. })
    ));
    let e = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 64).unwrap();
    assert!(matches!(
        curve_step(&e, &CurveFlowParams::semi_implicit(10.0)),
        Err(Error::Cfl { .. })
    ));
    assert!(CurveFlowParams::explicit(-1.0).validate().is_err());
}

#[test]
fn ellipse_relaxes_to_a_circle() {
    let c = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 128).unwrap();
    let params = CurveFlowParams { sample_every: 100, ..CurveFlowParams::semi_implicit(1e-3) };
    let tr = curve_evolve(&c, &params, 3.0).unwrap();
    assert_eq!(tr.steps, 3000);
    assert_eq!(tr.energies.len(), tr.steps + 1);
    for w in tr.energies.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-8));
    }
    let a0 = tr.samples[0].area;
    let last = tr.samples.last().unwrap();
    assert_eq!(last.time, 3.0);
    assert!((last.area - a0).abs() <= 1e-3 * a0);
    let r = (last.area / PI).sqrt();
    assert!(radial_deviation(&tr.curve, tr.curve.centroid(), r) <= 1e-2);
    assert!(last.isoperimetric_deficit < tr.samples[0].isoperimetric_deficit);
    assert!((bending_energy(&tr.curve) - 2.0 * PI / r).abs() < 1e-2);
}

#[test]
fn evolution_lands_on_the_end_time() {
    let c = ClosedCurve::circle([0.0, 0.0], 1.0, 64).unwrap();
    let tr = curve_evolve(&c, &CurveFlowParams::semi_implicit(0.03), 0.1).unwrap();
    assert_eq!(tr.steps, 4);
    assert_eq!(tr.samples.last().unwrap().time, 0.1);
    assert!(curve_evolve(&c, &CurveFlowParams::semi_implicit(0.03), -1.0).is_err());
}

#[test]
fn hausdorff_examples() {
    let a = ClosedCurve::circle([0.0, 0.0], 1.0, 128).unwrap();
    let same = compare_interfaces(&a, &a);
    assert_eq!((same.hausdorff, same.area_diff), (0.0, 0.0));
    let b = ClosedCurve::circle([0.0, 0.0], 1.1, 128).unwrap();
    assert!((compare_interfaces(&a, &b).hausdorff - 0.1).abs() <= 1e-6);
    let mut pts = a.points().to_vec();
    pts.rotate_left(37);
    let rotated = ClosedCurve::new(pts).unwrap();
    assert!(compare_interfaces(&a, &rotated).hausdorff <= 1e-9);
}

#[test]
fn curve_validation() {
    assert!(matches!(ClosedCurve::circle([0.0, 0.0], 1.0, 8), Err(Error::Geometry(_))));
    let mut cw = ClosedCurve::circle([0.0, 0.0], 1.0, 32).unwrap().into_points();
    cw.reverse();
    assert!(matches!(ClosedCurve::new(cw), Err(Error::Geometry(_))));
    let mut dup = ClosedCurve::circle([0.0, 0.0], 1.0, 32).unwrap().into_points();
    dup[5] = dup[4];
    assert!(matches!(ClosedCurve::new(dup), Err(Error::Geometry(_))));
    // a figure eight with one lobe enlarged so the signed area stays positive
    let eight: Vec<[f64; 2]> = (0..64)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 64.0;
            let s = if t.sin() >= 0.0 { 2.0 } else { 1.0 };
            [s * (2.0 * t).sin(), s * t.sin()]
        })
        .collect();
    let eight = if signed_area(&eight) < 0.0 { eight.into_iter().rev().collect() } else { eight };
    assert!(matches!(ClosedCurve::new(eight), Err(Error::Geometry(_))));
    let mut nan = ClosedCurve::circle([0.0, 0.0], 1.0, 32).unwrap().into_points();
    nan[0][0] = f64::NAN;
    assert!(ClosedCurve::new(nan).is_err());
    assert!(ClosedCurve::ellipse([0.0, 0.0], 0.0, 1.0, 32).is_err());
}

#[test]
fn circle_measures() {
    let c = ClosedCurve::circle([1.0, -2.0], 2.0, 512).unwrap();
    assert!((c.area() - 4.0 * PI).abs() < 1e-3);
    assert!((c.perimeter() - 4.0 * PI).abs() < 1e-3);
    assert!((bending_energy(&c) - PI).abs() < 1e-3);
    assert!(isoperimetric_deficit(&c).abs() < 1e-4);
    let g = c.centroid();
    assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12);
    for (n, p) in c.normals().iter().zip(c.points()) {
        let r = [(p[0] - 1.0) / 2.0, (p[1] + 2.0) / 2.0];
        assert!((n[0] - r[0]).abs() < 1e-12 && (n[1] - r[1]).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn circle_speed_is_radius_cubed(r in 0.2f64..5.0, cx in -3.0f64..3.0, cy in -3.0f64..3.0) {
        let c = ClosedCurve::circle([cx, cy], r, 128).unwrap();
        for s in willmore_velocity(&c) {
            prop_assert!((s * r.powi(3) - 0.5).abs() < 2e-3);
        }
    }

    #[test]
    fn hausdorff_is_symmetric(a in 1.0f64..2.0, b in 0.5f64..1.0, shift in -0.3f64..0.3) {
        let e = ClosedCurve::ellipse([0.0, 0.0], a, b, 64).unwrap();
        let c = ClosedCurve::circle([shift, 0.0], 1.0, 96).unwrap();
        let (x, y) = (compare_interfaces(&e, &c), compare_interfaces(&c, &e));
        prop_assert_eq!(x.hausdorff, y.hausdorff);
        prop_assert!((x.area_diff - (PI * a * b - PI).abs()).abs() < 0.05);
    }
}
