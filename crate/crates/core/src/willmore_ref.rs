//! Volume-preserving Willmore flow of closed planar curves.
//!
//! The outward normal speed is V = κ_ss + κ³/2 minus its arc-length mean, so the
//! enclosed area is conserved and circles are stationary.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Shoelace area of a closed polygon; positive when counterclockwise.
pub fn signed_area(p: &[[f64; 2]]) -> f64 {
    let m = p.len();
    0.5 * (0..m)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % m]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Counterclockwise simple polygon with at least 16 nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    pts: Vec<[f64; 2]>,
}

pub const MIN_NODES: usize = 16;

impl ClosedCurve {
    pub fn new(pts: Vec<[f64; 2]>) -> Result<Self> {
        let c = Self::new_unchecked_simplicity(pts)?;
        if !c.is_simple() {
            return Err(Error::Geometry("curve self-intersects".into()));
        }
        Ok(c)
    }

    fn new_unchecked_simplicity(pts: Vec<[f64; 2]>) -> Result<Self> {
        if pts.len() < MIN_NODES {
            return Err(Error::Geometry(format!(
                "curve has {} nodes, need at least {MIN_NODES}",
                pts.len()
            )));
        }
        if pts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite node coordinates".into()));
        }
        let c = Self { pts };
        let lengths = c.segment_lengths();
        let scale = lengths.iter().sum::<f64>() / lengths.len() as f64;
        if let Some(i) = lengths.iter().position(|&l| l <= 1e-12 * scale) {
            return Err(Error::Geometry(format!("nodes {i} and {} coincide", (i + 1) % c.len())));
        }
        if c.signed_area() <= 0.0 {
            return Err(Error::Geometry("curve is not counterclockwise".into()));
        }
        Ok(c)
    }

    /// `m` equally spaced nodes on a circle, starting on the positive x-axis.
    pub fn circle(center: [f64; 2], r: f64, m: usize) -> Result<Self> {
        Self::ellipse(center, r, r, m)
    }

    /// `m` nodes at equally spaced parameter angles on an axis-aligned ellipse.
    pub fn ellipse(center: [f64; 2], a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!("semi-axes ({a}, {b}) must be positive")));
        }
        let pts = (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                [center[0] + a * t.cos(), center[1] + b * t.sin()]
            })
            .collect();
        Self::new(pts)
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.pts
    }

    pub fn into_points(self) -> Vec<[f64; 2]> {
        self.pts
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.pts)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Length of segment i → i+1.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let m = self.len();
        (0..m).map(|i| dist(self.pts[i], self.pts[(i + 1) % m])).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Half the two adjacent segment lengths, the arc-length weight of each node.
    pub fn node_weights(&self) -> Vec<f64> {
        let s = self.segment_lengths();
        let m = self.len();
        (0..m).map(|i| 0.5 * (s[(i + m - 1) % m] + s[i])).collect()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let a = self.signed_area();
        let m = self.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..m {
            let (p, q) = (self.pts[i], self.pts[(i + 1) % m]);
            let cr = p[0] * q[1] - q[0] * p[1];
            cx += (p[0] + q[0]) * cr;
            cy += (p[1] + q[1]) * cr;
        }
        [cx / (6.0 * a), cy / (6.0 * a)]
    }

    /// Outward unit normals from the centered tangent.
    pub fn normals(&self) -> Vec<[f64; 2]> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let (a, b) = (self.pts[(i + m - 1) % m], self.pts[(i + 1) % m]);
                let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
                let n = tx.hypot(ty);
                [ty / n, -tx / n]
            })
            .collect()
    }

    /// No two non-adjacent segments intersect (bucketed segment test).
    pub fn is_simple(&self) -> bool {
        let m = self.len();
        let lengths = self.segment_lengths();
        let cell = lengths.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let key = |v: f64| (v / cell).floor() as i64;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for i in 0..m {
            let (a, b) = (self.pts[i], self.pts[(i + 1) % m]);
            for gx in key(a[0].min(b[0]))..=key(a[0].max(b[0])) {
                for gy in key(a[1].min(b[1]))..=key(a[1].max(b[1])) {
                    buckets.entry((gx, gy)).or_default().push(i);
                }
            }
        }
        for segs in buckets.values() {
            for (x, &i) in segs.iter().enumerate() {
                for &j in &segs[x + 1..] {
                    let d = i.abs_diff(j);
                    if d <= 1 || d == m - 1 {
                        continue;
                    }
                    let (p, q) = (self.pts[i], self.pts[(i + 1) % m]);
                    let (r, s) = (self.pts[j], self.pts[(j + 1) % m]);
                    if segments_cross(p, q, r, s) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let d1 = orient(p, q, r);
    let d2 = orient(p, q, s);
    let d3 = orient(r, s, p);
    let d4 = orient(r, s, q);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0
}

/// Signed curvature per node from the circle through three consecutive nodes;
/// positive on a counterclockwise circle.
pub fn curvature(c: &ClosedCurve) -> Vec<f64> {
    let m = c.len();
    let p = c.points();
    (0..m)
        .map(|i| {
            let (a, b, q) = (p[(i + m - 1) % m], p[i], p[(i + 1) % m]);
            let cross = orient(a, b, q);
            2.0 * cross / (dist(a, b) * dist(b, q) * dist(a, q))
        })
        .collect()
}

/// Second arc-length derivative of nodal values on nonuniform spacing.
fn d2_ds2(c: &ClosedCurve, f: &[f64]) -> Vec<f64> {
    let m = c.len();
    let s = c.segment_lengths();
    (0..m)
        .map(|i| {
            let (hm, hp) = (s[(i + m - 1) % m], s[i]);
            let (fm, fp) = (f[(i + m - 1) % m], f[(i + 1) % m]);
            2.0 * ((fp - f[i]) / hp - (f[i] - fm) / hm) / (hm + hp)
        })
        .collect()
}

/// Outward normal speed κ_ss + κ³/2.
pub fn willmore_velocity(c: &ClosedCurve) -> Vec<f64> {
    let k = curvature(c);
    let kss = d2_ds2(c, &k);
    k.iter().zip(&kss).map(|(k, kss)| kss + 0.5 * k * k * k).collect()
}

/// Willmore speed minus its arc-length mean.
pub fn volume_preserving_velocity(c: &ClosedCurve) -> Vec<f64> {
    let v = willmore_velocity(c);
    remove_weighted_mean(&v, &c.node_weights())
}

fn remove_weighted_mean(v: &[f64], w: &[f64]) -> Vec<f64> {
    let mean = linalg::dot(v, w) / w.iter().sum::<f64>();
    v.iter().map(|x| x - mean).collect()
}

/// ∮ κ² ds.
pub fn bending_energy(c: &ClosedCurve) -> f64 {
    let k = curvature(c);
    let k2: Vec<f64> = k.iter().map(|k| k * k).collect();
    linalg::dot(&k2, &c.node_weights())
}

/// L²/(4πA) − 1, zero exactly for circles.
pub fn isoperimetric_deficit(c: &ClosedCurve) -> f64 {
    let l = c.perimeter();
    l * l / (4.0 * PI * c.area()) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveScheme {
    /// Forward Euler under the quartic restriction dt ≤ c_stab·(min spacing)⁴.
    Explicit,
    /// The fourth difference in arc length is taken implicitly; only the
    /// speed restriction dt·max|V| ≤ cfl·(min spacing) remains.
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFlowParams {
    pub dt: f64,
    /// Redistribute nodes every this many steps; 0 disables.
    pub reparam_every: usize,
    pub scheme: CurveScheme,
    pub c_stab: f64,
    pub cfl: f64,
    /// Record a time-series row every this many steps.
    pub sample_every: usize,
}

impl CurveFlowParams {
    pub fn explicit(dt: f64) -> Self {
        Self {
            dt,
            reparam_every: 50,
            scheme: CurveScheme::Explicit,
            c_stab: 0.1,
            cfl: 0.5,
            sample_every: 1,
        }
    }

    pub fn semi_implicit(dt: f64) -> Self {
        Self {
            scheme: CurveScheme::SemiImplicit,
            ..Self::explicit(dt)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.c_stab > 0.0 && self.cfl > 0.0) {
            return Err(Error::InvalidArgument("stability constants must be positive".into()));
        }
        Ok(())
    }
}

/// Periodic circulant solves for (I + dt·δ⁴/Δs⁴) on complex node coordinates.
struct Quartic {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Quartic {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn smooth(&self, vel: &[[f64; 2]], dt: f64, ds: f64) -> Vec<[f64; 2]> {
        let m = vel.len();
        let mut buf: Vec<Complex64> = vel.iter().map(|v| Complex64::new(v[0], v[1])).collect();
        self.fwd.process(&mut buf);
        let ds4 = ds.powi(4);
        for (k, c) in buf.iter_mut().enumerate() {
            let th = 2.0 * PI * k as f64 / m as f64;
            let s = 2.0 - 2.0 * th.cos();
            *c /= (1.0 + dt * s * s / ds4) * m as f64;
        }
        self.inv.process(&mut buf);
        buf.iter().map(|c| [c.re, c.im]).collect()
    }
}

/// One step of the volume-preserving flow with a fixed dt.
pub fn curve_step(c: &ClosedCurve, params: &CurveFlowParams) -> Result<ClosedCurve> {
    curve_step_with(c, params, None)
}

fn curve_step_with(
    c: &ClosedCurve,
    params: &CurveFlowParams,
    quartic: Option<&Quartic>,
) -> Result<ClosedCurve> {
    params.validate()?;
    let dt = params.dt;
    let lengths = c.segment_lengths();
    let h_min = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let v = volume_preserving_velocity(c);
    let vmax = linalg::sup_norm(&v);
    let normals = c.normals();
    let vel: Vec<[f64; 2]> = v.iter().zip(&normals).map(|(v, n)| [v * n[0], v * n[1]]).collect();
    let moved = match params.scheme {
        CurveScheme::Explicit => {
            let bound = params.c_stab * h_min.powi(4);
            if dt > bound {
                return Err(Error::Cfl { dt, bound });
            }
            vel
        }
        CurveScheme::SemiImplicit => {
            let bound = params.cfl * h_min / vmax.max(f64::MIN_POSITIVE);
            if dt > bound {
                return Err(Error::Cfl { dt, bound });
            }
            let ds = c.perimeter() / c.len() as f64;
            let smooth = match quartic {
                Some(q) => q.smooth(&vel, dt, ds),
                None => Quartic::new(c.len()).smooth(&vel, dt, ds),
            };
            // smoothing does not preserve the zero mean of the normal component
            let vn: Vec<f64> = smooth.iter().zip(&normals).map(|(d, n)| d[0] * n[0] + d[1] * n[1]).collect();
            let w = c.node_weights();
            let mean = linalg::dot(&vn, &w) / w.iter().sum::<f64>();
            smooth
                .iter()
                .zip(&normals)
                .map(|(d, n)| [d[0] - mean * n[0], d[1] - mean * n[1]])
                .collect()
        }
    };
    let pts: Vec<[f64; 2]> = c
        .points()
        .iter()
        .zip(&moved)
        .map(|(p, d)| [p[0] + dt * d[0], p[1] + dt * d[1]])
        .collect();
    ClosedCurve::new(pts)
}

/// Redistributes nodes to equal chord length along a periodic cubic spline,
/// keeping node 0 fixed.
pub fn reparametrize(c: &ClosedCurve) -> Result<ClosedCurve> {
    let m = c.len();
    let h = c.segment_lengths();
    let total: f64 = h.iter().sum();
    let mut knots = vec![0.0; m + 1];
    for i in 0..m {
        knots[i + 1] = knots[i] + h[i];
    }
    let p = c.points();
    let second = |axis: usize| -> Result<Vec<f64>> {
        let y: Vec<f64> = p.iter().map(|q| q[axis]).collect();
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let hm = h[(i + m - 1) % m];
            let hp = h[i];
            sub[i] = hm;
            diag[i] = 2.0 * (hm + hp);
            sup[i] = hp;
            rhs[i] = 6.0 * ((y[(i + 1) % m] - y[i]) / hp - (y[i] - y[(i + m - 1) % m]) / hm);
        }
        linalg::solve_cyclic_tridiagonal(&sub, &diag, &sup, &mut rhs)?;
        Ok(rhs)
    };
    let mx = second(0)?;
    let my = second(1)?;
    let eval = |y: &dyn Fn(usize) -> f64, mm: &[f64], seg: usize, t: f64| {
        let hs = h[seg];
        let (a, b) = (knots[seg + 1] - t, t - knots[seg]);
        let n = (seg + 1) % m;
        mm[seg] * a * a * a / (6.0 * hs)
            + mm[n] * b * b * b / (6.0 * hs)
            + (y(seg) - mm[seg] * hs * hs / 6.0) * a / hs
            + (y(n) - mm[n] * hs * hs / 6.0) * b / hs
    };
    let xs = |i: usize| p[i][0];
    let ys = |i: usize| p[i][1];
    let mut out = Vec::with_capacity(m);
    let mut seg = 0;
    for k in 0..m {
        let t = total * k as f64 / m as f64;
        while seg + 1 < m && knots[seg + 1] <= t {
            seg += 1;
        }
        if k == 0 {
            out.push(p[0]);
        } else {
            out.push([eval(&xs, &mx, seg, t), eval(&ys, &my, seg, t)]);
        }
    }
    ClosedCurve::new(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub time: f64,
    pub area: f64,
    pub bending_energy: f64,
    pub isoperimetric_deficit: f64,
}

impl CurveSample {
    fn of(c: &ClosedCurve, time: f64) -> Self {
        Self {
            time,
            area: c.area(),
            bending_energy: bending_energy(c),
            isoperimetric_deficit: isoperimetric_deficit(c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurveTrajectory {
    pub curve: ClosedCurve,
    pub samples: Vec<CurveSample>,
    /// Bending energy after every step, starting with the initial value.
    pub energies: Vec<f64>,
    pub steps: usize,
}

/// Evolves to time `t_end`; the last step is shortened to land on it.
pub fn curve_evolve(c: &ClosedCurve, params: &CurveFlowParams, t_end: f64) -> Result<CurveTrajectory> {
    params.validate()?;
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("end time {t_end} must be >= 0")));
    }
    let quartic = Quartic::new(c.len());
    let mut curve = if params.reparam_every > 0 {
        reparametrize(c)?
    } else {
        c.clone()
    };
    let mut t = 0.0;
    let mut samples = vec![CurveSample::of(&curve, 0.0)];
    let mut energies = vec![samples[0].bending_energy];
    let mut steps = 0;
    let tol = 1e-12 * t_end.max(1.0);
    while t < t_end - tol {
        let dt = params.dt.min(t_end - t);
        let p = CurveFlowParams { dt, ..*params };
        curve = curve_step_with(&curve, &p, Some(&quartic))?;
        steps += 1;
        t = if t_end - (t + dt) <= tol { t_end } else { t + dt };
        if params.reparam_every > 0 && steps % params.reparam_every == 0 {
            curve = reparametrize(&curve)?;
        }
        energies.push(bending_energy(&curve));
        if steps % params.sample_every.max(1) == 0 || t >= t_end - tol {
            samples.push(CurveSample::of(&curve, t));
        }
    }
    Ok(CurveTrajectory {
        curve,
        samples,
        energies,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceComparison {
    pub hausdorff: f64,
    pub area_diff: f64,
}

/// Symmetric Hausdorff distance from node-to-segment distances, and |area(a) − area(b)|.
pub fn compare_interfaces(a: &ClosedCurve, b: &ClosedCurve) -> InterfaceComparison {
    let hausdorff = one_sided(a, b).max(one_sided(b, a));
    InterfaceComparison {
        hausdorff,
        area_diff: (a.area() - b.area()).abs(),
    }
}

fn one_sided(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let q = b.points();
    let m = q.len();
    a.points()
        .iter()
        .map(|&p| {
            (0..m)
                .map(|j| point_segment_distance(p, q[j], q[(j + 1) % m]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Maximum relative deviation of node radii from `r` about `center`.
pub fn radial_deviation(c: &ClosedCurve, center: [f64; 2], r: f64) -> f64 {
    c.points()
        .iter()
        .map(|&p| (dist(p, center) - r).abs() / r)
        .fold(0.0, f64::max)
}

