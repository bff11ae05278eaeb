//! Radial geometry, inner expansions around spheres, gluing and residuals.
//!
//! Around Γ₀ = {|x − c| = R} the signed distance is d₀ = ρ − R with ρ = |x − c|.
//! Inner terms are products of analytic radial factors and profile-grid functions
//! of z = d₀/ε:
//!
//! ```text
//! u₀ = φ₀            u₁ = 0            u₂ = D₀ w,  L₀w = zφ₀'
//! v₀ = Δd₀ φ₀'       v₁ = −D₀ zφ₀'     v₂ = Δd₀D₀ A + ∂ρD₀ B + σ₂ C
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gch_solver::{mass_project, Field, PeriodicGrid, Spectral};
use crate::potential::Potential;
use crate::profile1d::{build_l0, fredholm_solve, HeteroclinicProfile};

/// Sphere of radius `r` about `center` in ℝᴺ, N = center.len().
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGeometry {
    pub center: Vec<f64>,
    pub r: f64,
}

impl RadialGeometry {
    pub fn new(center: Vec<f64>, r: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension {} < 2",
                center.len()
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
        }
        Ok(Self { center, r })
    }

    pub fn circle(center: [f64; 2], r: f64) -> Result<Self> {
        Self::new(center.to_vec(), r)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// ρ = |x − c| for a point in the plane of the first two coordinates.
    pub fn rho(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1])
    }

    /// Enclosed volume: πR² in the plane, 4πR³/3 in space.
    pub fn enclosed_volume(&self) -> f64 {
        let n = self.dim() as f64;
        // |B_R| = π^{N/2} R^N / Γ(N/2 + 1)
        PI.powf(n / 2.0) * self.r.powf(n) / gamma_half_int(self.dim() + 2)
    }
}

/// Γ(k/2) for integer k ≥ 1.
fn gamma_half_int(k: usize) -> f64 {
    if k % 2 == 0 {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Distance-function quantities at ρ = R + r_offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuantities {
    pub d0: f64,
    pub lap_d0: f64,
    pub bilap_d0: f64,
    /// D₀ = ∇Δd₀·∇d₀ + ½(Δd₀)².
    pub cap_d0: f64,
    /// ∂ρD₀.
    pub dcap_d0: f64,
    /// −Δ²d₀ + (Δd₀ + ∂ρ)D₀ at ρ.
    pub v0_at: f64,
    /// The same combination on Γ₀.
    pub v0: f64,
}

fn radial_at(n: f64, rho: f64) -> (f64, f64, f64, f64, f64) {
    let lap = (n - 1.0) / rho;
    let bilap = (n - 1.0) * (3.0 - n) / rho.powi(3);
    let cap = ((n - 1.0).powi(2) / 2.0 - (n - 1.0)) / (rho * rho);
    let dcap = -2.0 * cap / rho;
    let v0 = -bilap + lap * cap + dcap;
    (lap, bilap, cap, dcap, v0)
}

pub fn radial_quantities(geom: &RadialGeometry, r_offset: f64) -> Result<RadialQuantities> {
    let rho = geom.r + r_offset;
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "evaluation radius {rho} must be positive"
        )));
    }
    let n = geom.dim() as f64;
    let (lap_d0, bilap_d0, cap_d0, dcap_d0, v0_at) = radial_at(n, rho);
    let v0 = radial_at(n, geom.r).4;
    Ok(RadialQuantities {
        d0: r_offset,
        lap_d0,
        bilap_d0,
        cap_d0,
        dcap_d0,
        v0_at,
        v0,
    })
}

/// Exact volume distortion (1 + r/R)^{N−1} of the level-set coordinates.
pub fn jacobian_radial(geom: &RadialGeometry, r: f64) -> Result<f64> {
    if !(geom.r + r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "R + r = {} must be positive",
            geom.r + r
        )));
    }
    Ok((1.0 + r / geom.r).powi(geom.dim() as i32 - 1))
}

/// 𝒱₀ = ½(|Ω| − M₀).
pub fn leading_volume(m0: f64, box_volume: f64) -> Result<f64> {
    if !(box_volume > 0.0) || m0.abs() > box_volume * (1.0 + 1e-14) {
        return Err(Error::InvalidArgument(format!(
            "mass {m0} outside [-|Ω|, |Ω|] for |Ω| = {box_volume}"
        )));
    }
    Ok(0.5 * (box_volume - m0))
}

/// σ₂ = −(m₁²/2)·(weighted mean of V₀), which makes the mean of V₀ + 2σ₂/m₁² vanish.
pub fn sigma2_volume_preserving(v0: &[f64], measure: &[f64], m1_sq: f64) -> Result<f64> {
    if v0.is_empty() || v0.len() != measure.len() {
        return Err(Error::InvalidArgument(format!(
            "{} velocity samples against {} measure weights",
            v0.len(),
            measure.len()
        )));
    }
    let total: f64 = measure.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("surface measure must be positive".into()));
    }
    let mean = v0.iter().zip(measure).map(|(v, m)| v * m).sum::<f64>() / total;
    Ok(-0.5 * m1_sq * mean)
}

/// Smooth monotone step: 0 for r ≤ ½, 1 for r ≥ 1.
pub fn cutoff_plus(r: f64) -> f64 {
    let s = 2.0 * r - 1.0;
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

pub fn cutoff_minus(r: f64) -> f64 {
    cutoff_plus(-r)
}

/// χ⁺u⁺ + χ⁻u⁻ + (1 − χ⁺ − χ⁻)·inner with χ± evaluated at d₀/ℓ.
///
/// `dist` returns the signed distance d₀ at a node and any auxiliary coordinate
/// the inner function needs; `inner` receives both.
pub fn glue_with(
    grid: &PeriodicGrid,
    ell: f64,
    far: (f64, f64),
    dist: impl Fn([f64; 2]) -> (f64, f64),
    inner: impl Fn(f64, f64) -> f64,
) -> Field {
    grid.sample(|p| {
        let (d0, aux) = dist(p);
        let r = d0 / ell;
        let (cp, cm) = (cutoff_plus(r), cutoff_minus(r));
        let mut v = cp * far.1 + cm * far.0;
        if cp + cm < 1.0 {
            v += (1.0 - cp - cm) * inner(d0, aux);
        }
        v
    })
}

/// Checks 2ℓ < R and that the ℓ-tube around Γ₀ sits inside the box.
pub fn check_fit(geom: &RadialGeometry, ell: f64, grid: &PeriodicGrid) -> Result<()> {
    if geom.dim() != 2 || grid.dims() != 2 {
        return Err(Error::InvalidConfiguration(
            "gluing on a grid needs a circle and a 2D grid".into(),
        ));
    }
    if !(ell > 0.0 && 2.0 * ell < geom.r) {
        return Err(Error::InvalidConfiguration(format!(
            "tube half-width {ell} must satisfy 0 < 2*ell < R = {}",
            geom.r
        )));
    }
    let c = [geom.center[0], geom.center[1]];
    let room = grid.clearance(c);
    if geom.r + ell > room {
        return Err(Error::InvalidConfiguration(format!(
            "tube of radius R + ell = {} does not fit: clearance to the box edge is {room}",
            geom.r + ell
        )));
    }
    Ok(())
}

/// Glues an inner function of (z, ρ) around a circle; node values z = d₀/ε.
pub fn glue(
    grid: &PeriodicGrid,
    geom: &RadialGeometry,
    eps: f64,
    ell: f64,
    far: (f64, f64),
    inner: impl Fn(f64, f64) -> f64,
) -> Result<Field> {
    check_fit(geom, ell, grid)?;
    let r = geom.r;
    Ok(glue_with(
        grid,
        ell,
        far,
        |p| {
            let rho = geom.rho(p);
            (rho - r, rho)
        },
        |d0, rho| inner(d0 / eps, rho),
    ))
}

/// Inner expansion terms through order `k` around a sphere.
#[derive(Debug, Clone)]
pub struct ExpansionSet {
    pub prof: HeteroclinicProfile,
    pub geometry: RadialGeometry,
    pub eps: f64,
    pub k: usize,
    /// (σ₀, σ₁, σ₂); the first two are zero.
    pub sigma: [f64; 3],
    pub ell: f64,
    /// L₀⁻¹(zφ₀'), the z-part of u₂.
    pub w: Vec<f64>,
    pub z_dphi: Vec<f64>,
    /// z-parts of v₂ multiplying Δd₀D₀, ∂ρD₀ and σ₂ (empty unless k = 2).
    pub v2_basis: [Vec<f64>; 3],
}

const EXPANSION_COMPAT_TOL: f64 = 1e-6;

pub fn build_expansion(
    prof: &HeteroclinicProfile,
    p: &Potential,
    geom: &RadialGeometry,
    eps: f64,
    k: usize,
    sigma2: f64,
    ell: f64,
) -> Result<ExpansionSet> {
    if !p.is_symmetric() {
        return Err(Error::Unsupported(
            "inner expansions need an even potential (c3 = c1 = 0)".into(),
        ));
    }
    if k > 2 {
        return Err(Error::Unsupported(format!("expansion order {k} > 2")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let op = build_l0(prof, p);
    let grid = prof.grid;
    let n = grid.n();
    let z_dphi: Vec<f64> = (0..n).map(|i| grid.z(i) * prof.dphi0[i]).collect();
    let solve = |f: &[f64], far: (f64, f64), order: usize| {
        fredholm_solve(&op, prof, f, far, EXPANSION_COMPAT_TOL).map_err(|e| match e {
            Error::Solvability { integral, .. } => Error::Solvability {
                integral,
                order: Some(order),
            },
            other => other,
        })
    };
    let w = solve(&z_dphi, (0.0, 0.0), 2)?;

    let mut v2_basis = [Vec::new(), Vec::new(), Vec::new()];
    if k == 2 {
        // ∂z(zφ₀') = φ₀' + zφ₀''
        let d_zdphi: Vec<f64> = (0..n).map(|i| prof.dphi0[i] + grid.z(i) * prof.ddphi0[i]).collect();
        let fa: Vec<f64> = (0..n)
            .map(|i| -p.d3w(prof.phi0[i]) * prof.dphi0[i] * w[i] - d_zdphi[i] + prof.dphi0[i])
            .collect();
        let fb: Vec<f64> = (0..n).map(|i| -2.0 * d_zdphi[i] + prof.dphi0[i]).collect();
        let m1_sq = prof.m1_sq();
        let fc: Vec<f64> = (0..n).map(|i| 2.0 / m1_sq * prof.dphi0[i] - 1.0).collect();
        v2_basis = [
            solve(&fa, (0.0, 0.0), 2)?,
            solve(&fb, (0.0, 0.0), 2)?,
            solve(&fc, (-1.0, -1.0), 2)?,
        ];
    }
    Ok(ExpansionSet {
        prof: prof.clone(),
        geometry: geom.clone(),
        eps,
        k,
        sigma: [0.0, 0.0, sigma2],
        ell,
        w,
        z_dphi,
        v2_basis,
    })
}

impl ExpansionSet {
    fn radial(&self, rho: f64) -> (f64, f64, f64, f64, f64) {
        radial_at(self.geometry.dim() as f64, rho)
    }

    fn at(&self, values: &[f64], z: f64) -> f64 {
        self.prof.grid.interpolate(values, z)
    }

    /// u_j at (z, ρ).
    pub fn u_term(&self, order: usize, z: f64, rho: f64) -> f64 {
        match order {
            0 => self.at(&self.prof.phi0, z),
            2 => self.radial(rho).2 * self.at(&self.w, z),
            _ => 0.0,
        }
    }

    /// v_j at (z, ρ).
    pub fn v_term(&self, order: usize, z: f64, rho: f64) -> f64 {
        let (lap, _, cap, dcap, _) = self.radial(rho);
        match order {
            0 => lap * self.at(&self.prof.dphi0, z),
            1 => -cap * self.at(&self.z_dphi, z),
            2 if self.k == 2 => {
                let [a, b, c] = &self.v2_basis;
                lap * cap * self.at(a, z) + dcap * self.at(b, z) + self.sigma[2] * self.at(c, z)
            }
            _ => 0.0,
        }
    }

    /// Σ_{j ≤ k} εʲ u_j.
    pub fn u_inner(&self, z: f64, rho: f64) -> f64 {
        (0..=self.k)
            .map(|j| self.eps.powi(j as i32) * self.u_term(j, z, rho))
            .sum()
    }

    /// Σ_{j ≤ k} εʲ v_j.
    pub fn v_inner(&self, z: f64, rho: f64) -> f64 {
        (0..=self.k)
            .map(|j| self.eps.powi(j as i32) * self.v_term(j, z, rho))
            .sum()
    }

    pub fn u_far(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    /// Outer values of v_a: ε²σ₂C(±∞) at second order, zero below.
    pub fn v_far(&self) -> (f64, f64) {
        if self.k == 2 {
            let c = &self.v2_basis[2];
            let s = self.eps * self.eps * self.sigma[2];
            (s * c[0], s * c[c.len() - 1])
        } else {
            (0.0, 0.0)
        }
    }

    /// E₀ = G₀/d₀ with G₀(ρ) = V₀(R) − V₀(ρ), and its limit −∂ρV₀ on Γ₀.
    pub fn e0(&self, rho: f64) -> f64 {
        let n = self.geometry.dim() as f64;
        let r = self.geometry.r;
        let d0 = rho - r;
        if d0.abs() > 1e-8 * r {
            (radial_at(n, r).4 - radial_at(n, rho).4) / d0
        } else {
            let h = 1e-4 * r;
            -(radial_at(n, r + h).4 - radial_at(n, r - h).4) / (2.0 * h)
        }
    }

    pub fn glued_u(&self, grid: &PeriodicGrid) -> Result<Field> {
        glue(grid, &self.geometry, self.eps, self.ell, self.u_far(), |z, rho| {
            self.u_inner(z, rho)
        })
    }

    pub fn glued_v(&self, grid: &PeriodicGrid) -> Result<Field> {
        glue(grid, &self.geometry, self.eps, self.ell, self.v_far(), |z, rho| {
            self.v_inner(z, rho)
        })
    }

    /// Same expansion around a circle of another radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        let mut e = self.clone();
        e.geometry = RadialGeometry::new(self.geometry.center.clone(), r)?;
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub eps: f64,
    pub r1_sup: f64,
    pub r2_sup: f64,
    pub mass_defect: f64,
    pub points: [usize; 2],
    pub h: f64,
}

/// Interface motion used for ε³∂t u_a; the radius moves at `radius_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeProbe {
    pub dt: f64,
    pub radius_rate: f64,
}

/// h ≤ 0.8ε.
pub fn check_resolution(grid: &PeriodicGrid, eps: f64) -> Result<()> {
    let h = grid.h_max();
    if h > 0.8 * eps {
        return Err(Error::Resolution {
            h,
            limit: 0.8 * eps,
        });
    }
    Ok(())
}

/// R₂ = εv_a − (ε²Δu_a − W'(u_a)) and R₁ = ε³∂t u_a + Π₀[(ε²Δ − W''(u_a)) v_a].
pub fn residual(
    exp: &ExpansionSet,
    p: &Potential,
    grid: &PeriodicGrid,
    probe: Option<TimeProbe>,
) -> Result<ResidualReport> {
    check_resolution(grid, exp.eps)?;
    let eps = exp.eps;
    let e2 = eps * eps;
    let u = exp.glued_u(grid)?;
    let v = exp.glued_v(grid)?;
    residual_fields(grid, p, eps, &u, &v, probe.map(|pr| -> Result<Field> {
        let r = exp.geometry.r;
        let plus = exp.with_radius(r + pr.dt * pr.radius_rate)?.glued_u(grid)?;
        let minus = exp.with_radius(r - pr.dt * pr.radius_rate)?.glued_u(grid)?;
        Ok(Field::from(
            plus.iter()
                .zip(minus.iter())
                .map(|(a, b)| e2 * eps * (a - b) / (2.0 * pr.dt))
                .collect::<Vec<_>>(),
        ))
    }).transpose()?)
    .map(|(r1, r2)| {
        let m0 = grid.volume() - 2.0 * exp.geometry.enclosed_volume();
        ResidualReport {
            eps,
            r1_sup: r1,
            r2_sup: r2,
            mass_defect: (grid.integrate(&u) - m0).abs(),
            points: [grid.nx(), grid.ny()],
            h: grid.h_max(),
        }
    })
}

/// Sup-norms of (R₁, R₂) for given fields; `eps3_dt_u` is ε³∂t u_a when known.
pub fn residual_fields(
    grid: &PeriodicGrid,
    p: &Potential,
    eps: f64,
    u: &[f64],
    v: &[f64],
    eps3_dt_u: Option<Field>,
) -> Result<(f64, f64)> {
    let spec = Spectral::new(*grid);
    let e2 = eps * eps;
    let (lap_u, lap_v) = spec.laplacian_pair(u, v);
    let r2: Vec<f64> = (0..u.len())
        .map(|i| eps * v[i] - (e2 * lap_u[i] - p.dw(u[i])))
        .collect();
    let inner: Vec<f64> = (0..u.len())
        .map(|i| e2 * lap_v[i] - p.d2w(u[i]) * v[i])
        .collect();
    let mut r1 = mass_project(&inner);
    if let Some(dt_u) = eps3_dt_u {
        r1.iter_mut().zip(dt_u.iter()).for_each(|(a, b)| *a += b);
    }
    let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (s1, s2) = (sup(&r1), sup(&r2));
    if !(s1.is_finite() && s2.is_finite()) {
        return Err(Error::Numerical("non-finite residual".into()));
    }
    Ok((s1, s2))
}
