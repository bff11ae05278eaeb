//! The one-dimensional heteroclinic front, its linearization and Fredholm solves.
//!
//! The front φ₀ solves φ'' = W'(φ) with φ(±∞) = ±1 on a truncated symmetric
//! grid. The linearized operator L₀ = −∂z² + W''(φ₀) has the translation mode
//! φ₀' as its kernel, and `L₀ w = f` is solvable only when f ⟂ φ₀'.

use crate::error::{Error, Result};
use crate::linalg::{self, SymPenta};
use crate::potential::Potential;

/// Compatibility tolerance for `∫ f φ₀' dz`.
pub const DEFAULT_COMPAT_TOL: f64 = 1e-8;

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-10;

/// Uniform symmetric grid on [−z_max, z_max] with an odd node count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileGrid {
    z_max: f64,
    h: f64,
    n: usize,
}

impl ProfileGrid {
    pub fn new(z_max: f64, h: f64) -> Result<Self> {
        if !(z_max >= 10.0) {
            return Err(Error::InvalidArgument(format!("z_max = {z_max} < 10")));
        }
        if !(h > 0.0 && h <= 0.05) {
            return Err(Error::InvalidArgument(format!("profile spacing h = {h} not in (0, 0.05]")));
        }
        let half = (z_max / h).round() as usize;
        Ok(Self {
            z_max,
            h: z_max / half as f64,
            n: 2 * half + 1,
        })
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn z(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.z(i)).collect()
    }

    /// Trapezoid rule over the whole grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let n = self.n;
        let inner: f64 = f[1..n - 1].iter().sum();
        self.h * (inner + 0.5 * (f[0] + f[n - 1]))
    }

    /// Discrete L² inner product (uniform weights, matches the operator's symmetry).
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h * linalg::dot(a, b)
    }

    /// Cubic Lagrange interpolation; clamps to end values outside the grid.
    pub fn interpolate(&self, values: &[f64], z: f64) -> f64 {
        let n = self.n;
        let s = (z + self.z_max) / self.h;
        if s <= 0.0 {
            return values[0];
        }
        if s >= (n - 1) as f64 {
            return values[n - 1];
        }
        let i = (s.floor() as usize).clamp(1, n - 3);
        let t = s - i as f64;
        let (p0, p1, p2, p3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
        // nodes at -1, 0, 1, 2
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }
}

/// φ₀ and its first two derivatives on a [`ProfileGrid`]; φ₀'' is taken from the ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroclinicProfile {
    pub grid: ProfileGrid,
    pub phi0: Vec<f64>,
    pub dphi0: Vec<f64>,
    pub ddphi0: Vec<f64>,
    /// ‖φ₀'‖ in L²(ℝ).
    pub m1: f64,
    /// Far-field decay rates √W''(∓1) on the left/right.
    pub decay: (f64, f64),
    pub newton_iterations: usize,
}

impl HeteroclinicProfile {
    pub fn m1_sq(&self) -> f64 {
        self.m1 * self.m1
    }

    /// Sup-norm of the sixth-order second difference of φ₀ minus W'(φ₀),
    /// over nodes at least three away from the ends.
    pub fn ode_residual(&self, p: &Potential) -> f64 {
        let n = self.grid.n();
        let h = self.grid.h();
        (3..n - 3)
            .map(|i| {
                let f = &self.phi0[i - 3..=i + 3];
                let dd = (2.0 * (f[0] + f[6]) - 27.0 * (f[1] + f[5]) + 270.0 * (f[2] + f[4])
                    - 490.0 * f[3])
                    / (180.0 * h * h);
                (dd - p.dw(f[3])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Slowest far-field decay rate.
    pub fn nu(&self) -> f64 {
        self.decay.0.min(self.decay.1)
    }
}

/// Newton iteration on the Numerov discretization of φ'' = W'(φ), φ(±z_max) = ±1.
///
/// Symmetric potentials are solved on [0, z_max] with φ(0) = 0 so the result is
/// odd to rounding; otherwise the full interval is used.
pub fn solve_heteroclinic(p: &Potential, grid: ProfileGrid) -> Result<HeteroclinicProfile> {
    p.require_double_well()?;
    let n = grid.n();
    let c = grid.center();
    let h = grid.h();
    let init = |z: f64| (z / std::f64::consts::SQRT_2).tanh();

    let (phi, iterations) = if p.is_symmetric() {
        // unknowns at nodes c+1 .. n-2
        let mut half: Vec<f64> = (c..n).map(|i| init(grid.z(i))).collect();
        half[0] = 0.0;
        *half.last_mut().unwrap() = 1.0;
        let it = numerov_newton(p, h, &mut half)?;
        let mut phi = vec![0.0; n];
        for (k, v) in half.iter().enumerate() {
            phi[c + k] = *v;
            phi[c - k] = -*v;
        }
        phi[c] = 0.0;
        (phi, it)
    } else {
        let mut phi: Vec<f64> = (0..n).map(|i| init(grid.z(i))).collect();
        phi[0] = -1.0;
        phi[n - 1] = 1.0;
        let it = numerov_newton(p, h, &mut phi)?;
        (phi, it)
    };

    let decay = (p.d2w(-1.0).sqrt(), p.d2w(1.0).sqrt());
    let padded = pad_by_reflection(&phi);
    let dphi0: Vec<f64> = (0..n)
        .map(|i| {
            let f = &padded[i..i + 7];
            (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * h)
        })
        .collect();
    let ddphi0: Vec<f64> = phi.iter().map(|&v| p.dw(v)).collect();
    let sq: Vec<f64> = dphi0.iter().map(|d| d * d).collect();
    let m1 = grid.integrate(&sq).sqrt();
    Ok(HeteroclinicProfile {
        grid,
        phi0: phi,
        dphi0,
        ddphi0,
        m1,
        decay,
        newton_iterations: iterations,
    })
}

/// Newton on interior nodes of `phi`, whose end values are Dirichlet data.
fn numerov_newton(p: &Potential, h: f64, phi: &mut [f64]) -> Result<usize> {
    let n = phi.len();
    let m = n - 2;
    let h2 = h * h;
    let mut residual = vec![0.0; m];
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut last = f64::INFINITY;
    for it in 0..=NEWTON_MAX_ITER {
        let f: Vec<f64> = phi.iter().map(|&v| p.dw(v)).collect();
        let df: Vec<f64> = phi.iter().map(|&v| p.d2w(v)).collect();
        for k in 0..m {
            let i = k + 1;
            residual[k] = (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) / h2
                - (f[i - 1] + 10.0 * f[i] + f[i + 1]) / 12.0;
            sub[k] = 1.0 / h2 - df[i - 1] / 12.0;
            diag[k] = -2.0 / h2 - 10.0 * df[i] / 12.0;
            sup[k] = 1.0 / h2 - df[i + 1] / 12.0;
        }
        last = linalg::sup_norm(&residual);
        if !last.is_finite() {
            break;
        }
        if it == NEWTON_MAX_ITER && last > NEWTON_TOL {
            break;
        }
        let mut delta: Vec<f64> = residual.iter().map(|r| -r).collect();
        linalg::solve_tridiagonal(&sub, &diag, &sup, &mut delta)?;
        for k in 0..m {
            phi[k + 1] += delta[k];
        }
        // one polishing step past the tolerance
        if last <= NEWTON_TOL {
            return Ok(it + 1);
        }
    }
    Err(Error::NonConvergence {
        what: "heteroclinic Newton iteration",
        iterations: NEWTON_MAX_ITER,
        residual: last,
    })
}

/// Extends the profile by three nodes at each end by odd reflection about the end values,
/// which keeps the second difference at the truncation boundary at zero.
fn pad_by_reflection(phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let mut out = Vec::with_capacity(n + 6);
    out.extend((1..=3).rev().map(|k| 2.0 * phi[0] - phi[k]));
    out.extend_from_slice(phi);
    out.extend((1..=3).map(|k| 2.0 * phi[n - 1] - phi[n - 1 - k]));
    out
}

/// Fourth-order symmetric discretization of L₀ with natural (Neumann) closure.
///
/// The stencil is (4/3)·A_h − (1/3)·A_2h, where A_h is the graph Laplacian
/// linking nodes at distance h; both pieces are symmetric and annihilate constants.
#[derive(Debug, Clone)]
pub struct DiscreteL0 {
    pub grid: ProfileGrid,
    pub matrix: SymPenta,
}

pub fn build_l0(prof: &HeteroclinicProfile, p: &Potential) -> DiscreteL0 {
    let grid = prof.grid;
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let near = 4.0 / 3.0 / h2;
    let far = 1.0 / 3.0 / (4.0 * h2);
    let mut d0: Vec<f64> = prof.phi0.iter().map(|&v| p.d2w(v)).collect();
    let mut d1 = vec![0.0; n - 1];
    let mut d2 = vec![0.0; n - 2];
    for i in 0..n - 1 {
        d1[i] -= near;
        d0[i] += near;
        d0[i + 1] += near;
    }
    for i in 0..n - 2 {
        d2[i] += far;
        d0[i] -= far;
        d0[i + 2] -= far;
    }
    DiscreteL0 {
        grid,
        matrix: SymPenta { d0, d1, d2 },
    }
}

impl DiscreteL0 {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.matrix.apply(x, &mut y);
        y
    }

    /// Smallest `count` eigenpairs by shifted inverse iteration with deflation.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let shift = 0.25;
        let factor = self.matrix.shifted(shift).ldl()?;
        let n = self.grid.n();
        let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
        for k in 0..count {
            // Alternating-parity start vector so every low mode has overlap.
            let mut x: Vec<f64> = (0..n)
                .map(|i| {
                    let z = self.grid.z(i);
                    (-(z * z) / 8.0).exp() * (1.0 + 0.3 * z + 0.05 * (k as f64 + 1.0) * z * z)
                })
                .collect();
            let mut lambda = 0.0;
            let mut converged = false;
            for _ in 0..2000 {
                for (_, v) in &found {
                    let c = linalg::dot(&x, v);
                    x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                }
                let norm = linalg::dot(&x, &x).sqrt();
                x.iter_mut().for_each(|a| *a /= norm);
                let mut y = x.clone();
                factor.solve_in_place(&mut y);
                for (_, v) in &found {
                    let c = linalg::dot(&y, v);
                    y.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                }
                let ny = linalg::dot(&y, &y).sqrt();
                y.iter_mut().for_each(|a| *a /= ny);
                let ay = self.apply(&y);
                let new_lambda = linalg::dot(&y, &ay);
                let change = linalg::dot(&x, &y).abs();
                x = y;
                if (new_lambda - lambda).abs() <= 1e-14 * (1.0 + new_lambda.abs())
                    && (1.0 - change) < 1e-15
                {
                    lambda = new_lambda;
                    converged = true;
                    break;
                }
                lambda = new_lambda;
            }
            if !converged {
                return Err(Error::NonConvergence {
                    what: "inverse iteration",
                    iterations: 2000,
                    residual: lambda,
                });
            }
            found.push((lambda, x));
        }
        Ok(found)
    }
}

/// Solves L₀ w = f for the representative orthogonal to φ₀'.
///
/// `far` holds the constants f tends to at (−∞, +∞). Fails with
/// [`Error::Solvability`] when |∫ f φ₀' dz| exceeds `compat_tol`.
pub fn fredholm_solve(
    op: &DiscreteL0,
    prof: &HeteroclinicProfile,
    f: &[f64],
    far: (f64, f64),
    compat_tol: f64,
) -> Result<Vec<f64>> {
    let grid = op.grid;
    let n = grid.n();
    if f.len() != n {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} values, grid has {n}",
            f.len()
        )));
    }
    if (f[0] - far.0).abs() > 1e-8 || (f[n - 1] - far.1).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "right-hand side ends ({:.3e}, {:.3e}) do not match far-field constants ({:.3e}, {:.3e})",
            f[0],
            f[n - 1],
            far.0,
            far.1
        )));
    }
    let integral = grid.inner(f, &prof.dphi0);
    if integral.abs() > compat_tol {
        return Err(Error::Solvability {
            integral,
            order: None,
        });
    }
    let psi_norm = grid.inner(&prof.dphi0, &prof.dphi0).sqrt();
    let psi: Vec<f64> = prof.dphi0.iter().map(|v| v / psi_norm).collect();
    let project = |x: &mut [f64]| {
        let c = grid.inner(x, &psi);
        x.iter_mut().zip(&psi).for_each(|(a, b)| *a -= c * b);
    };
    let mut rhs = f.to_vec();
    project(&mut rhs);

    // (L₀ + ψψᵀ) is definite; precondition with a banded factor of L₀ + δI.
    let pre = op.matrix.shifted(0.05).ldl()?;
    let h = grid.h();
    let mut w = vec![0.0; n];
    linalg::pcg(
        |x, y| {
            op.matrix.apply(x, y);
            let c = h * linalg::dot(x, &psi);
            y.iter_mut().zip(&psi).for_each(|(a, b)| *a += c * b);
        },
        |r, z| {
            z.copy_from_slice(r);
            pre.solve_in_place(z);
        },
        &rhs,
        &mut w,
        1e-14,
        500,
    )?;
    project(&mut w);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Fredholm solution".into()));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub entries: Vec<IdentityCheck>,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.gap <= self.tolerance)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.entries.iter().find(|e| e.name == name)
    }
}

pub const IDENTITY_TOL: f64 = 1e-7;

/// Checks the kernel identities of L₀ and the integral identity
/// ∫ W'''(φ₀) z (φ₀')³ dz = 2 ∫ |φ₀''|² dz.
///
/// Pointwise identities report sup-norms of each side and of their difference.
pub fn verify_identities(prof: &HeteroclinicProfile, p: &Potential) -> IdentityReport {
    let op = build_l0(prof, p);
    let grid = prof.grid;
    let z = grid.nodes();
    let n = grid.n();

    let l_dphi = op.apply(&prof.dphi0);
    let l_ddphi = op.apply(&prof.ddphi0);
    let target_dd: Vec<f64> = (0..n)
        .map(|i| -p.d3w(prof.phi0[i]) * prof.dphi0[i] * prof.dphi0[i])
        .collect();
    let z_dphi: Vec<f64> = (0..n).map(|i| z[i] * prof.dphi0[i]).collect();
    let l_zdphi = op.apply(&z_dphi);
    let target_z: Vec<f64> = prof.ddphi0.iter().map(|v| -2.0 * v).collect();

    let diff_sup = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };

    let lhs_int: Vec<f64> = (0..n)
        .map(|i| p.d3w(prof.phi0[i]) * z[i] * prof.dphi0[i].powi(3))
        .collect();
    let rhs_int: Vec<f64> = prof.ddphi0.iter().map(|v| 2.0 * v * v).collect();
    let lhs_val = grid.integrate(&lhs_int);
    let rhs_val = grid.integrate(&rhs_int);

    IdentityReport {
        entries: vec![
            IdentityCheck {
                name: "L0[phi0'] = 0",
                lhs: linalg::sup_norm(&l_dphi),
                rhs: 0.0,
                gap: linalg::sup_norm(&l_dphi),
            },
            IdentityCheck {
                name: "L0[phi0''] = -W'''(phi0)|phi0'|^2",
                lhs: linalg::sup_norm(&l_ddphi),
                rhs: linalg::sup_norm(&target_dd),
                gap: diff_sup(&l_ddphi, &target_dd),
            },
            IdentityCheck {
                name: "L0[z phi0'] = -2 phi0''",
                lhs: linalg::sup_norm(&l_zdphi),
                rhs: linalg::sup_norm(&target_z),
                gap: diff_sup(&l_zdphi, &target_z),
            },
            IdentityCheck {
                name: "int W'''(phi0) z phi0'^3 = 2 int phi0''^2",
                lhs: lhs_val,
                rhs: rhs_val,
                gap: (lhs_val - rhs_val).abs(),
            },
        ],
        tolerance: IDENTITY_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> (Potential, HeteroclinicProfile) {
        let p = Potential::standard_quartic();
        let prof = solve_heteroclinic(&p, ProfileGrid::new(20.0, 0.01).unwrap()).unwrap();
        (p, prof)
    }

    #[test]
    fn grid_shape() {
        let g = ProfileGrid::new(20.0, 0.01).unwrap();
        assert_eq!(g.n(), 4001);
        assert_eq!(g.z(g.center()), 0.0);
        assert!((g.z(0) + 20.0).abs() < 1e-12);
        assert!(ProfileGrid::new(5.0, 0.01).is_err());
        assert!(ProfileGrid::new(20.0, 0.1).is_err());
    }

    #[test]
    fn profile_invariants() {
        let (p, prof) = standard();
        let n = prof.grid.n();
        assert!((prof.phi0[0] + 1.0).abs() <= 1e-8);
        assert!((prof.phi0[n - 1] - 1.0).abs() <= 1e-8);
        assert_eq!(prof.phi0[prof.grid.center()], 0.0);
        assert!(prof.ode_residual(&p) <= 1e-8, "{}", prof.ode_residual(&p));
        for i in 0..n {
            assert!((prof.phi0[i] + prof.phi0[n - 1 - i]).abs() <= 1e-10);
        }
        assert!(prof.m1 > 0.0);
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = ProfileGrid::new(10.0, 0.05).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|z| 0.5 * z * z * z - z + 2.0).collect();
        for z in [-9.93, -0.01, 0.333, 7.77] {
            let exact = 0.5 * z * z * z - z + 2.0;
            assert!((g.interpolate(&vals, z) - exact).abs() < 1e-10);
        }
        assert_eq!(g.interpolate(&vals, 50.0), vals[g.n() - 1]);
    }

    #[test]
    fn operator_is_symmetric_and_kills_constants_in_the_bulk() {
        let (p, prof) = standard();
        let op = build_l0(&prof, &p);
        let n = prof.grid.n();
        let ones = vec![1.0; n];
        let y = op.apply(&ones);
        for i in 0..n {
            let expected = p.d2w(prof.phi0[i]);
            assert!((y[i] - expected).abs() < 1e-8);
        }
        // x·Ay = y·Ax for two arbitrary vectors
        let a: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 3 % 11) as f64).cos()).collect();
        let lhs = linalg::dot(&a, &op.apply(&b));
        let rhs = linalg::dot(&b, &op.apply(&a));
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn fredholm_rejects_incompatible_data() {
        let (p, prof) = standard();
        let op = build_l0(&prof, &p);
        let n = prof.grid.n();
        let err = fredholm_solve(&op, &prof, &prof.dphi0, (0.0, 0.0), DEFAULT_COMPAT_TOL).unwrap_err();
        match err {
            Error::Solvability { integral, .. } => assert!((integral - prof.m1_sq()).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
        let c = vec![0.7; n];
        let err = fredholm_solve(&op, &prof, &c, (0.7, 0.7), DEFAULT_COMPAT_TOL).unwrap_err();
        match err {
            Error::Solvability { integral, .. } => assert!((integral - 1.4).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fredholm_checks_declared_far_field() {
        let (p, prof) = standard();
        let op = build_l0(&prof, &p);
        let f = prof.ddphi0.clone();
        assert!(matches!(
            fredholm_solve(&op, &prof, &f, (1.0, 1.0), DEFAULT_COMPAT_TOL),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn fredholm_is_right_inverse_and_orthogonal() {
        let (p, prof) = standard();
        let op = build_l0(&prof, &p);
        let g = prof.grid;
        // odd, hence compatible, with far field ∓0.8
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, z)| 0.3 * z * (-z * z).exp() + 0.8 * prof.phi0[i])
            .collect();
        let n = g.n();
        let w = fredholm_solve(&op, &prof, &f, (f[0], f[n - 1]), DEFAULT_COMPAT_TOL).unwrap();
        assert!(g.inner(&w, &prof.dphi0).abs() <= 1e-10);
        let lw = op.apply(&w);
        let norm = g.inner(&prof.dphi0, &prof.dphi0);
        let c = g.inner(&f, &prof.dphi0) / norm;
        let err = (0..n)
            .map(|i| (lw[i] - (f[i] - c * prof.dphi0[i])).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err}");
        assert!((w[0] - f[0] / p.d2w(-1.0)).abs() <= 1e-6);
        assert!((w[n - 1] - f[n - 1] / p.d2w(1.0)).abs() <= 1e-6);
    }

    #[test]
    fn odd_integrands_vanish() {
        let (_, prof) = standard();
        let g = prof.grid;
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .zip(&prof.dphi0)
            .map(|(z, d)| z * d * d)
            .collect();
        assert!(g.integrate(&f).abs() <= 1e-12);
    }
}
