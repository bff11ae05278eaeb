//! Mass-preserving L² gradient flow of the generalized Cahn-Hilliard energy.
//!
//! The flow is ∂t u = −ε⁻¹ Π₀ F(u) with chemical potential
//! F(u) = ε⁻¹ (εΔ − ε⁻¹W''(u)) v and v = εΔu − ε⁻¹W'(u), discretized
//! pseudo-spectrally on a periodic grid.

mod contour;
mod grid;

pub use contour::{extract_interface, interface_loops, negative_area, radius_estimate};
pub use grid::{Field, PeriodicGrid, Spectral};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::Potential;

/// Π₀ f = f − mean(f).
pub fn mass_project(f: &[f64]) -> Field {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    Field::from(f.iter().map(|v| v - mean).collect::<Vec<_>>())
}

/// v = (ε²Δu − W'(u)) / ε.
pub fn v_of_u(spec: &Spectral, u: &[f64], eps: f64, p: &Potential) -> Field {
    let lap = spec.laplacian(u);
    v_from_lap(u, &lap, eps, p)
}

fn v_from_lap(u: &[f64], lap: &[f64], eps: f64, p: &Potential) -> Field {
    Field::from(
        u.iter()
            .zip(lap)
            .map(|(&u, &l)| eps * l - p.dw(u) / eps)
            .collect::<Vec<_>>(),
    )
}

/// F(u) = ε⁻¹ (εΔ − ε⁻¹W''(u)) v.
pub fn chemical_potential(spec: &Spectral, u: &[f64], eps: f64, p: &Potential) -> Field {
    let v = v_of_u(spec, u, eps, p);
    chemical_from_v(spec, u, &v, eps, p)
}

fn chemical_from_v(spec: &Spectral, u: &[f64], v: &[f64], eps: f64, p: &Potential) -> Field {
    let lap_v = spec.laplacian(v);
    Field::from(
        u.iter()
            .zip(v)
            .zip(lap_v.iter())
            .map(|((&u, &v), &lv)| (eps * lv - p.d2w(u) * v / eps) / eps)
            .collect::<Vec<_>>(),
    )
}

/// ∫ (1/2ε) v² dx.
pub fn energy(spec: &Spectral, u: &[f64], eps: f64, p: &Potential) -> f64 {
    let v = v_of_u(spec, u, eps, p);
    energy_from_v(spec.grid(), &v, eps)
}

fn energy_from_v(grid: &PeriodicGrid, v: &[f64], eps: f64) -> f64 {
    grid.integrate(&v.iter().map(|v| v * v).collect::<Vec<_>>()) / (2.0 * eps)
}

/// σε = −|Ω|⁻¹ ∫ W''(u) v dx.
pub fn sigma_eps(grid: &PeriodicGrid, u: &[f64], v: &[f64], p: &Potential) -> f64 {
    let s: f64 = u.iter().zip(v).map(|(&u, &v)| p.d2w(u) * v).sum();
    -s * grid.cell_volume() / grid.volume()
}

/// Field, time, ε and the conserved mass ∫u dx.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub u: Field,
    pub t: f64,
    pub eps: f64,
    pub m0: f64,
}

impl PhaseState {
    /// Starts at t = 0 with M₀ taken from `u`.
    pub fn new(grid: &PeriodicGrid, u: Field, eps: f64) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {}",
                u.len(),
                grid.len()
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
        }
        if !u.is_finite() {
            return Err(Error::InvalidArgument("initial field is not finite".into()));
        }
        let m0 = grid.integrate(&u);
        Ok(Self { u, t: 0.0, eps, m0 })
    }

    pub fn mass(&self, grid: &PeriodicGrid) -> f64 {
        grid.integrate(&self.u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    /// Constant-coefficient operator Δ² − κ₁ε⁻²Δ + κ₂ε⁻⁴ implicit, the rest explicit.
    StabilizedImex,
    /// One linearly implicit step with the frozen operator ε⁻⁴(−ε²Δ + W''(uⁿ))²,
    /// solved by preconditioned conjugate gradients.
    LinearizedImplicit,
    /// Backward Euler, solved by Newton iterations whose linear systems use
    /// the frozen operator at the current iterate.
    ImplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub k1: f64,
    pub k2: f64,
    pub max_steps: usize,
    pub energy_backtrack: bool,
    pub dt_min: f64,
    pub scheme: TimeScheme,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl SolverParams {
    /// κ₁ = 2·max|W''| on [−1, 1] and κ₂ = κ₁².
    pub fn for_potential(p: &Potential, dt: f64) -> Self {
        let k1 = 2.0 * p.max_abs_d2w_on_wells();
        Self {
            dt,
            k1,
            k2: k1 * k1,
            max_steps: 10_000_000,
            energy_backtrack: true,
            dt_min: 1e-14,
            scheme: TimeScheme::StabilizedImex,
            cg_tol: 1e-8,
            cg_max_iter: 500,
        }
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.k1 >= 0.0 && self.k2 >= 0.0) {
            return Err(Error::InvalidArgument("stabilization constants must be >= 0".into()));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            return Err(Error::InvalidArgument(format!(
                "dt_min = {} must lie in (0, dt]",
                self.dt_min
            )));
        }
        Ok(())
    }
}

/// Outcome of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub rejections: usize,
    pub cg_iterations: usize,
}

/// One sampled row of an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub sigma_eps: f64,
    pub radius_est: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: PhaseState,
    pub samples: Vec<Sample>,
    /// Energy after every accepted step, starting with the initial value.
    pub energies: Vec<f64>,
    pub steps: usize,
    pub rejections: usize,
    pub max_mass_drift: f64,
}

/// Relative energy increase tolerated before a step is retried with dt/2.
pub const ENERGY_TOL: f64 = 1e-8;

const NEWTON_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 20;
const NEWTON_CG_TOL: f64 = 1e-6;

pub struct GchSolver {
    spec: Spectral,
    pot: Potential,
    params: SolverParams,
}

impl GchSolver {
    pub fn new(grid: PeriodicGrid, pot: Potential, params: SolverParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            spec: Spectral::new(grid),
            pot,
            params,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.spec.grid()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spec
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    pub fn energy(&self, state: &PhaseState) -> f64 {
        energy(&self.spec, &state.u, state.eps, &self.pot)
    }

    /// One step of size `params.dt`, halved on energy increase.
    pub fn step(&self, state: &PhaseState) -> Result<(PhaseState, StepInfo)> {
        self.step_with_dt(state, self.params.dt)
    }

    pub fn step_with_dt(&self, state: &PhaseState, dt: f64) -> Result<(PhaseState, StepInfo)> {
        self.step_with_guess(state, dt, None)
    }

    /// As [`Self::step_with_dt`]; `guess` predicts uⁿ⁺¹ for the step `dt` and
    /// seeds the Newton iteration of [`TimeScheme::ImplicitEuler`].
    pub fn step_with_guess(
        &self,
        state: &PhaseState,
        dt: f64,
        guess: Option<&[f64]>,
    ) -> Result<(PhaseState, StepInfo)> {
        let dt0 = dt;
        let eps = state.eps;
        let u = &state.u;
        let v = v_of_u(&self.spec, u, eps, &self.pot);
        let e_old = energy_from_v(self.grid(), &v, eps);
        // G = F/ε; the flow is ∂t u = −Π₀G.
        let mut g = chemical_from_v(&self.spec, u, &v, eps, &self.pot);
        g.iter_mut().for_each(|x| *x /= eps);
        let g = mass_project(&g);
        if !g.is_finite() {
            return Err(Error::Divergence { t: state.t });
        }

        let mut dt = dt;
        let mut rejections = 0;
        loop {
            if dt < self.params.dt_min {
                return Err(Error::Stability {
                    dt_min: self.params.dt_min,
                });
            }
            let (u_new, cg_iterations) = match self.params.scheme {
                TimeScheme::StabilizedImex => (self.imex_update(u, &g, eps, dt), 0),
                TimeScheme::LinearizedImplicit => self.linearized_update(u, &g, eps, dt)?,
                TimeScheme::ImplicitEuler => {
                    let start: Field = match guess {
                        Some(w) => u.iter().zip(w).map(|(u, w)| u + (dt / dt0) * (w - u)).collect::<Vec<_>>().into(),
                        None => u.clone(),
                    };
                    self.implicit_euler_update(u, start, &g, eps, dt)?
                }
            };
            if !u_new.is_finite() {
                return Err(Error::Divergence { t: state.t + dt });
            }
            let e_new = energy(&self.spec, &u_new, eps, &self.pot);
            let accept = !self.params.energy_backtrack
                || e_new <= e_old + ENERGY_TOL * e_old.abs() + 1e-14;
            if accept {
                let next = PhaseState {
                    u: u_new,
                    t: state.t + dt,
                    eps,
                    m0: state.m0,
                };
                let info = StepInfo {
                    dt,
                    energy_before: e_old,
                    energy_after: e_new,
                    rejections,
                    cg_iterations,
                };
                return Ok((next, info));
            }
            rejections += 1;
            dt *= 0.5;
        }
    }

    /// uⁿ⁺¹ = uⁿ − dt (1 + dt·A)⁻¹ Π₀G with A = |k|⁴ + κ₁|k|²/ε² + κ₂/ε⁴.
    fn imex_update(&self, u: &[f64], g: &[f64], eps: f64, dt: f64) -> Field {
        let (k1, k2) = (self.params.k1, self.params.k2);
        let e2 = eps * eps;
        let upd = self.spec.apply_multiplier(g, |q| {
            if q == 0.0 {
                0.0
            } else {
                1.0 / (1.0 + dt * (q * q + k1 * q / e2 + k2 / (e2 * e2)))
            }
        });
        Field::from(u.iter().zip(upd.iter()).map(|(u, d)| u - dt * d).collect::<Vec<_>>())
    }

    /// uⁿ⁺¹ = uⁿ + δ with (I + dt·ε⁻⁴ Π₀𝓛²Π₀) δ = −dt·Π₀G and 𝓛 = −ε²Δ + W''(uⁿ).
    fn linearized_update(&self, u: &[f64], g: &[f64], eps: f64, dt: f64) -> Result<(Field, usize)> {
        let b: Vec<f64> = g.iter().map(|g| -dt * g).collect();
        let (delta, iters) = self.frozen_solve(u, &b, eps, dt)?;
        let u_new: Vec<f64> = u.iter().zip(delta.iter()).map(|(u, d)| u + d).collect();
        Ok((Field::from(u_new), iters))
    }

    /// Newton iterations for R(w) = w − uⁿ + dt·Π₀G(w) = 0 from `start`.
    ///
    /// The Jacobian is ε⁻⁴Π₀(𝓛² − εW'''(w)·v)Π₀ at the current iterate.
    fn implicit_euler_update(&self, u: &[f64], start: Field, g: &[f64], eps: f64, dt: f64) -> Result<(Field, usize)> {
        let mut w = start;
        let mut v = v_of_u(&self.spec, &w, eps, &self.pot);
        let mut r: Vec<f64> = if w[..] == *u {
            g.iter().map(|g| dt * g).collect()
        } else {
            let gw = mass_project(&chemical_from_v(&self.spec, &w, &v, eps, &self.pot));
            (0..u.len()).map(|i| w[i] - u[i] + dt * gw[i] / eps).collect()
        };
        let mut iters = 0;
        for _ in 0..NEWTON_MAX_ITER {
            let b: Vec<f64> = r.iter().map(|r| -r).collect();
            let (delta, it) = self.operator_solve(&w, Some(&v), &b, eps, dt, NEWTON_CG_TOL.max(self.params.cg_tol))?;
            iters += it;
            w.iter_mut().zip(delta.iter()).for_each(|(w, d)| *w += d);
            if delta.sup_norm() <= NEWTON_TOL {
                return Ok((w, iters));
            }
            v = v_of_u(&self.spec, &w, eps, &self.pot);
            let gw = mass_project(&chemical_from_v(&self.spec, &w, &v, eps, &self.pot));
            r = (0..u.len()).map(|i| w[i] - u[i] + dt * gw[i] / eps).collect();
        }
        Err(Error::NonConvergence {
            what: "implicit Euler Newton iteration",
            iterations: NEWTON_MAX_ITER,
            residual: linalg::sup_norm(&r),
        })
    }

    /// Solves (I + τ·ε⁻⁴ Π₀𝓛²Π₀) x = b with 𝓛 = −ε²Δ + W''(u) by PCG and projects x.
    fn frozen_solve(&self, u: &[f64], b: &[f64], eps: f64, tau: f64) -> Result<(Field, usize)> {
        self.operator_solve(u, None, b, eps, tau, self.params.cg_tol)
    }

    /// As [`Self::frozen_solve`], adding −ε·W'''(u)·v to 𝓛² when `v` is given.
    fn operator_solve(
        &self,
        u: &[f64],
        v: Option<&[f64]>,
        b: &[f64],
        eps: f64,
        tau: f64,
        tol: f64,
    ) -> Result<(Field, usize)> {
        let e2 = eps * eps;
        let diag: Option<Vec<f64>> = v.map(|v| {
            u.iter().zip(v).map(|(&u, &v)| -eps * self.pot.d3w(u) * v).collect()
        });
        let scale = tau / (e2 * e2);
        let w2: Vec<f64> = u.iter().map(|&u| self.pot.d2w(u)).collect();
        let spec = &self.spec;
        let ell = |x: &[f64]| -> Field {
            let lap = spec.laplacian(x);
            Field::from(
                x.iter()
                    .zip(lap.iter())
                    .zip(&w2)
                    .map(|((&x, &l), &w)| -e2 * l + w * x)
                    .collect::<Vec<_>>(),
            )
        };
        let c = self.pot.d2w(1.0).max(self.pot.d2w(-1.0));
        let mut x = vec![0.0; u.len()];
        let iters = linalg::pcg(
            |x, y| {
                // the mean mode is kept with unit weight so the system stays definite
                let px = mass_project(x);
                let mut l2 = ell(&ell(&px));
                if let Some(d) = &diag {
                    l2.iter_mut().zip(d).zip(px.iter()).for_each(|((l, d), p)| *l += d * p);
                }
                let l2 = mass_project(&l2);
                for i in 0..y.len() {
                    y[i] = x[i] + scale * l2[i];
                }
            },
            |r, z| {
                let s = spec.apply_multiplier(r, |q| {
                    if q == 0.0 {
                        1.0
                    } else {
                        let a = e2 * q + c;
                        1.0 / (1.0 + scale * a * a)
                    }
                });
                z.copy_from_slice(&s);
            },
            b,
            &mut x,
            tol,
            self.params.cg_max_iter,
        )?;
        Ok((mass_project(&x), iters))
    }

    /// Diagnostics for one state.
    pub fn sample(&self, state: &PhaseState, step: usize) -> Sample {
        let v = v_of_u(&self.spec, &state.u, state.eps, &self.pot);
        let radius_est = if self.grid().dims() == 2 {
            radius_estimate(&state.u, self.grid()).ok()
        } else {
            None
        };
        Sample {
            step,
            time: state.t,
            mass: state.mass(self.grid()),
            energy: energy_from_v(self.grid(), &v, state.eps),
            sigma_eps: sigma_eps(self.grid(), &state.u, &v, &self.pot),
            radius_est,
        }
    }

    /// Steps until `t_end`, sampling every `stride` accepted steps and at the end.
    ///
    /// After a rejected step the step size recovers by doubling up to `params.dt`.
    pub fn evolve(
        &self,
        state: PhaseState,
        t_end: f64,
        stride: usize,
        observer: &mut dyn FnMut(&PhaseState, &Sample),
    ) -> Result<Trajectory> {
        if !(t_end > state.t) {
            return Err(Error::InvalidArgument(format!(
                "end time {t_end} must exceed current time {}",
                state.t
            )));
        }
        let stride = stride.max(1);
        let grid = *self.grid();
        let mass0 = state.mass(&grid);
        let vol = grid.volume();
        let first = self.sample(&state, 0);
        observer(&state, &first);
        let mut samples = vec![first];
        let mut energies = vec![first.energy];
        let mut state = state;
        let mut dt = self.params.dt;
        let mut prev: Option<(Field, f64)> = None;
        let mut steps = 0;
        let mut rejections = 0;
        let mut max_drift: f64 = 0.0;
        let t_tol = 1e-12 * t_end.abs().max(1.0);
        while state.t < t_end - t_tol {
            if steps >= self.params.max_steps {
                return Err(Error::Numerical(format!(
                    "step budget of {} exhausted at t = {}",
                    self.params.max_steps, state.t
                )));
            }
            let remaining = t_end - state.t;
            let try_dt = dt.min(remaining);
            let guess = prev.as_ref().map(|(up, dtp): &(Field, f64)| {
                state.u.iter().zip(up.iter()).map(|(a, b)| a + (try_dt / dtp) * (a - b)).collect::<Vec<_>>()
            });
            let (mut next, info) = self.step_with_guess(&state, try_dt, guess.as_deref())?;
            if info.rejections > 0 {
                dt = info.dt;
            } else if dt < self.params.dt {
                dt = (2.0 * dt).min(self.params.dt);
            }
            if (t_end - next.t).abs() <= t_tol {
                next.t = t_end;
            }
            rejections += info.rejections;
            steps += 1;
            if self.params.scheme == TimeScheme::ImplicitEuler {
                prev = Some((state.u, info.dt));
            }
            state = next;
            energies.push(info.energy_after);
            max_drift = max_drift.max((state.mass(&grid) - mass0).abs() / vol);
            let done = state.t >= t_end - t_tol;
            if steps % stride == 0 || done {
                let s = self.sample(&state, steps);
                observer(&state, &s);
                samples.push(s);
            }
        }
        Ok(Trajectory {
            state,
            samples,
            energies,
            steps,
            rejections,
            max_mass_drift: max_drift,
        })
    }
}

