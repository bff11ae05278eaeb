//! Small dense/banded kernels used by the 1D profile solves.

use crate::error::{Error, Result};

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    if d == 0.0 {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - sub[i] * c[i - 1];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
        }
        if i + 1 < n {
            c[i] = sup[i] / d;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Symmetric pentadiagonal matrix stored by its three upper bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPenta {
    pub d0: Vec<f64>,
    /// d1[i] couples i and i+1
    pub d1: Vec<f64>,
    /// d2[i] couples i and i+2
    pub d2: Vec<f64>,
}

impl SymPenta {
    pub fn len(&self) -> usize {
        self.d0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d0.is_empty()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.d0[i] * x[i];
            if i + 1 < n {
                acc += self.d1[i] * x[i + 1];
            }
            if i >= 1 {
                acc += self.d1[i - 1] * x[i - 1];
            }
            if i + 2 < n {
                acc += self.d2[i] * x[i + 2];
            }
            if i >= 2 {
                acc += self.d2[i - 2] * x[i - 2];
            }
            y[i] = acc;
        }
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let mut s = self.clone();
        s.d0.iter_mut().for_each(|v| *v += shift);
        s
    }

    /// Banded LDLᵀ factorization; fails on a nonpositive pivot.
    pub fn ldl(&self) -> Result<BandLdl> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            // Row i of L has entries at i-1 (l1[i-1]) and i-2 (l2[i-2]).
            let a_im2 = if i >= 2 { self.d2[i - 2] } else { 0.0 };
            let a_im1 = if i >= 1 { self.d1[i - 1] } else { 0.0 };
            if i >= 2 {
                l2[i - 2] = a_im2 / d[i - 2];
            }
            if i >= 1 {
                let mut v = a_im1;
                if i >= 2 {
                    v -= l2[i - 2] * d[i - 2] * l1[i - 2];
                }
                l1[i - 1] = v / d[i - 1];
            }
            let mut di = self.d0[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            if di <= 0.0 || !di.is_finite() {
                return Err(Error::Numerical(format!(
                    "banded factorization lost definiteness at row {i}"
                )));
            }
            d[i] = di;
        }
        Ok(BandLdl { d, l1, l2 })
    }
}

#[derive(Debug, Clone)]
pub struct BandLdl {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandLdl {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n {
            if i >= 1 {
                b[i] -= self.l1[i - 1] * b[i - 1];
            }
            if i >= 2 {
                b[i] -= self.l2[i - 2] * b[i - 2];
            }
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                b[i] -= self.l1[i] * b[i + 1];
            }
            if i + 2 < n {
                b[i] -= self.l2[i] * b[i + 2];
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
/// Returns the iteration count; `x` holds the initial guess on entry.
pub fn pcg<A, P>(
    apply: A,
    precondition: P,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let mut apply = apply;
    let mut precondition = precondition;
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    apply(x, &mut q);
    for i in 0..n {
        r[i] = b[i] - q[i];
    }
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    if dot(&r, &r).sqrt() <= rel_tol * b_norm {
        return Ok(0);
    }
    precondition(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(Error::Numerical("operator not positive definite in CG".into()));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let res = dot(&r, &r).sqrt();
        if res <= rel_tol * b_norm {
            return Ok(it);
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        what: "conjugate gradients",
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / b_norm,
    })
}

/// Periodic (cyclic) tridiagonal solve via Sherman-Morrison.
pub fn solve_cyclic_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    // corner entries: A[0][n-1] = sub[0], A[n-1][0] = sup[n-1]
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    solve_tridiagonal(sub, &d, sup, rhs)?;
    solve_tridiagonal(sub, &d, sup, &mut u)?;
    let fact = (rhs[0] + beta * rhs[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for i in 0..n {
        rhs[i] -= fact * u[i];
    }
    Ok(())
}
