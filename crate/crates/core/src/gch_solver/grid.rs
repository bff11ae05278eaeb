use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on a box `[lower, lower + extent)` in one or two dimensions.
///
/// Values are stored row-major: index `j * nx + i` holds the node `(x_i, y_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dims: usize,
    n: [usize; 2],
    lower: [f64; 2],
    extent: [f64; 2],
}

impl PeriodicGrid {
    pub fn new_1d(n: usize, lower: f64, extent: f64) -> Result<Self> {
        check_axis(n, extent)?;
        Ok(Self {
            dims: 1,
            n: [n, 1],
            lower: [lower, 0.0],
            extent: [extent, 1.0],
        })
    }

    pub fn new_2d(n: [usize; 2], lower: [f64; 2], extent: [f64; 2]) -> Result<Self> {
        check_axis(n[0], extent[0])?;
        check_axis(n[1], extent[1])?;
        Ok(Self {
            dims: 2,
            n,
            lower,
            extent,
        })
    }

    /// Square box `[-half, half)²` with `n` points per side.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        Self::new_2d([n, n], [-half, -half], [2.0 * half, 2.0 * half])
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n[1]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.extent[axis] / self.n[axis] as f64
    }

    /// Largest spacing over the active axes.
    pub fn h_max(&self) -> f64 {
        (0..self.dims).map(|a| self.h(a)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims).map(|a| self.h(a)).product()
    }

    /// |Ω|.
    pub fn volume(&self) -> f64 {
        (0..self.dims).map(|a| self.extent[a]).product()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lower[0] + i as f64 * self.h(0)
    }

    pub fn y(&self, j: usize) -> f64 {
        if self.dims == 1 {
            0.0
        } else {
            self.lower[1] + j as f64 * self.h(1)
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    /// Node coordinates in storage order.
    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.n[1]).flat_map(move |j| (0..self.n[0]).map(move |i| [self.x(i), self.y(j)]))
    }

    /// Evaluates `f` at every node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field::from(self.points().map(f).collect::<Vec<_>>())
    }

    /// Riemann sum (spectrally accurate for smooth periodic integrands).
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_volume()
    }

    /// Distance from a point to the nearest box face.
    pub fn clearance(&self, p: [f64; 2]) -> f64 {
        (0..self.dims)
            .map(|a| (p[a] - self.lower[a]).min(self.lower[a] + self.extent[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_axis(n: usize, extent: f64) -> Result<()> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid points per axis must be a power of two >= 16, got {n}"
        )));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidArgument(format!("extent must be positive, got {extent}")));
    }
    Ok(())
}

/// Real grid function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self(vec![0.0; grid.len()])
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self(vec![c; grid.len()])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        crate::linalg::sup_norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// FFT plans and wavenumbers for a [`PeriodicGrid`].
///
/// Rows are transformed real-to-complex, keeping `nx/2 + 1` modes; the column
/// transforms then run on the transposed half spectrum (`i * ny + j`).
#[derive(Clone)]
pub struct Spectral {
    grid: PeriodicGrid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

fn wavenumber(m: usize, n: usize, extent: f64) -> f64 {
    let s = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * s / extent
}

impl Spectral {
    pub fn new(grid: PeriodicGrid) -> Self {
        let [nx, ny] = grid.n;
        let mut real = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::new();
        let half = nx / 2 + 1;
        let mut k2 = vec![0.0; half * ny];
        for i in 0..half {
            // the row transform keeps non-negative x-frequencies only
            let kx = 2.0 * PI * i as f64 / grid.extent[0];
            for j in 0..ny {
                let ky = if grid.dims == 1 {
                    0.0
                } else {
                    wavenumber(j, ny, grid.extent[1])
                };
                k2[i * ny + j] = kx * kx + ky * ky;
            }
        }
        Self {
            grid,
            r2c: real.plan_fft_forward(nx),
            c2r: real.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            k2,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// |k|² in spectral order; entry 0 is the mean mode.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let [nx, ny] = self.grid.n;
        let half = nx / 2 + 1;
        let mut rows = vec![Complex64::default(); half * ny];
        let mut input = f.to_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for (inp, out) in input.chunks_exact_mut(nx).zip(rows.chunks_exact_mut(half)) {
            self.r2c
                .process_with_scratch(inp, out, &mut scratch)
                .expect("buffer sizes match the plan");
        }
        if ny == 1 {
            return rows;
        }
        let mut cols = vec![Complex64::default(); half * ny];
        transpose::transpose(&rows, &mut cols, half, ny);
        self.fwd_y.process(&mut cols);
        cols
    }

    fn inverse(&self, mut spec: Vec<Complex64>) -> Field {
        let [nx, ny] = self.grid.n;
        let half = nx / 2 + 1;
        let mut rows = if ny == 1 {
            spec
        } else {
            self.inv_y.process(&mut spec);
            let mut rows = vec![Complex64::default(); half * ny];
            transpose::transpose(&spec, &mut rows, ny, half);
            rows
        };
        let mut out = vec![0.0; nx * ny];
        let mut scratch = self.c2r.make_scratch_vec();
        let scale = 1.0 / (nx * ny) as f64;
        for (inp, o) in rows.chunks_exact_mut(half).zip(out.chunks_exact_mut(nx)) {
            // real data has real zero and Nyquist row modes; drop roundoff there
            inp[0].im = 0.0;
            inp[half - 1].im = 0.0;
            self.c2r
                .process_with_scratch(inp, o, &mut scratch)
                .expect("buffer sizes match the plan");
        }
        out.iter_mut().for_each(|v| *v *= scale);
        Field(out)
    }

    /// Applies a real radial multiplier `m(|k|²)` to a real field.
    pub fn apply_multiplier(&self, f: &[f64], m: impl Fn(f64) -> f64) -> Field {
        let mut buf = self.forward(f);
        buf.iter_mut().zip(&self.k2).for_each(|(c, &k2)| *c *= m(k2));
        self.inverse(buf)
    }

    pub fn laplacian(&self, f: &[f64]) -> Field {
        self.apply_multiplier(f, |k2| -k2)
    }

    pub fn laplacian_pair(&self, a: &[f64], b: &[f64]) -> (Field, Field) {
        (self.laplacian(a), self.laplacian(b))
    }
}
