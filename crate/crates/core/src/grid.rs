//! Uniform 1-D transverse grid and wavefunctions living on it.
//!
//! Position samples sit at `x_j = -L + j*dx` with `dx = 2L/n`. Momentum
//! samples use FFT ordering `p_m = m*dp` for `m < n/2` and `(m - n)*dp`
//! otherwise, `dp = 2*pi/(n*dx)`. The continuum transform
//! `psi(p) = (2 pi)^-1/2 * int psi(x) exp(-i p x) dx` is reproduced exactly
//! on these samples up to the usual band limit.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Grid {
    num_points: usize,
    half_extent: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("num_points", &self.num_points)
            .field("half_extent", &self.half_extent)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.num_points == other.num_points && self.half_extent == other.half_extent
    }
}

impl Grid {
    pub fn new(num_points: usize, half_extent: f64) -> Result<Self> {
        if num_points < 4 || !num_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.num_points must be a power of two >= 4, got {num_points}"
            )));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::Config(format!(
                "grid.half_extent must be positive, got {half_extent}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            num_points,
            half_extent,
            forward: planner.plan_fft_forward(num_points),
            inverse: planner.plan_fft_inverse(num_points),
        })
    }

    /// Default grid for a Gaussian of waist `w0` and wave number `k` that
    /// will be propagated over at most `z_max`: 2^14 points spanning
    /// `8 * max(w0, w(z_max))` on each side.
    pub fn for_beam(w0: f64, k: f64, z_max: f64) -> Result<Self> {
        let w = diffracted_radius(w0, k, z_max);
        Self::new(1 << 14, 8.0 * w0.max(w))
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_extent / self.num_points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / (self.num_points as f64 * self.dx())
    }

    /// Largest representable |p| (the Nyquist momentum).
    pub fn p_max(&self) -> f64 {
        PI / self.dx()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.dx()
    }

    pub fn p(&self, m: usize) -> f64 {
        let n = self.num_points;
        let signed = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        signed * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.x(j)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.num_points).map(|m| self.p(m)).collect()
    }

    /// Multiply by `phase(p)` in momentum space and return to position space.
    pub(crate) fn momentum_multiply(&self, amps: &mut [C64], phase: impl Fn(f64) -> C64) {
        self.forward.process(amps);
        let scale = 1.0 / self.num_points as f64;
        for (m, a) in amps.iter_mut().enumerate() {
            *a *= phase(self.p(m)) * scale;
        }
        self.inverse.process(amps);
    }

    fn to_momentum(&self, amps: &[C64]) -> Vec<C64> {
        let mut buf = amps.to_vec();
        self.forward.process(&mut buf);
        let pre = self.dx() / (2.0 * PI).sqrt();
        let l = self.half_extent;
        for (m, a) in buf.iter_mut().enumerate() {
            *a *= C64::from_polar(pre, self.p(m) * l);
        }
        buf
    }

    fn to_position(&self, amps: &[C64]) -> Vec<C64> {
        let l = self.half_extent;
        let mut buf: Vec<C64> = amps
            .iter()
            .enumerate()
            .map(|(m, a)| a * C64::from_polar(1.0, -self.p(m) * l))
            .collect();
        self.inverse.process(&mut buf);
        let pre = self.dp() / (2.0 * PI).sqrt();
        for a in buf.iter_mut() {
            *a *= pre;
        }
        buf
    }
}

/// Gaussian-beam radius after free propagation over `z`.
pub fn diffracted_radius(w0: f64, k: f64, z: f64) -> f64 {
    w0 * (1.0 + (2.0 * z / (k * w0 * w0)).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amps: Vec<C64>,
    repr: Representation,
}

impl WaveFunction {
    pub fn from_position(grid: Grid, amps: Vec<C64>) -> Result<Self> {
        Self::with_repr(grid, amps, Representation::Position)
    }

    pub fn from_momentum(grid: Grid, amps: Vec<C64>) -> Result<Self> {
        Self::with_repr(grid, amps, Representation::Momentum)
    }

    fn with_repr(grid: Grid, amps: Vec<C64>, repr: Representation) -> Result<Self> {
        if amps.len() != grid.num_points() {
            return Err(Error::LengthMismatch {
                expected: grid.num_points(),
                got: amps.len(),
            });
        }
        Ok(Self { grid, amps, repr })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let amps = (0..grid.num_points()).map(|j| f(grid.x(j))).collect();
        Self {
            grid,
            amps,
            repr: Representation::Position,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    /// Raw amplitudes in the current representation.
    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_position(self) -> Self {
        match self.repr {
            Representation::Position => self,
            Representation::Momentum => {
                let amps = self.grid.to_position(&self.amps);
                Self {
                    grid: self.grid,
                    amps,
                    repr: Representation::Position,
                }
            }
        }
    }

    pub fn into_momentum(self) -> Self {
        match self.repr {
            Representation::Momentum => self,
            Representation::Position => {
                let amps = self.grid.to_momentum(&self.amps);
                Self {
                    grid: self.grid,
                    amps,
                    repr: Representation::Momentum,
                }
            }
        }
    }

    /// Position-space amplitudes, transforming if needed.
    pub fn position_amplitudes(&self) -> Vec<C64> {
        match self.repr {
            Representation::Position => self.amps.clone(),
            Representation::Momentum => self.grid.to_position(&self.amps),
        }
    }

    /// Momentum-space amplitudes, transforming if needed.
    pub fn momentum_amplitudes(&self) -> Vec<C64> {
        match self.repr {
            Representation::Momentum => self.amps.clone(),
            Representation::Position => self.grid.to_momentum(&self.amps),
        }
    }

    fn measure(&self) -> f64 {
        match self.repr {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    /// Σ|ψ|² times the cell size of the current representation.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized { norm: n });
        }
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub(crate) fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(())
    }

    /// ⟨self|other⟩ by rectangle-rule quadrature in position space.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let a = self.position_amplitudes();
        let b = other.position_amplitudes();
        Ok(inner_raw(&a, &b) * self.grid.dx())
    }

    /// Largest amplitude difference after removing the best global phase.
    pub fn max_abs_diff_up_to_phase(&self, other: &WaveFunction) -> Result<f64> {
        let ov = self.inner(other)?;
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
        let a = self.position_amplitudes();
        let b = other.position_amplitudes();
        Ok(a.iter()
            .zip(&b)
            .map(|(x, y)| (x * phase - y).norm())
            .fold(0.0, f64::max))
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
    }

    pub(crate) fn map_position(self, f: impl Fn(usize, f64, C64) -> C64) -> Self {
        let wf = self.into_position();
        let grid = wf.grid;
        let amps = wf
            .amps
            .into_iter()
            .enumerate()
            .map(|(j, a)| f(j, grid.x(j), a))
            .collect();
        Self {
            grid,
            amps,
            repr: Representation::Position,
        }
    }

    pub(crate) fn map_momentum_phase(self, phase: impl Fn(f64) -> C64) -> Self {
        let mut wf = self.into_position();
        wf.grid.momentum_multiply(&mut wf.amps, phase);
        wf
    }

    pub(crate) fn position_amps_mut(&mut self) -> &mut Vec<C64> {
        debug_assert_eq!(self.repr, Representation::Position);
        &mut self.amps
    }
}

pub(crate) fn inner_raw(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
