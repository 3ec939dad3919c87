//! Gaussian probe preparation and quadrature moments.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};

const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    /// Waist radius w0 (field falls to 1/e at |x - center_x| = w0).
    pub w0: f64,
    /// Wave number k = 2π/λ.
    pub k: f64,
    pub center_x: f64,
    pub center_p: f64,
}

impl ProbeSpec {
    pub fn new(w0: f64, k: f64) -> Result<Self> {
        let spec = Self {
            w0,
            k,
            center_x: 0.0,
            center_p: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_wavelength(w0: f64, wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Config(format!("wavelength must be positive, got {wavelength}")));
        }
        Self::new(w0, 2.0 * PI / wavelength)
    }

    pub fn with_center(mut self, x: f64, p: f64) -> Self {
        self.center_x = x;
        self.center_p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(Error::Config(format!("probe waist w0 must be positive, got {}", self.w0)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("wave number k must be positive, got {}", self.k)));
        }
        Ok(())
    }

    pub fn delta_x(&self) -> f64 {
        self.w0 / 2.0
    }

    pub fn delta_p(&self) -> f64 {
        1.0 / self.w0
    }

    /// Analytic moments of the Gaussian this spec describes.
    pub fn analytic_moments(&self) -> Moments {
        Moments {
            mean_x: self.center_x,
            mean_p: self.center_p,
            var_x: self.delta_x().powi(2),
            var_p: self.delta_p().powi(2),
            cov_xp: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

impl Moments {
    /// var_x·var_p − cov², bounded below by 1/4 for any state.
    pub fn uncertainty_product(&self) -> f64 {
        self.var_x * self.var_p - self.cov_xp * self.cov_xp
    }
}

/// ψ(x) ∝ exp(−(x−x0)²/w0²)·exp(i p0 x), normalized on the grid.
pub fn make_gaussian(spec: &ProbeSpec, grid: &Grid) -> Result<WaveFunction> {
    spec.validate()?;
    if grid.half_extent() < 4.0 * spec.w0 {
        return Err(Error::Config(format!(
            "grid half_extent {:e} m is smaller than 4 x waist w0 = {:e} m",
            grid.half_extent(),
            4.0 * spec.w0
        )));
    }
    if spec.center_p.abs() + 4.0 / spec.w0 > grid.p_max() {
        return Err(Error::Config(format!(
            "momentum content |p0| + 4/w0 = {:e} exceeds grid Nyquist momentum {:e}",
            spec.center_p.abs() + 4.0 / spec.w0,
            grid.p_max()
        )));
    }
    let (x0, p0, w0) = (spec.center_x, spec.center_p, spec.w0);
    WaveFunction::from_fn(grid.clone(), |x| {
        C64::from_polar((-(x - x0).powi(2) / (w0 * w0)).exp(), p0 * x)
    })
    .normalized()
}

/// Apply P̂ spectrally; the result is in position representation.
pub(crate) fn apply_p(psi: &WaveFunction) -> WaveFunction {
    psi.clone().map_momentum_phase(|p| C64::new(p, 0.0))
}

pub fn moments(psi: &WaveFunction) -> Result<Moments> {
    psi.check_normalized(NORM_TOL)?;
    let g = psi.grid();
    let (dx, dp) = (g.dx(), g.dp());

    let pos = psi.position_amplitudes();
    let dens: Vec<f64> = pos.iter().map(|a| a.norm_sqr() * dx).collect();
    let mean_x: f64 = dens.iter().enumerate().map(|(j, d)| g.x(j) * d).sum();
    let var_x: f64 = dens
        .iter()
        .enumerate()
        .map(|(j, d)| (g.x(j) - mean_x).powi(2) * d)
        .sum();

    let mom = psi.momentum_amplitudes();
    let pdens: Vec<f64> = mom.iter().map(|a| a.norm_sqr() * dp).collect();
    let mean_p: f64 = pdens.iter().enumerate().map(|(m, d)| g.p(m) * d).sum();
    let var_p: f64 = pdens
        .iter()
        .enumerate()
        .map(|(m, d)| (g.p(m) - mean_p).powi(2) * d)
        .sum();

    // Re⟨(X − ⟨X⟩) P⟩ equals the symmetrised covariance.
    let ppsi = apply_p(psi);
    let xp: C64 = pos
        .iter()
        .zip(ppsi.amplitudes())
        .enumerate()
        .map(|(j, (a, b))| a.conj() * b * (g.x(j) - mean_x))
        .sum::<C64>()
        * dx;

    Ok(Moments {
        mean_x,
        mean_p,
        var_x,
        var_p,
        cov_xp: xp.re,
    })
}

/// |⟨a|b⟩|², symmetric and insensitive to global phase.
pub fn fidelity(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    a.check_normalized(NORM_TOL)?;
    b.check_normalized(NORM_TOL)?;
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
