//! Drive voltage → tilt conversion, SNR model, linear SNR fits and the
//! a/(N² + bN) scaling fit of the minimum detectable tilt.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{qcrb_for, GeneratorMoments, QcrbReport};
use crate::network::{NetworkGeometry, SwitchMode};
use crate::probe::ProbeSpec;
use crate::wva::{qpd_signal, PostSelection, ReadoutModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorDriveModel {
    /// PZT stroke per volt, m/V.
    pub displacement_per_volt: f64,
    /// Distance between the two opposed PZT chips, m.
    pub chip_separation: f64,
    /// Beam tilt per mirror tilt (reflection doubles the angle).
    pub beam_tilt_factor: f64,
}

impl Default for SensorDriveModel {
    fn default() -> Self {
        Self {
            displacement_per_volt: 22e-9,
            chip_separation: 20e-3,
            beam_tilt_factor: 2.0,
        }
    }
}

impl SensorDriveModel {
    /// Beam-tilt amplitude per volt peak-to-peak. Each chip swings by half the
    /// stroke and the two are driven in antiphase, so the mirror tilts by
    /// 2·(stroke/2)/separation.
    pub fn tilt_per_volt(&self) -> f64 {
        self.beam_tilt_factor * self.displacement_per_volt / self.chip_separation
    }
}

pub fn voltage_to_beam_tilt(v_pp: f64, model: &SensorDriveModel) -> Result<f64> {
    if !(v_pp >= 0.0) {
        return Err(Error::Config(format!("drive voltage must be >= 0, got {v_pp}")));
    }
    Ok(v_pp * model.tilt_per_volt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSample {
    pub n_sensors: usize,
    pub drive_voltage_pp: f64,
    pub snr: f64,
    pub replicate_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Constant detector noise floor, V.
    pub noise_floor: f64,
    /// σ of the multiplicative log-normal jitter on synthetic SNR replicates.
    pub jitter: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_floor > 0.0 && self.noise_floor.is_finite()) {
            return Err(Error::Config(format!(
                "noise.floor must be positive, got {}",
                self.noise_floor
            )));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::Config(format!("noise.jitter must be >= 0, got {}", self.jitter)));
        }
        Ok(())
    }
}

/// Probe, post-selection and quadcell settings that turn a tilt into volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalChain {
    pub probe: ProbeSpec,
    pub post_selection: PostSelection,
    pub readout: ReadoutModel,
}

/// SNR = V_Δ/V_noise for an average tilt φ̄ on an N-sensor network.
pub fn snr_model(
    phi_bar: f64,
    geom: &NetworkGeometry,
    noise: &NoiseModel,
    chain: &SignalChain,
) -> Result<f64> {
    noise.validate()?;
    let s = qpd_signal(phi_bar, geom, &chain.probe, &chain.post_selection, &chain.readout)?;
    Ok(s.voltage.abs() / noise.noise_floor)
}

/// Noise floor that puts SNR = 1 at tilt `phi_min` for the given geometry.
pub fn calibrate_noise_floor(phi_min: f64, geom: &NetworkGeometry, chain: &SignalChain) -> Result<f64> {
    let s = qpd_signal(phi_min, geom, &chain.probe, &chain.post_selection, &chain.readout)?;
    Ok(s.voltage.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrFit {
    pub slope: f64,
    pub intercept: f64,
    /// Drive voltage at SNR = 1.
    pub min_voltage: f64,
    /// Beam tilt at SNR = 1.
    pub min_tilt: f64,
}

/// Least-squares line through SNR vs drive voltage for a single N. With
/// `free_intercept = false` the line is forced through the origin.
pub fn fit_snr_vs_voltage(
    samples: &[SnrSample],
    drive: &SensorDriveModel,
    free_intercept: bool,
) -> Result<SnrFit> {
    let Some(first) = samples.first() else {
        return Err(Error::Fit("no samples".into()));
    };
    if samples.iter().any(|s| s.n_sensors != first.n_sensors) {
        return Err(Error::Fit("samples mix several sensor counts".into()));
    }
    let v0 = first.drive_voltage_pp;
    if samples.iter().all(|s| s.drive_voltage_pp == v0) {
        return Err(Error::Fit("need at least two distinct drive voltages".into()));
    }
    if samples.iter().all(|s| s.snr == 0.0) {
        return Err(Error::Fit("all SNR values are zero".into()));
    }
    let n = samples.len() as f64;
    let (slope, intercept) = if free_intercept {
        let mx = samples.iter().map(|s| s.drive_voltage_pp).sum::<f64>() / n;
        let my = samples.iter().map(|s| s.snr).sum::<f64>() / n;
        let sxy: f64 = samples
            .iter()
            .map(|s| (s.drive_voltage_pp - mx) * (s.snr - my))
            .sum();
        let sxx: f64 = samples.iter().map(|s| (s.drive_voltage_pp - mx).powi(2)).sum();
        let b = sxy / sxx;
        (b, my - b * mx)
    } else {
        let sxy: f64 = samples.iter().map(|s| s.drive_voltage_pp * s.snr).sum();
        let sxx: f64 = samples.iter().map(|s| s.drive_voltage_pp.powi(2)).sum();
        (sxy / sxx, 0.0)
    };
    if !(slope > 0.0) {
        return Err(Error::Fit(format!("non-positive SNR slope {slope}")));
    }
    let min_voltage = (1.0 - intercept) / slope;
    if !(min_voltage > 0.0) {
        return Err(Error::Fit(format!("SNR = 1 reached at non-positive voltage {min_voltage}")));
    }
    Ok(SnrFit {
        slope,
        intercept,
        min_voltage,
        min_tilt: voltage_to_beam_tilt(min_voltage, drive)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.a / (n * n + self.b * n)
    }

    /// Same law with the N² term replaced by 1, a/(1 + bN).
    pub fn heisenberg_comparison(&self, n: f64) -> f64 {
        self.a / (1.0 + self.b * n)
    }
}

/// Fit δφ = a/(N² + bN) by regressing 1/δφ on (N², N) without intercept;
/// R² is evaluated on δφ itself.
pub fn fit_scaling_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.iter().any(|&(_, y)| !(y > 0.0 && y.is_finite())) {
        return Err(Error::Fit("precision values must be positive".into()));
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Fit("need at least three distinct sensor counts".into()));
    }
    // normal equations for r = u·N² + v·N
    let (mut s44, mut s33, mut s22, mut s2r, mut s1r) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(n, y) in points {
        let r = 1.0 / y;
        s44 += n.powi(4);
        s33 += n.powi(3);
        s22 += n * n;
        s2r += n * n * r;
        s1r += n * r;
    }
    let det = s44 * s22 - s33 * s33;
    if det.abs() <= 1e-12 * s44 * s22 {
        return Err(Error::Fit("singular normal equations".into()));
    }
    let u = (s2r * s22 - s33 * s1r) / det;
    let v = (s44 * s1r - s33 * s2r) / det;
    if !(u > 0.0) {
        return Err(Error::Fit(format!("fitted N² coefficient {u} is not positive")));
    }
    let fit = ScalingFit {
        a: 1.0 / u,
        b: v / u,
        r_squared: 0.0,
    };
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|&(n, y)| (y - fit.predict(n)).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingFit { r_squared, ..fit })
}

/// Minimum detectable voltages and tilts measured for N = 1..9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPrecision {
    pub n_sensors: usize,
    pub min_voltage: f64,
    pub min_tilt: f64,
}

pub const MEASURED_PRECISION: [MeasuredPrecision; 9] = [
    MeasuredPrecision { n_sensors: 1, min_voltage: 382.6e-6, min_tilt: 841.8e-12 },
    MeasuredPrecision { n_sensors: 2, min_voltage: 175.3e-6, min_tilt: 385.7e-12 },
    MeasuredPrecision { n_sensors: 3, min_voltage: 98.6e-6, min_tilt: 217.0e-12 },
    MeasuredPrecision { n_sensors: 4, min_voltage: 65.5e-6, min_tilt: 144.1e-12 },
    MeasuredPrecision { n_sensors: 5, min_voltage: 46.8e-6, min_tilt: 103.1e-12 },
    MeasuredPrecision { n_sensors: 6, min_voltage: 35.5e-6, min_tilt: 77.7e-12 },
    MeasuredPrecision { n_sensors: 7, min_voltage: 27.6e-6, min_tilt: 60.6e-12 },
    MeasuredPrecision { n_sensors: 8, min_voltage: 22.2e-6, min_tilt: 48.9e-12 },
    MeasuredPrecision { n_sensors: 9, min_voltage: 18.1e-6, min_tilt: 39.8e-12 },
];

pub fn measured_points() -> Vec<(f64, f64)> {
    MEASURED_PRECISION
        .iter()
        .map(|m| (m.n_sensors as f64, m.min_tilt))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_sensors: Vec<usize>,
    /// Peak-to-peak drive voltages, V.
    pub voltages: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub zbar: f64,
    pub z_in: f64,
    pub z_out: f64,
    pub chain: SignalChain,
    pub drive: SensorDriveModel,
    pub noise: NoiseModel,
    pub free_intercept: bool,
    pub modes: Vec<SwitchMode>,
    pub trials: u32,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors.is_empty() || self.n_sensors.contains(&0) {
            return Err(Error::Config("sweep.n_sensors must be a non-empty list of N >= 1".into()));
        }
        if self.voltages.len() < 2 || self.voltages.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config(
                "sweep.voltages needs at least two positive voltages".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::Config("sweep.replicates must be >= 1".into()));
        }
        self.noise.validate()?;
        self.chain.probe.validate()?;
        self.chain.post_selection.validate()?;
        self.chain.readout.validate()?;
        self.geometry(1).map(|_| ())
    }

    pub fn geometry(&self, n: usize) -> Result<NetworkGeometry> {
        NetworkGeometry::uniform(n, self.zbar, self.z_in, self.z_out, self.chain.probe.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_sensors: usize,
    pub fit: SnrFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub samples: Vec<SnrSample>,
    pub per_n: Vec<SweepPoint>,
    pub scaling: ScalingFit,
    pub qcrb: Vec<QcrbReport>,
}

/// Multiplicative log-normal jitter, mean one. The stream depends only on the
/// (voltage, replicate) cell so every N sees the same draws.
fn jitter(seed: u64, cell: u64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    let z: f64 = StandardNormal.sample(&mut rng);
    (sigma * z - 0.5 * sigma * sigma).exp()
}

/// Synthetic SNR samples from the forward model, per-N linear fits, the
/// scaling fit, and QCRB values for every requested strategy.
pub fn end_to_end_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let cells: Vec<(usize, usize, usize)> = cfg
        .n_sensors
        .iter()
        .flat_map(|&n| {
            (0..cfg.voltages.len())
                .flat_map(move |vi| (0..cfg.replicates).map(move |r| (n, vi, r)))
        })
        .collect();
    let samples = cells
        .par_iter()
        .map(|&(n, vi, r)| {
            let geom = cfg.geometry(n)?;
            let v = cfg.voltages[vi];
            let phi = voltage_to_beam_tilt(v, &cfg.drive)?;
            let snr = snr_model(phi, &geom, &cfg.noise, &cfg.chain)?;
            let cell = (vi * cfg.replicates + r) as u64;
            Ok(SnrSample {
                n_sensors: n,
                drive_voltage_pp: v,
                snr: snr * jitter(cfg.seed, cell, cfg.noise.jitter),
                replicate_index: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_n = cfg
        .n_sensors
        .iter()
        .map(|&n| {
            let subset: Vec<SnrSample> =
                samples.iter().filter(|s| s.n_sensors == n).copied().collect();
            Ok(SweepPoint {
                n_sensors: n,
                fit: fit_snr_vs_voltage(&subset, &cfg.drive, cfg.free_intercept)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = per_n
        .iter()
        .map(|p| (p.n_sensors as f64, p.fit.min_tilt))
        .collect();
    let scaling = fit_scaling_law(&points)?;

    let mut qcrb = Vec::new();
    for &n in &cfg.n_sensors {
        let gm = GeneratorMoments::gaussian(&cfg.chain.probe, &cfg.geometry(n)?);
        for &mode in &cfg.modes {
            qcrb.push(qcrb_for(mode, &gm, cfg.trials)?);
        }
    }
    Ok(SweepReport {
        samples,
        per_n,
        scaling,
        qcrb,
    })
}
