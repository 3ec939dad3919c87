//! TOML run configuration. Every section is optional; missing keys take the
//! lab defaults (780 nm, 2 mm waist, |A_w| = 7, 1–10 mV drive, N = 1..9).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use switchsense::experiment::{NoiseModel, SensorDriveModel, SignalChain, MEASURED_PRECISION};
use switchsense::network::{NetworkGeometry, SwitchMode};
use switchsense::wva::{PostSelection, ReadoutModel, WeakValueKind, WvaMethod};
use switchsense::{Grid, ProbeSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub probe: ProbeConfig,
    pub geometry: GeometryConfig,
    pub post_selection: PostSelectionConfig,
    pub readout: ReadoutConfig,
    pub grid: GridConfig,
    pub qcrb: QcrbConfig,
    pub experiment: ExperimentConfig,
    pub wva: WvaConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            probe: ProbeConfig::default(),
            geometry: GeometryConfig::default(),
            post_selection: PostSelectionConfig::default(),
            readout: ReadoutConfig::default(),
            grid: GridConfig::default(),
            qcrb: QcrbConfig::default(),
            experiment: ExperimentConfig::default(),
            wva: WvaConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Waist radius w0, m.
    pub w0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    /// Wave number, 1/m. Mutually exclusive with `wavelength`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            w0: 2e-3,
            wavelength: None,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Mean spacing z̄ between adjacent sensors, m.
    pub zbar: f64,
    pub z_in: f64,
    pub z_out: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            zbar: 0.2,
            z_in: 0.325,
            z_out: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostSelectionConfig {
    /// |A_w|; ignored when `epsilon` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub kind: WeakValueKind,
}

impl Default for PostSelectionConfig {
    fn default() -> Self {
        Self {
            weak_value: Some(7.0),
            epsilon: None,
            kind: WeakValueKind::Imaginary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub focal_length: f64,
    pub gain: f64,
    pub power: f64,
    pub position_slope: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        let m = ReadoutModel::default();
        Self {
            focal_length: m.focal_length,
            gain: m.gain,
            power: m.power,
            position_slope: m.position_slope,
        }
    }
}

/// Grid used by `oracle-verify` (dimensionless units) and `wva-sim`. Unset
/// values are sized from the beam.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_extent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QcrbConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub modes: Vec<SwitchMode>,
    pub trials: u32,
}

impl Default for QcrbConfig {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 50,
            modes: SwitchMode::ALL.to_vec(),
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// Forward-model SNR samples.
    Synthetic,
    /// The embedded table of measured minimum detectable tilts.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub n_sensors: Vec<usize>,
    /// Peak-to-peak drive voltages, V.
    pub voltages: Vec<f64>,
    pub replicates: usize,
    pub jitter: f64,
    /// Detector noise floor, V. Calibrated on the measured N = 1 row if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<f64>,
    pub free_intercept: bool,
    /// Samples per plot-ready curve.
    pub curve_points: usize,
    pub drive: SensorDriveModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            n_sensors: (1..=9).collect(),
            voltages: (1..=10).map(|v| v as f64 / 1000.0).collect(),
            replicates: 100,
            jitter: 0.05,
            noise_floor: None,
            free_intercept: false,
            curve_points: 161,
            drive: SensorDriveModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WvaConfig {
    pub n_sensors: usize,
    /// Mean kick θ̄ = kφ̄, 1/m. Defaults to a tenth of the small-signal guard.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_bar: Option<f64>,
    pub method: WvaMethod,
    /// Interferometer phase between the two polarization arms, rad.
    pub delta_theta: f64,
    pub compensate: bool,
}

impl Default for WvaConfig {
    fn default() -> Self {
        Self {
            n_sensors: 3,
            theta_bar: None,
            method: WvaMethod::ExactGrid,
            delta_theta: 0.0,
            compensate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Random network instances for the evolution check.
    pub evolution_instances: usize,
    /// Random instances per strategy for the Fisher-information check.
    pub fisher_instances: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            evolution_instances: 20,
            fisher_instances: 10,
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(field, format!("must be >= 0, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every section before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.probe_spec()?;
        self.post_selection()?;
        self.readout_model()?;
        let g = &self.geometry;
        positive("geometry.zbar", g.zbar)?;
        non_negative("geometry.z_in", g.z_in)?;
        non_negative("geometry.z_out", g.z_out)?;
        if let Some(n) = self.grid.num_points {
            if n < 4 || !n.is_power_of_two() {
                return Err(bad("grid.num_points", format!("must be a power of two >= 4, got {n}")));
            }
        }
        if let Some(l) = self.grid.half_extent {
            positive("grid.half_extent", l)?;
        }
        let q = &self.qcrb;
        if q.n_min == 0 || q.n_max < q.n_min {
            return Err(bad("qcrb.n_min", format!("need 1 <= n_min <= n_max, got {}..{}", q.n_min, q.n_max)));
        }
        if q.modes.is_empty() {
            return Err(bad("qcrb.modes", "at least one strategy is required"));
        }
        if q.trials == 0 {
            return Err(bad("qcrb.trials", "must be >= 1"));
        }
        let e = &self.experiment;
        let mut ns = e.n_sensors.clone();
        ns.sort_unstable();
        ns.dedup();
        if ns.len() < 3 || ns[0] == 0 {
            return Err(bad("experiment.n_sensors", "need at least three distinct N >= 1"));
        }
        if e.voltages.len() < 2 {
            return Err(bad("experiment.voltages", "need at least two drive voltages"));
        }
        for (i, v) in e.voltages.iter().enumerate() {
            positive(&format!("experiment.voltages[{i}]"), *v)?;
        }
        if e.replicates == 0 {
            return Err(bad("experiment.replicates", "must be >= 1"));
        }
        non_negative("experiment.jitter", e.jitter)?;
        if let Some(f) = e.noise_floor {
            positive("experiment.noise_floor", f)?;
        }
        if e.curve_points < 2 {
            return Err(bad("experiment.curve_points", "must be >= 2"));
        }
        positive("experiment.drive.displacement_per_volt", e.drive.displacement_per_volt)?;
        positive("experiment.drive.chip_separation", e.drive.chip_separation)?;
        positive("experiment.drive.beam_tilt_factor", e.drive.beam_tilt_factor)?;
        let w = &self.wva;
        if w.n_sensors == 0 {
            return Err(bad("wva.n_sensors", "must be >= 1"));
        }
        if let Some(t) = w.theta_bar {
            if !t.is_finite() {
                return Err(bad("wva.theta_bar", "must be finite"));
            }
        }
        if !w.delta_theta.is_finite() {
            return Err(bad("wva.delta_theta", "must be finite"));
        }
        if self.oracle.evolution_instances == 0 {
            return Err(bad("oracle.evolution_instances", "must be >= 1"));
        }
        if self.oracle.fisher_instances == 0 {
            return Err(bad("oracle.fisher_instances", "must be >= 1"));
        }
        Ok(())
    }

    pub fn probe_spec(&self) -> Result<ProbeSpec, CliError> {
        let p = &self.probe;
        positive("probe.w0", p.w0)?;
        let k = match (p.wavelength, p.k) {
            (Some(_), Some(_)) => return Err(bad("probe.k", "give either wavelength or k, not both")),
            (Some(l), None) => 2.0 * PI / positive("probe.wavelength", l)?,
            (None, Some(k)) => positive("probe.k", k)?,
            (None, None) => 2.0 * PI / 780e-9,
        };
        ProbeSpec::new(p.w0, k).map_err(|e| bad("probe", e))
    }

    pub fn post_selection(&self) -> Result<PostSelection, CliError> {
        let c = &self.post_selection;
        let ps = match (c.epsilon, c.weak_value) {
            (Some(eps), _) => PostSelection {
                epsilon: eps,
                kind: c.kind,
            },
            (None, Some(aw)) => PostSelection {
                epsilon: (1.0 / positive("post_selection.weak_value", aw)?).atan(),
                kind: c.kind,
            },
            (None, None) => return Err(bad("post_selection", "set weak_value or epsilon")),
        };
        ps.validate().map_err(|e| bad("post_selection.epsilon", e))?;
        Ok(ps)
    }

    pub fn readout_model(&self) -> Result<ReadoutModel, CliError> {
        let r = &self.readout;
        Ok(ReadoutModel {
            focal_length: positive("readout.focal_length", r.focal_length)?,
            gain: positive("readout.gain", r.gain)?,
            power: positive("readout.power", r.power)?,
            position_slope: positive("readout.position_slope", r.position_slope)?,
        })
    }

    pub fn geometry(&self, n: usize) -> Result<NetworkGeometry, CliError> {
        let g = &self.geometry;
        let k = self.probe_spec()?.k;
        NetworkGeometry::uniform(n, g.zbar, g.z_in, g.z_out, k).map_err(|e| bad("geometry", e))
    }

    pub fn signal_chain(&self) -> Result<SignalChain, CliError> {
        Ok(SignalChain {
            probe: self.probe_spec()?,
            post_selection: self.post_selection()?,
            readout: self.readout_model()?,
        })
    }

    /// Configured grid, or one sized for a beam of waist `w0` travelling `z_max`.
    pub fn grid_for(&self, w0: f64, k: f64, z_max: f64) -> Result<Grid, CliError> {
        let auto = Grid::for_beam(w0, k, z_max).map_err(|e| bad("grid", e))?;
        let n = self.grid.num_points.unwrap_or(auto.num_points());
        let l = self.grid.half_extent.unwrap_or(auto.half_extent());
        Grid::new(n, l).map_err(|e| bad("grid", e))
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        let floor = match self.experiment.noise_floor {
            Some(f) => f,
            None => {
                let g = self.geometry(1)?;
                let phi = MEASURED_PRECISION[0].min_tilt;
                switchsense::experiment::calibrate_noise_floor(phi, &g, &self.signal_chain()?)
                    .map_err(|e| bad("experiment.noise_floor", e))?
            }
        };
        Ok(NoiseModel {
            noise_floor: floor,
            jitter: self.experiment.jitter,
        })
    }
}
