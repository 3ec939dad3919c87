//! Weak-value-amplified readout: polarization ancilla, post-selection,
//! final probe, Fourier-lens momentum readout and the quadcell signal.
//!
//! The H polarization travels the loop forward, V travels it in reverse with
//! a parity flip. The observable distinguishing them is A = |H⟩⟨H| − |V⟩⟨V|.

pub mod waveplate;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::network::{
    apply_propagation, g_params, traverse_sequence, Direction, KickVector, NetworkGeometry,
    TraversalOptions,
};
use crate::probe::{apply_p, moments, ProbeSpec};
use waveplate::Jones;

pub use waveplate::{waveplate_compensation, WaveplateSettings};

/// Largest tolerated first-order expansion parameter.
pub const SMALL_SIGNAL_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    pub h: C64,
    pub v: C64,
}

impl PolarizationState {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let n = h.norm_sqr() + v.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("polarization state has norm² {n}")));
        }
        Ok(Self { h, v })
    }

    pub fn horizontal() -> Self {
        Self {
            h: C64::new(1.0, 0.0),
            v: C64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Self {
            h: C64::new(0.0, 0.0),
            v: C64::new(1.0, 0.0),
        }
    }

    /// 45° linear, (|H⟩ + |V⟩)/√2.
    pub fn diagonal() -> Self {
        Self {
            h: C64::new(FRAC_1_SQRT_2, 0.0),
            v: C64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PolarizationState) -> C64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakValueKind {
    /// Phase-type post-selection, A_w = i·cot ε.
    Imaginary,
    /// Linear-polarizer rotation, A_w = cot ε.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostSelection {
    pub epsilon: f64,
    pub kind: WeakValueKind,
}

impl PostSelection {
    pub fn imaginary(epsilon: f64) -> Self {
        Self {
            epsilon,
            kind: WeakValueKind::Imaginary,
        }
    }

    pub fn real(epsilon: f64) -> Self {
        Self {
            epsilon,
            kind: WeakValueKind::Real,
        }
    }

    /// Imaginary post-selection with |A_w| = `magnitude`.
    pub fn from_weak_value_magnitude(magnitude: f64) -> Result<Self> {
        if !(magnitude > 0.0 && magnitude.is_finite()) {
            return Err(Error::Config(format!("|A_w| must be positive, got {magnitude}")));
        }
        Ok(Self::imaginary((1.0 / magnitude).atan()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon == 0.0 || !self.epsilon.is_finite() {
            return Err(Error::SingularPostSelection);
        }
        if self.epsilon.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Config(format!(
                "post-selection angle must satisfy 0 < |ε| < π/2, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// |f⟩: (e^{iε}|H⟩ − e^{−iε}|V⟩)/√2 for the imaginary kind,
    /// cos(π/4 − ε)|H⟩ − sin(π/4 − ε)|V⟩ for the real kind.
    pub fn state(&self) -> PolarizationState {
        let e = self.epsilon;
        match self.kind {
            WeakValueKind::Imaginary => PolarizationState {
                h: C64::from_polar(FRAC_1_SQRT_2, e),
                v: -C64::from_polar(FRAC_1_SQRT_2, -e),
            },
            WeakValueKind::Real => {
                let chi = std::f64::consts::FRAC_PI_4 - e;
                PolarizationState {
                    h: C64::new(chi.cos(), 0.0),
                    v: C64::new(-chi.sin(), 0.0),
                }
            }
        }
    }
}

/// A_w = ⟨f|A|i⟩/⟨f|i⟩ for the 45° pre-selection.
pub fn weak_value(ps: &PostSelection) -> Result<C64> {
    ps.validate()?;
    let f = ps.state();
    let i = PolarizationState::diagonal();
    let overlap = f.inner(&i);
    if overlap.norm() < 1e-15 {
        return Err(Error::SingularPostSelection);
    }
    let a_i = PolarizationState { h: i.h, v: -i.v };
    Ok(f.inner(&a_i) / overlap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub focal_length: f64,
    /// Responsivity × transresistance, V/W.
    pub gain: f64,
    /// Total power on the quadcell, W.
    pub power: f64,
    /// Quadcell position = slope·(I_Δ/I₀)·beam radius.
    pub position_slope: f64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self {
            focal_length: 0.1,
            gain: 0.5 * 20e3,
            power: 0.2e-3,
            position_slope: 0.65,
        }
    }
}

impl ReadoutModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("readout.focal_length", self.focal_length),
            ("readout.gain", self.gain),
            ("readout.power", self.power),
            ("readout.position_slope", self.position_slope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WvaMethod {
    FirstOrder,
    ExactGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WvaOutcome {
    pub probe: WaveFunction,
    pub success_probability: f64,
}

/// Coefficient D/θ̄ of the amplified displacement:
/// (z̄/2k)N² + (z̄/2k + z_in/k)N.
pub fn displacement_coefficient(geom: &NetworkGeometry) -> f64 {
    let n = geom.n_sensors() as f64;
    let (zbar, k) = (geom.zbar(), geom.k);
    zbar / (2.0 * k) * n * n + (zbar / (2.0 * k) + geom.z_in / k) * n
}

/// Small-ε closed form of the post-selected mean momentum,
/// (2/ε)⟨ΔP²⟩·[(z̄/2k)N² + (z̄/2k + z_in/k)N]·θ̄.
pub fn predicted_mean_momentum(
    geom: &NetworkGeometry,
    var_p: f64,
    ps: &PostSelection,
    theta_bar: f64,
) -> f64 {
    2.0 / ps.epsilon * var_p * displacement_coefficient(geom) * theta_bar
}

fn check_small_signal(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    aw: C64,
) -> Result<()> {
    let m = moments(psi)?;
    let theta_bar = kicks.theta_bar();
    let n = geom.n_sensors() as f64;
    let amp = aw.norm() * geom.zbar() / (2.0 * geom.k) * n * n * theta_bar.abs() * m.var_p.sqrt();
    let kick = n * theta_bar.abs() * m.var_x.sqrt();
    if amp >= SMALL_SIGNAL_GUARD || kick >= SMALL_SIGNAL_GUARD {
        return Err(Error::SmallSignalViolated(format!(
            "amplified displacement {amp:.3e} and kick {kick:.3e} must both stay below {SMALL_SIGNAL_GUARD}"
        )));
    }
    Ok(())
}

pub fn wva_final_probe(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    ps: &PostSelection,
    method: WvaMethod,
) -> Result<WvaOutcome> {
    match method {
        WvaMethod::FirstOrder => first_order(psi, geom, kicks, ps),
        WvaMethod::ExactGrid => exact_grid(psi, geom, kicks, ps, 0.0, None),
    }
}

/// Exact evolution with an extra interferometer phase R_z(δθ/2) on the
/// polarization and an optional compensating plate stack before the
/// post-selection.
pub fn wva_final_probe_with_phase(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    ps: &PostSelection,
    delta_theta: f64,
    compensation: Option<&WaveplateSettings>,
) -> Result<WvaOutcome> {
    let jones = compensation.map(|c| c.jones());
    exact_grid(psi, geom, kicks, ps, delta_theta, jones.as_ref())
}

fn first_order(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    ps: &PostSelection,
) -> Result<WvaOutcome> {
    let aw = weak_value(ps)?;
    check_small_signal(psi, geom, kicks, aw)?;
    let comp = g_params(geom, kicks)?;
    let k = geom.k;
    let d = displacement_coefficient(geom) * kicks.theta_bar();
    let shift = (comp.g1 - comp.g2) / (2.0 * k);
    let kick = comp.kick_total();
    let i = C64::new(0.0, 1.0);
    let c_p = -i * aw * d - i * shift;
    let c_x = -i * aw * kick;

    let base = psi.position_amplitudes();
    let p_psi = apply_p(psi);
    let grid = psi.grid().clone();
    let amps: Vec<C64> = base
        .iter()
        .zip(p_psi.amplitudes())
        .enumerate()
        .map(|(j, (a, pa))| a + c_p * pa + c_x * grid.x(j) * a)
        .collect();
    let mut out = WaveFunction::from_position(grid, amps)?;
    let overlap = ps.state().inner(&PolarizationState::diagonal()).norm_sqr();
    let success = overlap * out.norm_sqr();
    out.normalize()?;
    let probe = apply_propagation(&out, geom.z_tot(), k)?;
    Ok(WvaOutcome {
        probe,
        success_probability: success,
    })
}

fn exact_grid(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    ps: &PostSelection,
    delta_theta: f64,
    compensation: Option<&Jones>,
) -> Result<WvaOutcome> {
    ps.validate()?;
    let fwd = TraversalOptions {
        parity_conjugation: false,
        include_leads: true,
    };
    let rev = TraversalOptions {
        parity_conjugation: true,
        include_leads: true,
    };
    let plus = traverse_sequence(psi, geom, kicks, Direction::Forward, fwd)?;
    let minus = traverse_sequence(psi, geom, kicks, Direction::Reverse, rev)?;

    let pre = PolarizationState::diagonal();
    let mut pol = waveplate::r_z(delta_theta / 2.0);
    if let Some(c) = compensation {
        pol = waveplate::mul(c, &pol);
    }
    // ⟨f|J applied to |H⟩ and |V⟩
    let f = ps.state();
    let fj = waveplate::apply(&waveplate::adjoint(&pol), [f.h, f.v]);
    let c_h = fj[0].conj() * pre.h;
    let c_v = fj[1].conj() * pre.v;

    let a = plus.position_amplitudes();
    let b = minus.position_amplitudes();
    let amps = a.iter().zip(&b).map(|(x, y)| c_h * x + c_v * y).collect();
    let mut out = WaveFunction::from_position(psi.grid().clone(), amps)?;
    let success = out.norm_sqr();
    if !(success >= 1e-12) {
        return Err(Error::DegeneratePostSelection(success));
    }
    out.normalize()?;
    Ok(WvaOutcome {
        probe: out,
        success_probability: success,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumReadout {
    /// M̄_f = (f/k)⟨P⟩_f.
    pub mean: f64,
    /// ΔM_f = (f/k)ΔP_f.
    pub spread: f64,
}

pub fn momentum_readout(psi_f: &WaveFunction, rm: &ReadoutModel, k: f64) -> Result<MomentumReadout> {
    let m = moments(psi_f)?;
    let s = rm.focal_length / k;
    Ok(MomentumReadout {
        mean: s * m.mean_p,
        spread: s * m.var_p.sqrt(),
    })
}

/// Bracket N² + (1 + 2 z_in/z̄)N shared by the detection-limit formulas.
pub fn scaling_bracket(geom: &NetworkGeometry) -> f64 {
    let n = geom.n_sensors() as f64;
    n * n + (1.0 + 2.0 * geom.z_in / geom.zbar()) * n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionLimit {
    pub theta_bar: f64,
    pub phi_bar: f64,
}

/// Single-shot θ̄ at which the readout mean equals its spread,
/// (kε/(z̄ΔP))/(N² + (1 + 2z_in/z̄)N).
pub fn min_detectable_tilt(
    geom: &NetworkGeometry,
    probe: &ProbeSpec,
    ps: &PostSelection,
) -> Result<DetectionLimit> {
    geom.validate()?;
    probe.validate()?;
    ps.validate()?;
    check_same_k(geom, probe)?;
    let k = geom.k;
    let theta = k * ps.epsilon.abs() / (geom.zbar() * probe.delta_p()) / scaling_bracket(geom);
    Ok(DetectionLimit {
        theta_bar: theta,
        phi_bar: theta / k,
    })
}

fn check_same_k(geom: &NetworkGeometry, probe: &ProbeSpec) -> Result<()> {
    if (geom.k - probe.k).abs() > 1e-12 * geom.k {
        return Err(Error::Config(format!(
            "probe wave number {} differs from geometry wave number {}",
            probe.k, geom.k
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpdSignal {
    /// Differential intensity I_L − I_R, W.
    pub current_diff: f64,
    /// γ·I_Δ, V.
    pub voltage: f64,
}

/// I_Δ = z̄ I₀/(2·slope·ε·w0)·[N² + (1 + 2z_in/z̄)N]·φ̄ and V_Δ = γ I_Δ.
pub fn qpd_signal(
    phi_bar: f64,
    geom: &NetworkGeometry,
    probe: &ProbeSpec,
    ps: &PostSelection,
    rm: &ReadoutModel,
) -> Result<QpdSignal> {
    geom.validate()?;
    probe.validate()?;
    ps.validate()?;
    rm.validate()?;
    let i = geom.zbar() * rm.power / (2.0 * rm.position_slope * ps.epsilon * probe.w0)
        * scaling_bracket(geom)
        * phi_bar;
    Ok(QpdSignal {
        current_diff: i,
        voltage: rm.gain * i,
    })
}
