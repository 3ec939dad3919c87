//! Quantum Fisher information for (g1, g2) and the Cramér-Rao bound on θ̄.
//!
//! Closed forms are written in the reduced variables
//! `a = ⟨ΔX²⟩/L²`, `b = ⟨ΔP²⟩/k²`, `e = Cov(X,P)/(kL)`, `m = ⟨P⟩/k`,
//! `c_j = g_j/(kL)` with `L = (N+1) z̄`.

mod numerical;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::network::{CompositeEvolution, NetworkGeometry, SwitchMode};
use crate::probe::{Moments, ProbeSpec};

pub use numerical::{qfim_central_difference, qfim_numerical, qfim_of_state, StepRule};

/// Output of an order switch: one probe state per traversal order plus the
/// ancilla bookkeeping. The joint state is
/// `√p₊ ψ₊|0⟩ + e^{i arg c} √p₋ ψ₋|1⟩` when `|c| = √(p₊p₋)`, and the
/// block-diagonal mixture when `c = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub branch_plus: WaveFunction,
    pub branch_minus: WaveFunction,
    /// Off-diagonal ancilla element.
    pub coherence: C64,
    pub weights: (f64, f64),
    pub mode: SwitchMode,
}

impl JointState {
    pub fn is_pure(&self) -> bool {
        let (p, q) = self.weights;
        p == 0.0 || q == 0.0 || (self.coherence.norm() - (p * q).sqrt()).abs() < 1e-12
    }

    /// Probe state obtained by projecting the ancilla onto `a0|0⟩ + a1|1⟩`
    /// (pure joint states only), unnormalized.
    pub fn project_ancilla(&self, a0: C64, a1: C64) -> Result<WaveFunction> {
        if !self.is_pure() {
            return Err(Error::Unsupported("ancilla projection of a mixed joint state".into()));
        }
        let (amp_p, amp_m) = self.branch_amplitudes();
        let plus = self.branch_plus.position_amplitudes();
        let minus = self.branch_minus.position_amplitudes();
        let c0 = a0.conj() * amp_p;
        let c1 = a1.conj() * amp_m;
        let amps = plus.iter().zip(&minus).map(|(x, y)| c0 * x + c1 * y).collect();
        WaveFunction::from_position(self.branch_plus.grid().clone(), amps)
    }

    pub(crate) fn branch_amplitudes(&self) -> (C64, C64) {
        let (p, q) = self.weights;
        let phase = if self.coherence.norm() > 0.0 {
            self.coherence / self.coherence.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        (C64::new(p.sqrt(), 0.0), phase * q.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qfim2 {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
}

impl Qfim2 {
    pub fn new(q11: f64, q12: f64, q22: f64) -> Self {
        Self { q11, q12, q22 }
    }

    pub fn trace(&self) -> f64 {
        self.q11 + self.q22
    }

    pub fn det(&self) -> f64 {
        self.q11 * self.q22 - self.q12 * self.q12
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.q11 + self.q22);
        let r = (0.25 * (self.q11 - self.q22).powi(2) + self.q12 * self.q12).sqrt();
        (mean - r, mean + r)
    }

    pub fn is_psd(&self) -> bool {
        self.eigenvalues().0 >= -1e-10 * self.trace().abs()
    }

    pub fn sub(&self, o: &Qfim2) -> Qfim2 {
        Qfim2::new(self.q11 - o.q11, self.q12 - o.q12, self.q22 - o.q22)
    }

    pub fn scale(&self, s: f64) -> Qfim2 {
        Qfim2::new(self.q11 * s, self.q12 * s, self.q22 * s)
    }

    pub fn add(&self, o: &Qfim2) -> Qfim2 {
        Qfim2::new(self.q11 + o.q11, self.q12 + o.q12, self.q22 + o.q22)
    }

    pub fn frobenius(&self) -> f64 {
        (self.q11.powi(2) + 2.0 * self.q12.powi(2) + self.q22.powi(2)).sqrt()
    }

    /// ‖self − reference‖_F / ‖reference‖_F.
    pub fn rel_frobenius_error(&self, reference: &Qfim2) -> f64 {
        self.sub(reference).frobenius() / reference.frobenius()
    }

    /// Quadratic form vᵀQv.
    pub fn quad(&self, v: (f64, f64)) -> f64 {
        self.q11 * v.0 * v.0 + 2.0 * self.q12 * v.0 * v.1 + self.q22 * v.1 * v.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcrbReport {
    pub strategy: SwitchMode,
    pub n_sensors: usize,
    /// Bound on the variance of θ̄ per trial.
    pub bound: f64,
    pub trials: u32,
    /// bound·N⁴.
    pub scaled_bound: f64,
    /// δθ̄ = √(ν·bound).
    pub precision: f64,
}

impl QcrbReport {
    fn new(strategy: SwitchMode, n: usize, bound: f64, trials: u32) -> Self {
        Self {
            strategy,
            n_sensors: n,
            bound,
            trials,
            scaled_bound: bound * (n as f64).powi(4),
            precision: (trials as f64 * bound).sqrt(),
        }
    }
}

/// Initial-probe moments plus the operating point needed by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMoments {
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    pub mean_p: f64,
    pub g1: f64,
    pub g2: f64,
    pub k: f64,
    pub zbar: f64,
    pub n: usize,
}

impl GeneratorMoments {
    pub fn from_moments(m: &Moments, k: f64, zbar: f64, n: usize) -> Self {
        Self {
            var_x: m.var_x,
            var_p: m.var_p,
            cov_xp: m.cov_xp,
            mean_p: m.mean_p,
            g1: 0.0,
            g2: 0.0,
            k,
            zbar,
            n,
        }
    }

    /// Analytic Gaussian moments on a geometry, evaluated at g = 0.
    pub fn gaussian(spec: &ProbeSpec, geom: &NetworkGeometry) -> Self {
        Self::from_moments(&spec.analytic_moments(), geom.k, geom.zbar(), geom.n_sensors())
    }

    pub fn at(mut self, comp: &CompositeEvolution) -> Self {
        self.g1 = comp.g1;
        self.g2 = comp.g2;
        self
    }

    pub fn with_g(mut self, g1: f64, g2: f64) -> Self {
        self.g1 = g1;
        self.g2 = g2;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("number of sensors must be >= 1".into()));
        }
        if !(self.var_x > 0.0 && self.var_p > 0.0 && self.k > 0.0 && self.zbar > 0.0) {
            return Err(Error::Config(
                "variances, wave number and mean distance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn loop_length(&self) -> f64 {
        (self.n as f64 + 1.0) * self.zbar
    }

    fn reduced(&self) -> Reduced {
        let l = self.loop_length();
        Reduced {
            a: self.var_x / (l * l),
            b: self.var_p / (self.k * self.k),
            e: self.cov_xp / (self.k * l),
            m: self.mean_p / self.k,
            c1: self.g1 / (self.k * l),
            c2: self.g2 / (self.k * l),
        }
    }

    /// Var of ℋ₀ = P/k + 2X/L, the generator of g1+g2 seen by the probe alone.
    pub fn var_h0(&self) -> f64 {
        let r = self.reduced();
        r.b + 4.0 * r.a + 4.0 * r.e
    }

    /// 1/(N(N+1) z̄), the common entry of the Jacobian ∂θ̄/∂g.
    pub fn jacobian_entry(&self) -> f64 {
        1.0 / (self.n as f64 * self.loop_length())
    }
}

struct Reduced {
    a: f64,
    b: f64,
    e: f64,
    m: f64,
    c1: f64,
    c2: f64,
}

/// Fixed forward order: generators X/L + P/k and X/L.
pub fn qfim_sequential(gm: &GeneratorMoments) -> Qfim2 {
    let r = gm.reduced();
    Qfim2::new(
        4.0 * (r.a + r.b + 2.0 * r.e),
        4.0 * (r.a + r.e),
        4.0 * r.a,
    )
}

/// Fixed reverse order: the roles of g1 and g2 swap.
pub fn qfim_reverse(gm: &GeneratorMoments) -> Qfim2 {
    let q = qfim_sequential(gm);
    Qfim2::new(q.q22, q.q12, q.q11)
}

/// Coherent switch with ancilla √w|0⟩ + √(1−w)|1⟩. `w = ½` is the quantum
/// switch, `w = 1` collapses onto the forward order.
pub fn qfim_coherent_switch(gm: &GeneratorMoments, w: f64) -> Qfim2 {
    let r = gm.reduced();
    let v = 1.0 - w;
    let d1 = r.m - r.c2;
    let d2 = r.m - r.c1;
    let var1 = r.a + w * r.b + w * v * d1 * d1 + 2.0 * w * r.e;
    let var2 = r.a + v * r.b + w * v * d2 * d2 + 2.0 * v * r.e;
    let cov = r.a + r.e - w * v * d1 * d2;
    Qfim2::new(4.0 * var1, 4.0 * cov, 4.0 * var2)
}

pub fn qfim_quantum_switch(gm: &GeneratorMoments) -> Qfim2 {
    qfim_coherent_switch(gm, 0.5)
}

/// Probabilistic order: weight-averaged branch QFIMs (the ancilla label keeps
/// the branches orthogonal).
pub fn qfim_mixed_switch(gm: &GeneratorMoments, w: f64) -> Qfim2 {
    qfim_sequential(gm).scale(w).add(&qfim_reverse(gm).scale(1.0 - w))
}

pub fn qfim_classical_switch(gm: &GeneratorMoments) -> Qfim2 {
    qfim_mixed_switch(gm, 0.5)
}

/// QFIM of the probe alone (ancilla discarded) at g = 0: rank one along
/// (1,1), carrying only g1 + g2.
pub fn qfim_probe_alone_at_origin(gm: &GeneratorMoments) -> Qfim2 {
    let v = gm.var_h0();
    Qfim2::new(v, v, v)
}

/// G Q⁻¹ Gᵀ with G = (1,1)/(N(N+1)z̄).
///
/// Evaluated in the rotated basis u = (1,1)/√2, w = (1,−1)/√2 so that a large
/// Q_ww does not swamp the small estimable component. A singular Q falls back
/// to the pseudo-inverse, provided G has no component in its null space.
pub fn qcrb_global(
    q: &Qfim2,
    strategy: SwitchMode,
    n: usize,
    zbar: f64,
    trials: u32,
) -> Result<QcrbReport> {
    if n == 0 || !(zbar > 0.0) {
        return Err(Error::Config("qcrb needs N >= 1 and z̄ > 0".into()));
    }
    let c = 1.0 / (n as f64 * (n as f64 + 1.0) * zbar);
    let quu = 0.5 * (q.q11 + q.q22 + 2.0 * q.q12);
    let qww = 0.5 * (q.q11 + q.q22 - 2.0 * q.q12);
    let quw = 0.5 * (q.q11 - q.q22);
    let scale = q.trace().abs().max(f64::MIN_POSITIVE);
    let (lo, hi) = q.eigenvalues();

    let bound = if lo > 1e-12 * scale {
        2.0 * c * c * qww / (quu * qww - quw * quw)
    } else {
        if hi <= 1e-12 * scale {
            return Err(Error::NotEstimable("QFIM vanishes".into()));
        }
        // eigenvector of the large eigenvalue
        let (vx, vy) = if q.q12.abs() > 0.0 {
            (q.q12, hi - q.q11)
        } else if q.q11 >= q.q22 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let norm = (vx * vx + vy * vy).sqrt();
        let (vx, vy) = (vx / norm, vy / norm);
        // G ∝ (1,1); its null-space component is along (−vy, vx)
        let leak = (vx - vy).abs() / std::f64::consts::SQRT_2;
        if leak > 1e-6 {
            return Err(Error::NotEstimable(format!(
                "θ̄ direction has a component {leak:.3e} in the QFIM null space"
            )));
        }
        let gv = c * (vx + vy);
        gv * gv / hi
    };
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::NotEstimable(format!("bound evaluates to {bound}")));
    }
    Ok(QcrbReport::new(strategy, n, bound, trials))
}

/// Closed-form fixed-order bound 1/(4N²(⟨ΔX²⟩ − Cov²/⟨ΔP²⟩)).
pub fn qcrb_sequential_closed(gm: &GeneratorMoments) -> f64 {
    let n = gm.n as f64;
    1.0 / (4.0 * n * n * (gm.var_x - gm.cov_xp * gm.cov_xp / gm.var_p))
}

/// Closed-form quantum-switch bound from the generator variances.
pub fn qcrb_quantum_switch_closed(gm: &GeneratorMoments) -> f64 {
    let q = qfim_quantum_switch(gm).scale(0.25);
    let (v1, v2, c) = (q.q11, q.q22, q.q12);
    let n = gm.n as f64;
    let l = gm.loop_length();
    (v1 + v2 - 2.0 * c) / (4.0 * n * n * l * l * (v1 * v2 - c * c))
}

/// Closed-form classical-switch bound
/// k²/(N²(N+1)²z̄²⟨ΔP²⟩ + 4N²(N+1)z̄k·Cov + 4N²k²⟨ΔX²⟩).
pub fn qcrb_classical_switch_closed(gm: &GeneratorMoments) -> f64 {
    let n = gm.n as f64;
    let l = gm.loop_length();
    let k = gm.k;
    k * k
        / (n * n * l * l * gm.var_p + 4.0 * n * n * l * k * gm.cov_xp + 4.0 * n * n * k * k * gm.var_x)
}

/// Probe-alone bound at g = 0, 1/(N²(N+1)²z̄²·Var ℋ₀).
pub fn probe_alone_qfi_at_origin(gm: &GeneratorMoments, trials: u32) -> Result<QcrbReport> {
    gm.validate()?;
    let n = gm.n as f64;
    let l = gm.loop_length();
    let v = gm.var_h0();
    if !(v > 0.0) {
        return Err(Error::NotEstimable("Var ℋ₀ vanishes".into()));
    }
    Ok(QcrbReport::new(
        SwitchMode::ProbeAloneMixture,
        gm.n,
        1.0 / (n * n * l * l * v),
        trials,
    ))
}

/// Large-N value of bound·N⁴ for either switch, k²/(z̄²⟨ΔP²⟩).
pub fn switch_scaled_limit(gm: &GeneratorMoments) -> f64 {
    gm.k * gm.k / (gm.zbar * gm.zbar * gm.var_p)
}

/// QFIM of a strategy from the closed forms.
pub fn qfim_for(mode: SwitchMode, gm: &GeneratorMoments) -> Qfim2 {
    match mode {
        SwitchMode::Sequential => qfim_sequential(gm),
        SwitchMode::QuantumSwitch => qfim_quantum_switch(gm),
        SwitchMode::ClassicalSwitch => qfim_classical_switch(gm),
        SwitchMode::ProbeAloneMixture => qfim_probe_alone_at_origin(gm),
    }
}

/// Bound on θ̄ for a strategy; the probe-alone case is only defined at g = 0.
pub fn qcrb_for(mode: SwitchMode, gm: &GeneratorMoments, trials: u32) -> Result<QcrbReport> {
    gm.validate()?;
    match mode {
        SwitchMode::ProbeAloneMixture => {
            if gm.g1 != 0.0 || gm.g2 != 0.0 {
                return Err(Error::Unsupported(
                    "probe-alone bound is only available at g = 0".into(),
                ));
            }
            probe_alone_qfi_at_origin(gm, trials)
        }
        m => qcrb_global(&qfim_for(m, gm), m, gm.n, gm.zbar, trials),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gm(n: usize) -> GeneratorMoments {
        GeneratorMoments {
            var_x: 1.0,
            var_p: 0.25,
            cov_xp: 0.0,
            mean_p: 0.0,
            g1: 0.0,
            g2: 0.0,
            k: 1.0,
            zbar: 1.0,
            n,
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let q = Qfim2::new(3.0, 0.0, 1.0);
        assert_eq!(q.eigenvalues(), (1.0, 3.0));
    }

    #[test]
    fn singular_with_leak_is_not_estimable() {
        let q = Qfim2::new(1.0, 0.0, 0.0);
        let err = qcrb_global(&q, SwitchMode::Sequential, 1, 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::NotEstimable(_)));
    }

    #[test]
    fn probe_alone_through_pseudo_inverse() {
        let g = gm(3);
        let direct = probe_alone_qfi_at_origin(&g, 1).unwrap().bound;
        let pinv = qcrb_global(
            &qfim_probe_alone_at_origin(&g),
            SwitchMode::ProbeAloneMixture,
            3,
            1.0,
            1,
        )
        .unwrap()
        .bound;
        assert!((direct - pinv).abs() < 1e-14 * direct);
    }

    #[test]
    fn probe_alone_off_origin_unsupported() {
        let g = gm(2).with_g(0.1, 0.0);
        assert!(qcrb_for(SwitchMode::ProbeAloneMixture, &g, 1).is_err());
    }
}
