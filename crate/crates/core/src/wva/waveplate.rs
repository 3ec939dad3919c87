//! Jones calculus for the QWP–HWP–QWP phase compensator.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type Jones = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity() -> Jones {
    [[ONE, ZERO], [ZERO, ONE]]
}

/// cos t·I − i sin t·σ_y.
pub fn r_y(t: f64) -> Jones {
    let (s, c) = t.sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

/// cos t·I − i sin t·σ_z.
pub fn r_z(t: f64) -> Jones {
    [[C64::from_polar(1.0, -t), ZERO], [ZERO, C64::from_polar(1.0, t)]]
}

pub fn mul(a: &Jones, b: &Jones) -> Jones {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn adjoint(a: &Jones) -> Jones {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn apply(a: &Jones, v: [C64; 2]) -> [C64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Quarter-wave plate, fast axis at `eta` from horizontal.
pub fn qwp(eta: f64) -> Jones {
    let q0 = [[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]];
    mul(&mul(&r_y(eta), &q0), &r_y(-eta))
}

/// Half-wave plate, fast axis at `tau` from horizontal.
pub fn hwp(tau: f64) -> Jones {
    let h0 = [[ONE, ZERO], [ZERO, -ONE]];
    mul(&mul(&r_y(tau), &h0), &r_y(-tau))
}

/// Largest element difference between `a` and `b` after removing the best
/// global phase.
pub fn max_diff_up_to_phase(a: &Jones, b: &Jones) -> f64 {
    let ov: C64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].conj() * b[i][j])
        .sum();
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((a[i][j] * ph - b[i][j]).norm());
        }
    }
    worst
}

/// Fast-axis angles of a QWP(η1)·HWP(τ)·QWP(η2) stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSettings {
    pub qwp1: f64,
    pub hwp: f64,
    pub qwp2: f64,
}

impl WaveplateSettings {
    /// Plate angles realising R_y(φ)·R_z(−ξ)·R_y(ζ).
    pub fn from_euler(phi: f64, xi: f64, zeta: f64) -> Self {
        Self {
            qwp1: phi - FRAC_PI_4,
            hwp: 0.5 * (phi + xi - zeta) - FRAC_PI_4,
            qwp2: -zeta - FRAC_PI_4,
        }
    }

    pub fn jones(&self) -> Jones {
        mul(&mul(&qwp(self.qwp1), &hwp(self.hwp)), &qwp(self.qwp2))
    }
}

/// Plates cancelling an interferometer phase δθ: the stack equals R_z(−δθ/2).
pub fn waveplate_compensation(delta_theta: f64) -> WaveplateSettings {
    WaveplateSettings::from_euler(0.0, delta_theta / 2.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plates_are_unitary() {
        for t in [-1.3, 0.0, 0.4, 2.2] {
            for m in [qwp(t), hwp(t)] {
                let p = mul(&adjoint(&m), &m);
                assert!(max_diff_up_to_phase(&p, &identity()) < 1e-14);
            }
        }
    }

    #[test]
    fn zero_phase_gives_identity() {
        let s = waveplate_compensation(0.0);
        assert!((s.hwp + FRAC_PI_4).abs() < 1e-15);
        assert!(max_diff_up_to_phase(&s.jones(), &identity()) < 1e-14);
    }
}
