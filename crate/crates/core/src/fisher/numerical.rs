//! Finite-difference QFIM of gridded joint states.

use num_complex::Complex64 as C64;

use super::{JointState, Qfim2};
use crate::error::{Error, Result};
use crate::grid::inner_raw;
use crate::network::SwitchMode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    /// h_j = relative · max(|g_j|, 1).
    pub relative: f64,
    /// Largest tolerated relative Frobenius gap between the plain and the
    /// Richardson-extrapolated estimates.
    pub tolerance: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            relative: 1e-4,
            tolerance: 1e-2,
        }
    }
}

impl StepRule {
    pub fn steps(&self, at: (f64, f64)) -> (f64, f64) {
        (
            self.relative * at.0.abs().max(1.0),
            self.relative * at.1.abs().max(1.0),
        )
    }
}

/// Pure components with their weights: one for a coherent joint state, one
/// per branch for an ancilla-labelled mixture.
struct Components {
    dx: f64,
    parts: Vec<(f64, Vec<C64>)>,
}

fn decompose(js: &JointState) -> Result<Components> {
    let dx = js.branch_plus.grid().dx();
    let (p, q) = js.weights;
    if js.mode == SwitchMode::ProbeAloneMixture {
        return Err(Error::Unsupported(
            "numerical QFIM of the ancilla-free mixture needs a general eigensolver".into(),
        ));
    }
    let plus = js.branch_plus.position_amplitudes();
    if q == 0.0 {
        return Ok(Components {
            dx,
            parts: vec![(1.0, plus)],
        });
    }
    let minus = js.branch_minus.position_amplitudes();
    if p == 0.0 {
        return Ok(Components {
            dx,
            parts: vec![(1.0, minus)],
        });
    }
    if js.is_pure() {
        let (ap, am) = js.branch_amplitudes();
        let mut v: Vec<C64> = plus.iter().map(|a| a * ap).collect();
        v.extend(minus.iter().map(|a| a * am));
        return Ok(Components {
            dx,
            parts: vec![(1.0, v)],
        });
    }
    if js.coherence.norm() == 0.0 {
        return Ok(Components {
            dx,
            parts: vec![(p, plus), (q, minus)],
        });
    }
    Err(Error::Unsupported(
        "partially coherent ancilla: branches are neither pure nor orthogonal".into(),
    ))
}

fn diff(a: &Components, b: &Components, h: f64) -> Result<Vec<Vec<C64>>> {
    if a.parts.len() != b.parts.len() {
        return Err(Error::NumericalQuality("joint-state structure changed with g".into()));
    }
    let s = 1.0 / (2.0 * h);
    Ok(a.parts
        .iter()
        .zip(&b.parts)
        .map(|((_, x), (_, y))| x.iter().zip(y).map(|(u, v)| (u - v) * s).collect())
        .collect())
}

fn assemble(center: &Components, d1: &[Vec<C64>], d2: &[Vec<C64>]) -> Qfim2 {
    let dx = center.dx;
    let mut q = [0.0; 3];
    for (i, (w, psi)) in center.parts.iter().enumerate() {
        let ds = [&d1[i], &d2[i]];
        let proj: Vec<C64> = ds.iter().map(|d| inner_raw(psi, d) * dx).collect();
        for (slot, (j, l)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let dd = inner_raw(ds[j], ds[l]) * dx;
            q[slot] += w * 4.0 * (dd - proj[j].conj() * proj[l]).re;
        }
    }
    Qfim2::new(q[0], q[1], q[2])
}

fn derivatives<F>(builder: &F, at: (f64, f64), h: (f64, f64)) -> Result<[Vec<Vec<C64>>; 2]>
where
    F: Fn(f64, f64) -> Result<JointState>,
{
    let p1 = decompose(&builder(at.0 + h.0, at.1)?)?;
    let m1 = decompose(&builder(at.0 - h.0, at.1)?)?;
    let p2 = decompose(&builder(at.0, at.1 + h.1)?)?;
    let m2 = decompose(&builder(at.0, at.1 - h.1)?)?;
    Ok([diff(&p1, &m1, h.0)?, diff(&p2, &m2, h.1)?])
}

/// Plain two-point central differences with steps `h`.
pub fn qfim_central_difference<F>(builder: F, at: (f64, f64), h: (f64, f64)) -> Result<Qfim2>
where
    F: Fn(f64, f64) -> Result<JointState>,
{
    let center = decompose(&builder(at.0, at.1)?)?;
    let [d1, d2] = derivatives(&builder, at, h)?;
    Ok(assemble(&center, &d1, &d2))
}

/// Central differences with one Richardson level on the derivative states.
pub fn qfim_numerical<F>(builder: F, at: (f64, f64), rule: StepRule) -> Result<Qfim2>
where
    F: Fn(f64, f64) -> Result<JointState>,
{
    let center = decompose(&builder(at.0, at.1)?)?;
    let h = rule.steps(at);
    let coarse = derivatives(&builder, at, h)?;
    let fine = derivatives(&builder, at, (h.0 / 2.0, h.1 / 2.0))?;
    let extrap: Vec<Vec<Vec<C64>>> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| {
            c.iter()
                .zip(f)
                .map(|(cv, fv)| cv.iter().zip(fv).map(|(a, b)| (b * 4.0 - a) / 3.0).collect())
                .collect()
        })
        .collect();
    let q_fine = assemble(&center, &fine[0], &fine[1]);
    let q_rich = assemble(&center, &extrap[0], &extrap[1]);
    let gap = q_fine.rel_frobenius_error(&q_rich);
    if !(gap <= rule.tolerance) {
        return Err(Error::NumericalQuality(format!(
            "Richardson estimate differs from central difference by {gap:.3e} (relative)"
        )));
    }
    Ok(q_rich)
}

/// Pure-state QFIM 4 Re[⟨∂ψ|∂ψ⟩ − ⟨∂ψ|ψ⟩⟨ψ|∂ψ⟩] from supplied derivative states.
pub fn qfim_of_state(psi: &[C64], d1: &[C64], d2: &[C64], dx: f64) -> Qfim2 {
    let center = Components {
        dx,
        parts: vec![(1.0, psi.to_vec())],
    };
    assemble(&center, &[d1.to_vec()], &[d2.to_vec()])
}
