//! Sensing kicks, free-space propagation and traversals of the cyclic network.
//!
//! Sensor `j` (1-based) applies `exp(-i θ_j X)`; the free path `z_j` between
//! sensor `j` and `j+1` applies `exp(-i z_j P²/2k)`, with `z_0` leading into
//! the first sensor and `z_N` leaving the last. The forward order is
//! `U_+ = U_{z_N} U_{θ_N} ... U_{θ_1} U_{z_0}`, the reverse order
//! `U_- = U_{z_0} U_{θ_1} ... U_{θ_N} U_{z_N}`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::JointState;
use crate::grid::WaveFunction;
use crate::probe::moments;

const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    /// Free paths z_0..z_N (N+1 entries).
    pub z: Vec<f64>,
    pub z_in: f64,
    pub z_out: f64,
    pub k: f64,
}

impl NetworkGeometry {
    pub fn new(z: Vec<f64>, z_in: f64, z_out: f64, k: f64) -> Result<Self> {
        let g = Self { z, z_in, z_out, k };
        g.validate()?;
        Ok(g)
    }

    /// `n` sensors with every free path equal to `zbar`.
    pub fn uniform(n: usize, zbar: f64, z_in: f64, z_out: f64, k: f64) -> Result<Self> {
        Self::new(vec![zbar; n + 1], z_in, z_out, k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.z.len() < 2 {
            return Err(Error::Config(format!(
                "geometry needs at least two free paths (N >= 1), got {}",
                self.z.len()
            )));
        }
        if self.z.iter().any(|z| !(*z >= 0.0 && z.is_finite())) {
            return Err(Error::Config("geometry distances must be finite and >= 0".into()));
        }
        if !(self.z_in >= 0.0 && self.z_out >= 0.0) {
            return Err(Error::Config("lead-in/lead-out distances must be >= 0".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("wave number must be positive, got {}", self.k)));
        }
        if self.loop_length() <= 0.0 {
            return Err(Error::Config("total loop length must be positive".into()));
        }
        Ok(())
    }

    pub fn n_sensors(&self) -> usize {
        self.z.len() - 1
    }

    pub fn zbar(&self) -> f64 {
        self.loop_length() / self.z.len() as f64
    }

    /// (N+1)·z̄, the path length inside the loop.
    pub fn loop_length(&self) -> f64 {
        self.z.iter().sum()
    }

    pub fn z_tot(&self) -> f64 {
        self.z_in + self.loop_length() + self.z_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickVector {
    pub thetas: Vec<f64>,
}

impl KickVector {
    pub fn new(thetas: Vec<f64>) -> Self {
        Self { thetas }
    }

    pub fn uniform(n: usize, theta: f64) -> Self {
        Self::new(vec![theta; n])
    }

    /// From mirror-induced beam tilts φ_j, θ_j = k·φ_j.
    pub fn from_tilts(phis: &[f64], k: f64) -> Self {
        Self::new(phis.iter().map(|p| p * k).collect())
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.thetas.iter().sum()
    }

    pub fn theta_bar(&self) -> f64 {
        self.total() / self.len() as f64
    }

    pub fn tilts(&self, k: f64) -> Vec<f64> {
        self.thetas.iter().map(|t| t / k).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Forward,
    Reverse,
    Switched,
}

/// Reduced form of a traversal: `U_± = e^{-i ξ/2k} U_L e^{-i g P/k} e^{-i Θ X}`
/// with `L = (N+1) z̄`, `Θ = (g1 + g2)/L`, `g = g1` forward and `g2` reverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeEvolution {
    pub g1: f64,
    pub g2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub loop_length: f64,
    pub order: Order,
}

impl CompositeEvolution {
    /// Total kick N·θ̄.
    pub fn kick_total(&self) -> f64 {
        (self.g1 + self.g2) / self.loop_length
    }

    /// Relative dynamic phase between the two switched branches,
    /// (g1² − g2²)/(2kL).
    pub fn relative_phase(&self, k: f64) -> f64 {
        (self.g1 * self.g1 - self.g2 * self.g2) / (2.0 * k * self.loop_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchMode {
    Sequential,
    QuantumSwitch,
    ClassicalSwitch,
    #[serde(rename = "probe-alone")]
    ProbeAloneMixture,
}

impl SwitchMode {
    pub const ALL: [SwitchMode; 4] = [
        SwitchMode::Sequential,
        SwitchMode::QuantumSwitch,
        SwitchMode::ClassicalSwitch,
        SwitchMode::ProbeAloneMixture,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SwitchMode::Sequential => "sequential",
            SwitchMode::QuantumSwitch => "quantum-switch",
            SwitchMode::ClassicalSwitch => "classical-switch",
            SwitchMode::ProbeAloneMixture => "probe-alone",
        }
    }
}

impl std::str::FromStr for SwitchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SwitchMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown switch mode '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraversalOptions {
    /// Wrap the traversal as π†(·)π.
    pub parity_conjugation: bool,
    /// Add the lead-in and lead-out free paths around the loop.
    pub include_leads: bool,
}

/// Control state of the order-switching ancilla.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ancilla {
    /// √w|0⟩ + e^{iφ}√(1−w)|1⟩.
    Coherent { weight_forward: f64, phase: f64 },
    /// w|0⟩⟨0| + (1−w)|1⟩⟨1|.
    Mixed { weight_forward: f64 },
}

impl Ancilla {
    pub fn plus() -> Self {
        Ancilla::Coherent {
            weight_forward: 0.5,
            phase: 0.0,
        }
    }

    pub fn maximally_mixed() -> Self {
        Ancilla::Mixed { weight_forward: 0.5 }
    }

    fn weight_forward(&self) -> f64 {
        match *self {
            Ancilla::Coherent { weight_forward, .. } | Ancilla::Mixed { weight_forward } => {
                weight_forward
            }
        }
    }
}

pub fn apply_kick(psi: &WaveFunction, theta: f64) -> Result<WaveFunction> {
    psi.check_normalized(NORM_TOL)?;
    Ok(kick(psi.clone(), theta))
}

fn kick(psi: WaveFunction, theta: f64) -> WaveFunction {
    if theta == 0.0 {
        return psi;
    }
    psi.map_position(|_, x, a| a * C64::from_polar(1.0, -theta * x))
}

/// Free propagation `exp(-i z P²/2k)`. Fails if the propagated beam would
/// come within half the grid of its edges in position or momentum.
pub fn apply_propagation(psi: &WaveFunction, z: f64, k: f64) -> Result<WaveFunction> {
    if z < 0.0 {
        return Err(Error::Config(format!("propagation distance must be >= 0, got {z}")));
    }
    propagate(psi.clone(), z, k)
}

fn propagate(psi: WaveFunction, z: f64, k: f64) -> Result<WaveFunction> {
    if z == 0.0 {
        return Ok(psi);
    }
    guard_overflow(&psi, z, k)?;
    Ok(psi.map_momentum_phase(|p| C64::from_polar(1.0, -z * p * p / (2.0 * k))))
}

fn guard_overflow(psi: &WaveFunction, z: f64, k: f64) -> Result<()> {
    let m = moments(psi)?;
    let g = psi.grid();
    let s = z / k;
    let var_x = m.var_x + 2.0 * s * m.cov_xp + s * s * m.var_p;
    let reach_x = (m.mean_x + s * m.mean_p).abs() + 2.0 * var_x.max(0.0).sqrt();
    if reach_x > g.half_extent() / 2.0 {
        return Err(Error::GridOverflow(format!(
            "beam reaches {:e} after z = {:e}, beyond half the grid half-extent {:e}",
            reach_x,
            z,
            g.half_extent()
        )));
    }
    let reach_p = m.mean_p.abs() + 2.0 * m.var_p.sqrt();
    if reach_p > g.p_max() / 2.0 {
        return Err(Error::GridOverflow(format!(
            "momentum content reaches {:e}, beyond half the Nyquist momentum {:e}",
            reach_p,
            g.p_max()
        )));
    }
    Ok(())
}

/// ψ(x) → ψ(−x). Exact on the symmetric grid (index j ↦ n − j mod n).
pub fn apply_parity(psi: &WaveFunction) -> WaveFunction {
    parity(psi.clone())
}

fn parity(psi: WaveFunction) -> WaveFunction {
    let mut wf = psi.into_position();
    let amps = wf.position_amps_mut();
    let n = amps.len();
    let src = amps.clone();
    for (j, a) in amps.iter_mut().enumerate() {
        *a = src[(n - j) % n];
    }
    wf
}

/// `exp(-i a P)`, a rigid shift x → x + a.
pub fn apply_translation(psi: &WaveFunction, a: f64) -> WaveFunction {
    translate(psi.clone(), a)
}

fn translate(psi: WaveFunction, a: f64) -> WaveFunction {
    if a == 0.0 {
        return psi;
    }
    psi.map_momentum_phase(|p| C64::from_polar(1.0, -a * p))
}

fn check_lengths(geom: &NetworkGeometry, kicks: &KickVector) -> Result<()> {
    if kicks.len() != geom.n_sensors() {
        return Err(Error::LengthMismatch {
            expected: geom.n_sensors(),
            got: kicks.len(),
        });
    }
    Ok(())
}

#[allow(clippy::needless_range_loop)]
pub fn g_params(geom: &NetworkGeometry, kicks: &KickVector) -> Result<CompositeEvolution> {
    check_lengths(geom, kicks)?;
    let n = geom.n_sensors();
    let th = &kicks.thetas;
    // prefix[j] = θ_1 + ... + θ_j
    let mut prefix = vec![0.0; n + 1];
    for j in 1..=n {
        prefix[j] = prefix[j - 1] + th[j - 1];
    }
    let total = prefix[n];
    let (mut g1, mut g2, mut xi1, mut xi2) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let after = total - prefix[j];
        g1 += geom.z[j] * after;
        xi1 += geom.z[j] * after * after;
    }
    for j in 1..=n {
        g2 += geom.z[j] * prefix[j];
        xi2 += geom.z[j] * prefix[j] * prefix[j];
    }
    Ok(CompositeEvolution {
        g1,
        g2,
        xi1,
        xi2,
        loop_length: geom.loop_length(),
        order: Order::Switched,
    })
}

/// Operator-by-operator application of the traversal on the grid.
pub fn traverse_sequence(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    direction: Direction,
    opts: TraversalOptions,
) -> Result<WaveFunction> {
    psi.check_normalized(NORM_TOL)?;
    check_lengths(geom, kicks)?;
    let k = geom.k;
    let n = geom.n_sensors();
    let mut wf = propagate(psi.clone(), if opts.include_leads { geom.z_in } else { 0.0 }, k)?;
    if opts.parity_conjugation {
        wf = parity(wf);
    }
    match direction {
        Direction::Forward => {
            wf = propagate(wf, geom.z[0], k)?;
            for j in 1..=n {
                wf = kick(wf, kicks.thetas[j - 1]);
                wf = propagate(wf, geom.z[j], k)?;
            }
        }
        Direction::Reverse => {
            wf = propagate(wf, geom.z[n], k)?;
            for j in (1..=n).rev() {
                wf = kick(wf, kicks.thetas[j - 1]);
                wf = propagate(wf, geom.z[j - 1], k)?;
            }
        }
    }
    if opts.parity_conjugation {
        wf = parity(wf);
    }
    propagate(wf, if opts.include_leads { geom.z_out } else { 0.0 }, k)
}

/// Apply the reduced composite as three grid phases (kick, shift,
/// propagation). With `dynamic_phase` the factor e^{-iξ/2k} is included so
/// that the result equals the exact traversal, not just up to global phase.
pub fn apply_composite(
    psi: &WaveFunction,
    comp: &CompositeEvolution,
    k: f64,
    direction: Direction,
    opts: TraversalOptions,
    dynamic_phase: bool,
) -> Result<WaveFunction> {
    psi.check_normalized(NORM_TOL)?;
    if opts.include_leads {
        return Err(Error::Unsupported(
            "leads are not part of the reduced composite; propagate them separately".into(),
        ));
    }
    let (g, xi) = match direction {
        Direction::Forward => (comp.g1, comp.xi1),
        Direction::Reverse => (comp.g2, comp.xi2),
    };
    let mut wf = psi.clone();
    if opts.parity_conjugation {
        wf = parity(wf);
    }
    wf = kick(wf, comp.kick_total());
    wf = translate(wf, g / k);
    wf = propagate(wf, comp.loop_length, k)?;
    if opts.parity_conjugation {
        wf = parity(wf);
    }
    if dynamic_phase {
        wf.scale(C64::from_polar(1.0, -xi / (2.0 * k)));
    }
    Ok(wf)
}

/// Branch pair produced by the order switch. Branch states are the exact
/// traversals, so every dynamic phase is carried by the states themselves.
pub fn switched_joint_state(
    psi: &WaveFunction,
    geom: &NetworkGeometry,
    kicks: &KickVector,
    mode: SwitchMode,
    ancilla: Ancilla,
) -> Result<JointState> {
    let opts = TraversalOptions::default();
    let plus = traverse_sequence(psi, geom, kicks, Direction::Forward, opts)?;
    match (mode, ancilla) {
        (SwitchMode::Sequential, _) => Ok(JointState {
            branch_minus: plus.clone(),
            branch_plus: plus,
            coherence: C64::new(0.0, 0.0),
            weights: (1.0, 0.0),
            mode,
        }),
        (SwitchMode::QuantumSwitch, Ancilla::Coherent { weight_forward, phase }) => {
            check_weight(weight_forward)?;
            let minus = traverse_sequence(psi, geom, kicks, Direction::Reverse, opts)?;
            let w = weight_forward;
            Ok(JointState {
                branch_plus: plus,
                branch_minus: minus,
                coherence: C64::from_polar((w * (1.0 - w)).sqrt(), phase),
                weights: (w, 1.0 - w),
                mode,
            })
        }
        (SwitchMode::ClassicalSwitch | SwitchMode::ProbeAloneMixture, Ancilla::Mixed { .. }) => {
            let w = ancilla.weight_forward();
            check_weight(w)?;
            let minus = traverse_sequence(psi, geom, kicks, Direction::Reverse, opts)?;
            Ok(JointState {
                branch_plus: plus,
                branch_minus: minus,
                coherence: C64::new(0.0, 0.0),
                weights: (w, 1.0 - w),
                mode,
            })
        }
        (m, a) => Err(Error::Config(format!(
            "ancilla {a:?} is incompatible with switch mode {}",
            m.as_str()
        ))),
    }
}

fn check_weight(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Config(format!("ancilla forward weight must lie in [0,1], got {w}")));
    }
    Ok(())
}

/// Maps target (g1, g2) onto a kick vector θ = α e_1 + β e_N, so that states
/// at arbitrary (g1, g2) can be produced by exact traversal. Needs N ≥ 2.
#[derive(Debug, Clone)]
pub struct KickRealization {
    geom: NetworkGeometry,
    inv: [[f64; 2]; 2],
}

impl KickRealization {
    pub fn new(geom: &NetworkGeometry) -> Result<Self> {
        let n = geom.n_sensors();
        if n < 2 {
            return Err(Error::Unsupported(
                "g1 and g2 cannot be varied independently with a single sensor".into(),
            ));
        }
        let z = &geom.z;
        let lo: f64 = z[..n].iter().sum();
        let hi: f64 = z[1..].iter().sum();
        let m = [[z[0], lo], [hi, z[n]]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-14 * (lo * hi).max(f64::MIN_POSITIVE) {
            return Err(Error::Unsupported("degenerate geometry for kick realization".into()));
        }
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        Ok(Self {
            geom: geom.clone(),
            inv,
        })
    }

    pub fn kicks(&self, g1: f64, g2: f64) -> KickVector {
        let alpha = self.inv[0][0] * g1 + self.inv[0][1] * g2;
        let beta = self.inv[1][0] * g1 + self.inv[1][1] * g2;
        let mut th = vec![0.0; self.geom.n_sensors()];
        th[0] = alpha;
        *th.last_mut().unwrap() += beta;
        KickVector::new(th)
    }

    pub fn geometry(&self) -> &NetworkGeometry {
        &self.geom
    }
}
