//! Cross-checks of closed forms against independent grid computations.
//! Everything here runs in dimensionless units (k = 1, w0 = 2) on the grid
//! chosen by the configuration.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use switchsense::fisher::{
    probe_alone_qfi_at_origin, qcrb_for, qfim_classical_switch, qfim_numerical, qfim_quantum_switch,
    qfim_sequential, GeneratorMoments, Qfim2, StepRule,
};
use switchsense::network::{
    apply_composite, g_params, switched_joint_state, traverse_sequence, Ancilla, Direction,
    KickRealization, KickVector, NetworkGeometry, SwitchMode, TraversalOptions,
};
use switchsense::wva::waveplate::{max_diff_up_to_phase, r_z};
use switchsense::wva::{
    predicted_mean_momentum, waveplate_compensation, wva_final_probe, PostSelection, WvaMethod,
    SMALL_SIGNAL_GUARD,
};
use switchsense::{fidelity, make_gaussian, moments, Grid, ProbeSpec, WaveFunction};

use crate::config::RunConfig;
use crate::CliError;

pub const W0: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub analytic: f64,
    pub oracle: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn compare(name: String, analytic: f64, oracle: f64, rel_error: f64, tolerance: f64) -> Self {
        Self {
            name,
            analytic,
            oracle,
            rel_error,
            tolerance,
            pass: rel_error <= tolerance,
            detail: None,
        }
    }

    fn failed(name: String, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Self {
            name,
            analytic: f64::NAN,
            oracle: f64::NAN,
            rel_error: f64::NAN,
            tolerance,
            pass: false,
            detail: Some(err.to_string()),
        }
    }

    fn from_result(name: String, tolerance: f64, r: Result<(f64, f64, f64), CliError>) -> Self {
        match r {
            Ok((a, o, e)) => Self::compare(name, a, o, e, tolerance),
            Err(e) => Self::failed(name, tolerance, e),
        }
    }
}

fn probe_on(cfg: &RunConfig, z_max: f64, center_p: f64) -> Result<WaveFunction, CliError> {
    let grid = cfg.grid_for(W0, 1.0, z_max)?;
    probe_on_grid(&grid, center_p)
}

fn probe_on_grid(grid: &Grid, center_p: f64) -> Result<WaveFunction, CliError> {
    let spec = ProbeSpec::new(W0, 1.0)?.with_center(0.0, center_p);
    Ok(make_gaussian(&spec, grid)?)
}

/// Random N ≤ `n_max` network with z_j ∈ [0.5, 2] and θ_j ∈ [−0.1, 0.1].
pub fn random_network(rng: &mut impl Rng, n_max: usize) -> (NetworkGeometry, KickVector) {
    let n = rng.random_range(1..=n_max);
    let z = (0..=n).map(|_| rng.random_range(0.5..2.0)).collect();
    let thetas = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
    let geom = NetworkGeometry::new(z, 0.0, 0.0, 1.0).expect("valid random geometry");
    (geom, KickVector::new(thetas))
}

/// Worst fidelity between operator-by-operator traversal and the reduced
/// composite, over both orders with and without parity conjugation.
pub fn evolution_fidelity(
    cfg: &RunConfig,
    geom: &NetworkGeometry,
    kicks: &KickVector,
) -> Result<f64, CliError> {
    let psi = probe_on(cfg, geom.loop_length(), 0.0)?;
    let comp = g_params(geom, kicks)?;
    let mut worst: f64 = 1.0;
    for parity in [false, true] {
        let opts = TraversalOptions {
            parity_conjugation: parity,
            include_leads: false,
        };
        for dir in [Direction::Forward, Direction::Reverse] {
            let exact = traverse_sequence(&psi, geom, kicks, dir, opts)?;
            let reduced = apply_composite(&psi, &comp, geom.k, dir, opts, true)?;
            worst = worst.min(fidelity(&exact, &reduced)?);
        }
    }
    Ok(worst)
}

pub fn evolution_checks(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    (0..cfg.oracle.evolution_instances)
        .map(|i| {
            let (geom, kicks) = random_network(rng, 6);
            let name = format!("evolution/bch-fidelity/{i:02}");
            CheckResult::from_result(
                name,
                1e-10,
                evolution_fidelity(cfg, &geom, &kicks).map(|f| (1.0, f, 1.0 - f)),
            )
        })
        .collect()
}

/// Finite-difference grid QFIM next to the closed form, at a random small-g
/// point of a random N = 2..4 network.
pub fn fisher_instance(
    cfg: &RunConfig,
    mode: SwitchMode,
    rng: &mut impl Rng,
) -> Result<(Qfim2, Qfim2), CliError> {
    let n = rng.random_range(2..=4);
    let z = (0..=n).map(|_| rng.random_range(0.5..1.5)).collect();
    let geom = NetworkGeometry::new(z, 0.0, 0.0, 1.0)?;
    let at = (rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    let center_p = rng.random_range(-0.3..0.3);
    let psi = probe_on(cfg, geom.loop_length() + 1.0, center_p)?;
    let gm = GeneratorMoments::from_moments(&moments(&psi)?, 1.0, geom.zbar(), n).with_g(at.0, at.1);
    let (ancilla, closed) = match mode {
        SwitchMode::Sequential => (Ancilla::plus(), qfim_sequential(&gm)),
        SwitchMode::QuantumSwitch => (Ancilla::plus(), qfim_quantum_switch(&gm)),
        SwitchMode::ClassicalSwitch => (Ancilla::maximally_mixed(), qfim_classical_switch(&gm)),
        SwitchMode::ProbeAloneMixture => {
            return Err(CliError::Config("probe-alone has no grid QFIM oracle".into()))
        }
    };
    let real = KickRealization::new(&geom)?;
    let numerical = qfim_numerical(
        |g1, g2| switched_joint_state(&psi, &geom, &real.kicks(g1, g2), mode, ancilla),
        at,
        StepRule::default(),
    )?;
    Ok((closed, numerical))
}

pub fn fisher_checks(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for mode in [SwitchMode::Sequential, SwitchMode::QuantumSwitch, SwitchMode::ClassicalSwitch] {
        for i in 0..cfg.oracle.fisher_instances {
            let name = format!("fisher/{}/{i:02}", mode.as_str());
            let r = fisher_instance(cfg, mode, rng)
                .map(|(c, q)| (c.frobenius(), q.frobenius(), q.rel_frobenius_error(&c)));
            out.push(CheckResult::from_result(name, 1e-3, r));
        }
    }
    out
}

/// Largest relative gap between the probe-alone bound at g = 0 and the
/// classical-switch bound, N = 1..50.
pub fn probe_alone_gap(base: &GeneratorMoments) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for n in 1..=50 {
        let gm = base.with_n(n);
        let p = probe_alone_qfi_at_origin(&gm, 1)?.bound;
        let c = qcrb_for(SwitchMode::ClassicalSwitch, &gm, 1)?.bound;
        worst = worst.max((p - c).abs() / c);
    }
    Ok(worst)
}

/// Largest relative spread of bound·N² for the fixed order, N = 1..100.
pub fn sequential_spread(base: &GeneratorMoments) -> Result<f64, CliError> {
    let c1 = qcrb_for(SwitchMode::Sequential, &base.with_n(1), 1)?.bound;
    let mut worst: f64 = 0.0;
    for n in 2..=100 {
        let c = qcrb_for(SwitchMode::Sequential, &base.with_n(n), 1)?.bound * (n * n) as f64;
        worst = worst.max((c - c1).abs() / c1);
    }
    Ok(worst)
}

/// Exact-grid post-selected mean momentum and its small-ε closed form at a
/// tenth of the small-signal guard.
pub fn wva_mean(
    grid: Option<&Grid>,
    spec: &ProbeSpec,
    geom: &NetworkGeometry,
    ps: &PostSelection,
) -> Result<(f64, f64), CliError> {
    let n = geom.n_sensors() as f64;
    let aw = 1.0 / ps.epsilon.tan();
    let amp_limit = SMALL_SIGNAL_GUARD / (aw * geom.zbar() / (2.0 * geom.k) * n * n * spec.delta_p());
    let kick_limit = SMALL_SIGNAL_GUARD / (n * spec.delta_x());
    let theta = 0.1 * amp_limit.min(kick_limit);
    let grid = match grid {
        Some(g) => g.clone(),
        None => Grid::for_beam(spec.w0, spec.k, geom.z_tot())?,
    };
    let psi = make_gaussian(spec, &grid)?;
    let var_p = moments(&psi)?.var_p;
    let kicks = KickVector::uniform(geom.n_sensors(), theta);
    let out = wva_final_probe(&psi, geom, &kicks, ps, WvaMethod::ExactGrid)?;
    let exact = moments(&out.probe)?.mean_p;
    Ok((predicted_mean_momentum(geom, var_p, ps, theta), exact))
}

fn wva_checks(cfg: &RunConfig) -> Vec<CheckResult> {
    [1usize, 3, 5]
        .into_iter()
        .map(|n| {
            let name = format!("wva/mean-momentum/N{n}");
            let r = (|| {
                let spec = ProbeSpec::new(W0, 1.0)?;
                let geom = NetworkGeometry::uniform(n, 1.0, 0.5, 0.25, 1.0)?;
                let grid = cfg.grid_for(W0, 1.0, geom.z_tot())?;
                let ps = PostSelection::from_weak_value_magnitude(7.0)?;
                let (closed, exact) = wva_mean(Some(&grid), &spec, &geom, &ps)?;
                Ok((closed, exact, (exact - closed).abs() / closed.abs()))
            })();
            CheckResult::from_result(name, 1e-2, r)
        })
        .collect()
}

/// Worst distance of the compensating plate stack from R_z(−δθ/2).
pub fn waveplate_residual(rng: &mut impl Rng, samples: usize) -> f64 {
    (0..samples)
        .map(|_| {
            let dt = rng.random_range(-PI..PI);
            max_diff_up_to_phase(&waveplate_compensation(dt).jones(), &r_z(-dt / 2.0))
        })
        .fold(0.0, f64::max)
}

pub fn run_all(cfg: &RunConfig) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = evolution_checks(cfg, &mut rng);
    out.extend(fisher_checks(cfg, &mut rng));

    let base = GeneratorMoments {
        var_x: 1.0,
        var_p: 0.25,
        cov_xp: 0.0,
        mean_p: 0.0,
        g1: 0.0,
        g2: 0.0,
        k: 1.0,
        zbar: 1.0,
        n: 1,
    };
    out.push(CheckResult::from_result(
        "fisher/probe-alone-identity".into(),
        1e-12,
        probe_alone_gap(&base).map(|e| (0.0, e, e)),
    ));
    out.push(CheckResult::from_result(
        "fisher/sequential-heisenberg".into(),
        1e-12,
        sequential_spread(&base).map(|e| (0.0, e, e)),
    ));
    out.extend(wva_checks(cfg));
    let r = waveplate_residual(&mut rng, 100);
    out.push(CheckResult::compare("waveplate/compensation".into(), 0.0, r, r, 1e-12));
    out
}
