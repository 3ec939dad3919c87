use proptest::prelude::*;
use switchsense::network::*;
use switchsense::{fidelity, make_gaussian, moments, Complex64, Grid, ProbeSpec, WaveFunction};

const OPTS: TraversalOptions = TraversalOptions {
    parity_conjugation: false,
    include_leads: false,
};

fn grid_for(loop_len: f64) -> Grid {
    Grid::for_beam(2.0, 1.0, loop_len).unwrap()
}

fn probe(grid: &Grid) -> WaveFunction {
    make_gaussian(&ProbeSpec::new(2.0, 1.0).unwrap(), grid).unwrap()
}

fn max_diff(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.position_amplitudes()
        .iter()
        .zip(b.position_amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Plain double-loop evaluation of the g and ξ sums.
#[allow(clippy::needless_range_loop)]
fn sums_by_hand(z: &[f64], th: &[f64]) -> (f64, f64, f64, f64) {
    let n = th.len();
    let (mut g1, mut g2, mut xi1, mut xi2) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let s: f64 = (j + 1..=n).map(|l| th[l - 1]).sum();
        g1 += z[j] * s;
        xi1 += z[j] * s * s;
    }
    for j in 1..=n {
        let s: f64 = (1..=j).map(|l| th[l - 1]).sum();
        g2 += z[j] * s;
        xi2 += z[j] * s * s;
    }
    (g1, g2, xi1, xi2)
}

#[test]
fn zero_kick_is_identity() {
    let psi = probe(&Grid::new(4096, 30.0).unwrap());
    assert_eq!(max_diff(&apply_kick(&psi, 0.0).unwrap(), &psi), 0.0);
}

#[test]
fn kick_shifts_momentum_down() {
    let grid = Grid::new(4096, 30.0).unwrap();
    let psi = make_gaussian(&ProbeSpec::new(1.0, 1.0).unwrap(), &grid).unwrap();
    let m0 = moments(&psi).unwrap();
    let m = moments(&apply_kick(&psi, 5.0).unwrap()).unwrap();
    assert!((m.mean_p + 5.0).abs() < 1e-10);
    assert!((m.var_p - m0.var_p).abs() < 1e-10);
    assert!((m.var_x - m0.var_x).abs() < 1e-12);
}

#[test]
fn kicks_compose() {
    let psi = probe(&Grid::new(4096, 30.0).unwrap());
    let two = apply_kick(&apply_kick(&psi, 0.3).unwrap(), -1.1).unwrap();
    let one = apply_kick(&psi, -0.8).unwrap();
    assert!(max_diff(&two, &one) < 1e-14);
}

#[test]
fn propagation_zero_and_composition() {
    let psi = probe(&grid_for(5.0));
    assert_eq!(max_diff(&apply_propagation(&psi, 0.0, 1.0).unwrap(), &psi), 0.0);
    let ab = apply_propagation(&apply_propagation(&psi, 1.2, 1.0).unwrap(), 2.3, 1.0).unwrap();
    let c = apply_propagation(&psi, 3.5, 1.0).unwrap();
    assert!(max_diff(&ab, &c) < 1e-12);
}

#[test]
fn propagation_keeps_momentum_density_and_drifts_centre() {
    let psi = apply_kick(&probe(&grid_for(4.0)), -0.4).unwrap();
    let before = psi.momentum_amplitudes();
    let out = apply_propagation(&psi, 4.0, 1.0).unwrap();
    let after = out.momentum_amplitudes();
    let worst = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-12);
    let (m0, m1) = (moments(&psi).unwrap(), moments(&out).unwrap());
    assert!((m1.mean_x - (m0.mean_x + 4.0 * m0.mean_p)).abs() < 1e-10);
}

#[test]
fn propagation_overflow_is_reported() {
    let psi = probe(&Grid::new(1024, 8.0).unwrap());
    let err = apply_propagation(&psi, 50.0, 1.0).unwrap_err();
    assert!(matches!(err, switchsense::Error::GridOverflow(_)));
}

#[test]
fn parity_properties() {
    let grid = Grid::new(4096, 30.0).unwrap();
    let psi = probe(&grid);
    let pp = apply_parity(&apply_parity(&psi));
    assert_eq!(max_diff(&pp, &psi), 0.0);

    let a = 1.7;
    let shifted = make_gaussian(&ProbeSpec::new(2.0, 1.0).unwrap().with_center(a, 0.0), &grid).unwrap();
    let m = moments(&apply_parity(&shifted)).unwrap();
    assert!((m.mean_x + a).abs() < 1e-10);

    // chirped, displaced, boosted: nonzero covariance
    let chirped = WaveFunction::from_fn(grid.clone(), |x| {
        let u = x - 0.8;
        Complex64::from_polar((-u * u / 4.0).exp(), 0.2 * u * u + 0.6 * x)
    })
    .normalized()
    .unwrap();
    let (m0, m1) = (moments(&chirped).unwrap(), moments(&apply_parity(&chirped)).unwrap());
    assert!(m0.cov_xp.abs() > 0.1);
    assert!((m1.cov_xp - m0.cov_xp).abs() < 1e-10);
    assert!((m1.mean_x + m0.mean_x).abs() < 1e-10);
    assert!((m1.mean_p + m0.mean_p).abs() < 1e-10);
    assert!((m1.var_x - m0.var_x).abs() < 1e-10);
    assert!((m1.var_p - m0.var_p).abs() < 1e-10);
}

#[test]
fn translation_shifts_position() {
    let psi = probe(&Grid::new(4096, 30.0).unwrap());
    let m = moments(&apply_translation(&psi, 1.25)).unwrap();
    assert!((m.mean_x - 1.25).abs() < 1e-10);
}

#[test]
fn kick_and_propagation_do_not_commute() {
    let psi = probe(&grid_for(3.0));
    let (theta, z, k) = (0.2, 3.0, 1.0);
    let kp = apply_propagation(&apply_kick(&psi, theta).unwrap(), z, k).unwrap();
    let pk = apply_kick(&apply_propagation(&psi, z, k).unwrap(), theta).unwrap();
    let dx = moments(&kp).unwrap().mean_x - moments(&pk).unwrap().mean_x;
    assert!((dx.abs() - z / k * theta).abs() < 1e-10);
    assert!(fidelity(&kp, &pk).unwrap() < 1.0 - 1e-4);
}

#[test]
fn g_params_two_sensors() {
    let geom = NetworkGeometry::uniform(2, 1.0, 0.0, 0.0, 1.0).unwrap();
    let (a, b) = (0.3, -0.7);
    let c = g_params(&geom, &KickVector::new(vec![a, b])).unwrap();
    assert!((c.g1 - (a + 2.0 * b)).abs() < 1e-15);
    assert!((c.g2 - (2.0 * a + b)).abs() < 1e-15);
    assert!((c.g1 + c.g2 - 3.0 * (a + b)).abs() < 1e-15);
}

#[test]
fn g_params_zero_kicks() {
    let geom = NetworkGeometry::uniform(4, 0.7, 0.0, 0.0, 1.0).unwrap();
    let c = g_params(&geom, &KickVector::uniform(4, 0.0)).unwrap();
    assert_eq!((c.g1, c.g2, c.xi1, c.xi2), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn g_params_length_mismatch() {
    let geom = NetworkGeometry::uniform(3, 1.0, 0.0, 0.0, 1.0).unwrap();
    assert!(g_params(&geom, &KickVector::uniform(2, 0.1)).is_err());
}

#[test]
fn unkicked_orders_agree() {
    let geom = NetworkGeometry::new(vec![0.6, 1.4, 0.9, 1.1], 0.0, 0.0, 1.0).unwrap();
    let psi = probe(&grid_for(geom.loop_length()));
    let kicks = KickVector::uniform(3, 0.0);
    let f = traverse_sequence(&psi, &geom, &kicks, Direction::Forward, OPTS).unwrap();
    let r = traverse_sequence(&psi, &geom, &kicks, Direction::Reverse, OPTS).unwrap();
    assert!(max_diff(&f, &r) < 1e-12);
}

#[test]
fn symmetric_single_sensor_orders_agree() {
    let geom = NetworkGeometry::uniform(1, 1.3, 0.0, 0.0, 1.0).unwrap();
    let psi = probe(&grid_for(geom.loop_length()));
    let kicks = KickVector::new(vec![0.07]);
    let f = traverse_sequence(&psi, &geom, &kicks, Direction::Forward, OPTS).unwrap();
    let r = traverse_sequence(&psi, &geom, &kicks, Direction::Reverse, OPTS).unwrap();
    assert!(max_diff(&f, &r) < 1e-12);
}

#[test]
fn composite_reproduces_parity_conjugated_reverse() {
    let geom = NetworkGeometry::new(vec![0.8, 1.5, 0.6], 0.0, 0.0, 1.0).unwrap();
    let kicks = KickVector::new(vec![0.05, -0.08]);
    let psi = probe(&grid_for(geom.loop_length()));
    let comp = g_params(&geom, &kicks).unwrap();
    let opts = TraversalOptions {
        parity_conjugation: true,
        include_leads: false,
    };
    let exact = traverse_sequence(&psi, &geom, &kicks, Direction::Reverse, opts).unwrap();
    let red = apply_composite(&psi, &comp, 1.0, Direction::Reverse, opts, true).unwrap();
    assert!(max_diff(&exact, &red) < 1e-10);
    // π†U₋π carries the opposite translation and kick of U₋
    let m = moments(&exact).unwrap();
    assert!((m.mean_p - comp.kick_total()).abs() < 1e-10);
}

#[test]
fn switched_branches_without_kicks() {
    let geom = NetworkGeometry::uniform(3, 1.0, 0.0, 0.0, 1.0).unwrap();
    let psi = probe(&grid_for(geom.loop_length()));
    let js = switched_joint_state(
        &psi,
        &geom,
        &KickVector::uniform(3, 0.0),
        SwitchMode::QuantumSwitch,
        Ancilla::plus(),
    )
    .unwrap();
    assert!((fidelity(&js.branch_plus, &js.branch_minus).unwrap() - 1.0).abs() < 1e-12);
    assert!((js.coherence.norm() - 0.5).abs() < 1e-15);
}

#[test]
fn classical_switch_weights() {
    let geom = NetworkGeometry::uniform(2, 1.0, 0.0, 0.0, 1.0).unwrap();
    let psi = probe(&grid_for(geom.loop_length()));
    let js = switched_joint_state(
        &psi,
        &geom,
        &KickVector::new(vec![0.05, 0.02]),
        SwitchMode::ClassicalSwitch,
        Ancilla::maximally_mixed(),
    )
    .unwrap();
    assert_eq!(js.weights, (0.5, 0.5));
    assert_eq!(js.coherence, Complex64::new(0.0, 0.0));
    assert!((js.branch_plus.norm_sqr() - 1.0).abs() < 1e-10);
    assert!((js.branch_minus.norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn mode_ancilla_mismatch() {
    let geom = NetworkGeometry::uniform(2, 1.0, 0.0, 0.0, 1.0).unwrap();
    let psi = probe(&grid_for(geom.loop_length()));
    let kicks = KickVector::uniform(2, 0.01);
    assert!(switched_joint_state(&psi, &geom, &kicks, SwitchMode::QuantumSwitch, Ancilla::maximally_mixed()).is_err());
    assert!(switched_joint_state(&psi, &geom, &kicks, SwitchMode::ClassicalSwitch, Ancilla::plus()).is_err());
}

#[test]
fn switch_relative_phase_from_branch_overlap() {
    let geom = NetworkGeometry::new(vec![0.7, 1.8, 1.2, 0.9], 0.0, 0.0, 1.0).unwrap();
    let kicks = KickVector::new(vec![0.09, -0.03, 0.06]);
    let psi = probe(&grid_for(geom.loop_length()));
    let js = switched_joint_state(&psi, &geom, &kicks, SwitchMode::QuantumSwitch, Ancilla::plus()).unwrap();
    let comp = g_params(&geom, &kicks).unwrap();
    let phase = js.branch_minus.inner(&js.branch_plus).unwrap().arg();
    let expected = comp.relative_phase(geom.k);
    assert!(expected.abs() > 1e-3);
    assert!((phase - expected).abs() < 1e-10, "{phase} vs {expected}");
}

#[test]
fn kick_realization_hits_targets() {
    let geom = NetworkGeometry::new(vec![0.7, 1.8, 1.2, 0.9], 0.0, 0.0, 1.0).unwrap();
    let real = KickRealization::new(&geom).unwrap();
    let c = g_params(&geom, &real.kicks(0.05, -0.02)).unwrap();
    assert!((c.g1 - 0.05).abs() < 1e-15 && (c.g2 + 0.02).abs() < 1e-15);
    let single = NetworkGeometry::uniform(1, 1.0, 0.0, 0.0, 1.0).unwrap();
    assert!(KickRealization::new(&single).is_err());
}

fn random_network() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.5f64..2.0, n + 1),
            prop::collection::vec(-0.1f64..0.1, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn g_and_xi_identities((z, th) in random_network()) {
        let n = th.len();
        let geom = NetworkGeometry::new(z.clone(), 0.0, 0.0, 1.0).unwrap();
        let c = g_params(&geom, &KickVector::new(th.clone())).unwrap();
        let (g1, g2, xi1, xi2) = sums_by_hand(&z, &th);
        let tol = |v: f64| 1e-12 * v.abs().max(1e-3);
        prop_assert!((c.g1 - g1).abs() <= tol(g1));
        prop_assert!((c.g2 - g2).abs() <= tol(g2));
        let zbar = z.iter().sum::<f64>() / (n as f64 + 1.0);
        let theta_bar = th.iter().sum::<f64>() / n as f64;
        let lhs = g1 + g2;
        prop_assert!((lhs - (n as f64 + 1.0) * n as f64 * zbar * theta_bar).abs() <= tol(lhs));
        let rhs = (g1 * g1 - g2 * g2) / ((n as f64 + 1.0) * zbar);
        prop_assert!(((xi1 - xi2) - rhs).abs() <= 1e-12 * xi1.abs().max(xi2.abs()).max(1e-6));
        prop_assert!((c.xi1 - xi1).abs() <= tol(xi1) && (c.xi2 - xi2).abs() <= tol(xi2));
    }

    #[test]
    fn traversal_matches_composite((z, th) in random_network(), parity in any::<bool>()) {
        let geom = NetworkGeometry::new(z, 0.0, 0.0, 1.0).unwrap();
        let kicks = KickVector::new(th);
        let psi = probe(&grid_for(geom.loop_length()));
        let comp = g_params(&geom, &kicks).unwrap();
        let opts = TraversalOptions { parity_conjugation: parity, include_leads: false };
        for dir in [Direction::Forward, Direction::Reverse] {
            let exact = traverse_sequence(&psi, &geom, &kicks, dir, opts).unwrap();
            prop_assert!((exact.norm_sqr() - 1.0).abs() < 1e-10);
            let red = apply_composite(&psi, &comp, geom.k, dir, opts, true).unwrap();
            prop_assert!(fidelity(&exact, &red).unwrap() >= 1.0 - 1e-10);
            // the dynamic phase makes the match exact, not just up to phase
            prop_assert!(max_diff(&exact, &red) < 1e-9);
        }
    }

    #[test]
    fn unitaries_preserve_norm(theta in -1.0f64..1.0, z in 0.0f64..4.0, a in -3.0f64..3.0) {
        let psi = probe(&grid_for(4.0));
        let out = apply_propagation(&apply_kick(&psi, theta).unwrap(), z, 1.0).unwrap();
        let out = apply_translation(&apply_parity(&out), a);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
