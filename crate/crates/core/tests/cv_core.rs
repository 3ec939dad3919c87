use std::f64::consts::PI;

use proptest::prelude::*;
use switchsense::grid::diffracted_radius;
use switchsense::network::{apply_kick, apply_propagation};
use switchsense::{fidelity, make_gaussian, moments, Complex64, Grid, ProbeSpec, WaveFunction};

fn dimless_grid() -> Grid {
    Grid::new(4096, 20.0).unwrap()
}

fn gaussian(w0: f64, x0: f64, p0: f64, grid: &Grid) -> WaveFunction {
    let spec = ProbeSpec::new(w0, 1.0).unwrap().with_center(x0, p0);
    make_gaussian(&spec, grid).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn lab_probe_moments() {
    let k = 2.0 * PI / 780e-9;
    let spec = ProbeSpec::new(2e-3, k).unwrap();
    let grid = Grid::for_beam(2e-3, k, 0.0).unwrap();
    assert_eq!(grid.num_points(), 1 << 14);
    let m = moments(&make_gaussian(&spec, &grid).unwrap()).unwrap();
    assert!(rel(m.var_x.sqrt(), 1e-3) < 1e-8);
    assert!(rel(m.var_p.sqrt(), 500.0) < 1e-8);
    assert!(m.cov_xp.abs() < 1e-12);
}

#[test]
fn centered_probe_has_zero_means() {
    let m = moments(&gaussian(1.0, 0.0, 0.0, &dimless_grid())).unwrap();
    assert!(m.mean_x.abs() < 1e-12);
    assert!(m.mean_p.abs() < 1e-12);
}

#[test]
fn boosted_probe_against_direct_transform() {
    // independent O(n·m) transform, no FFT involved
    let grid = Grid::new(1024, 8.0).unwrap();
    let psi = gaussian(1.0, 0.0, 3.0, &grid);
    let xs = grid.xs();
    let amps = psi.amplitudes();
    let dx = grid.dx();
    let (dp, np) = (0.02, 1200);
    let (mut norm, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for m in 0..np {
        let p = -9.0 + (m as f64 + 0.5) * dp;
        let phi: Complex64 = xs
            .iter()
            .zip(amps)
            .map(|(x, a)| a * Complex64::from_polar(1.0, -p * x))
            .sum::<Complex64>()
            * dx
            / (2.0 * PI).sqrt();
        let d = phi.norm_sqr() * dp;
        norm += d;
        s1 += p * d;
        s2 += p * p * d;
    }
    let mean = s1 / norm;
    let var = s2 / norm - mean * mean;
    let m = moments(&psi).unwrap();
    assert!((norm - 1.0).abs() < 1e-8);
    assert!((m.mean_p - mean).abs() < 1e-8);
    assert!((m.var_p - var).abs() < 1e-8);
    assert!((m.mean_p - 3.0).abs() < 1e-10);
    assert!((m.var_p - 1.0).abs() < 1e-8);
}

#[test]
fn waist_two_moments() {
    let m = moments(&gaussian(2.0, 0.0, 0.0, &dimless_grid())).unwrap();
    assert!((m.var_x - 1.0).abs() < 1e-10);
    assert!((m.var_p - 0.25).abs() < 1e-10);
    assert!(m.cov_xp.abs() < 1e-12);
}

#[test]
fn momentum_boost_leaves_variances() {
    let psi = gaussian(1.5, 0.3, 0.0, &dimless_grid());
    let boosted = apply_kick(&psi, -2.5).unwrap(); // exp(+i 2.5 X)
    let (a, b) = (moments(&psi).unwrap(), moments(&boosted).unwrap());
    assert!((b.mean_p - a.mean_p - 2.5).abs() < 1e-10);
    assert!((b.var_x - a.var_x).abs() < 1e-12);
    assert!((b.var_p - a.var_p).abs() < 1e-10);
    assert!((b.mean_x - a.mean_x).abs() < 1e-12);
}

#[test]
fn diffraction_matches_gaussian_beam_radius() {
    let grid = Grid::new(8192, 40.0).unwrap();
    let (w0, k, z) = (1.0, 1.0, 3.0);
    let psi = gaussian(w0, 0.0, 0.0, &grid);
    let m0 = moments(&psi).unwrap();
    let m = moments(&apply_propagation(&psi, z, k).unwrap()).unwrap();
    let w = diffracted_radius(w0, k, z);
    assert!(rel(m.var_x, w * w / 4.0) < 1e-8);
    let s = z / k;
    let expect = m0.var_x + s * s * m0.var_p + 2.0 * s * m0.cov_xp;
    assert!(rel(m.var_x, expect) < 1e-8);
}

#[test]
fn fidelity_identities() {
    let grid = dimless_grid();
    let psi = gaussian(1.0, 0.2, 0.7, &grid);
    assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
    let mut rot = psi.clone();
    rot.scale(Complex64::from_polar(1.0, 1.234));
    assert!((fidelity(&psi, &rot).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn displaced_gaussian_overlap() {
    let grid = dimless_grid();
    let (w0, d) = (1.3, 0.9);
    let a = gaussian(w0, -d / 2.0, 0.0, &grid);
    let b = gaussian(w0, d / 2.0, 0.0, &grid);
    let f = fidelity(&a, &b).unwrap();
    assert!((f - (-d * d / (w0 * w0)).exp()).abs() < 1e-12);
    assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-15);
}

#[test]
fn fidelity_grid_mismatch() {
    let a = gaussian(1.0, 0.0, 0.0, &dimless_grid());
    let b = gaussian(1.0, 0.0, 0.0, &Grid::new(2048, 20.0).unwrap());
    assert!(fidelity(&a, &b).is_err());
}

#[test]
fn grid_rejects_bad_sizes() {
    assert!(Grid::new(1000, 1.0).is_err());
    assert!(Grid::new(1024, -1.0).is_err());
}

fn chirped(w0: f64, chirp: f64, x0: f64, grid: &Grid) -> WaveFunction {
    WaveFunction::from_fn(grid.clone(), |x| {
        let u = x - x0;
        Complex64::from_polar((-u * u / (w0 * w0)).exp(), chirp * u * u)
    })
    .normalized()
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip_and_parseval(w0 in 0.5f64..2.0, x0 in -2.0f64..2.0, p0 in -5.0f64..5.0) {
        let grid = dimless_grid();
        let psi = gaussian(w0, x0, p0, &grid);
        let mom = psi.clone().into_momentum();
        prop_assert!((mom.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        let back = mom.into_position();
        let diff = back
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(diff < 1e-10);
    }

    #[test]
    fn uncertainty_bound(w0 in 0.6f64..2.0, chirp in -0.5f64..0.5, sep in 0.0f64..2.0) {
        let grid = dimless_grid();
        let one = chirped(w0, chirp, 0.0, &grid);
        let m = moments(&one).unwrap();
        prop_assert!(m.var_x > 0.0 && m.var_p > 0.0);
        // chirped Gaussians are minimum-uncertainty states
        prop_assert!((m.uncertainty_product() - 0.25).abs() < 1e-6);
        let a = chirped(w0, chirp, -sep, &grid).position_amplitudes();
        let b = chirped(w0, 0.0, sep, &grid).position_amplitudes();
        let cat = WaveFunction::from_position(grid, a.iter().zip(&b).map(|(x, y)| x + y).collect())
            .unwrap()
            .normalized()
            .unwrap();
        prop_assert!(moments(&cat).unwrap().uncertainty_product() >= 0.25 * (1.0 - 1e-6));
    }

    #[test]
    fn normalize_reaches_unit_norm(scale in 0.01f64..100.0) {
        let mut psi = gaussian(1.0, 0.0, 0.0, &dimless_grid());
        psi.scale(Complex64::new(scale, 0.0));
        psi.normalize().unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
