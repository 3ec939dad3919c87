use std::f64::consts::PI;

use proptest::prelude::*;
use switchsense::experiment::*;
use switchsense::network::{NetworkGeometry, SwitchMode};
use switchsense::wva::{PostSelection, ReadoutModel};
use switchsense::ProbeSpec;

fn chain() -> SignalChain {
    SignalChain {
        probe: ProbeSpec::new(2e-3, 2.0 * PI / 780e-9).unwrap(),
        post_selection: PostSelection::from_weak_value_magnitude(7.0).unwrap(),
        readout: ReadoutModel::default(),
    }
}

fn geom(n: usize, z_in: f64) -> NetworkGeometry {
    NetworkGeometry::uniform(n, 0.2, z_in, 0.0, chain().probe.k).unwrap()
}

fn config(jitter: f64, seed: u64) -> SweepConfig {
    let c = chain();
    let g1 = geom(1, 0.325);
    let drive = SensorDriveModel::default();
    let floor = calibrate_noise_floor(MEASURED_PRECISION[0].min_tilt, &g1, &c).unwrap();
    SweepConfig {
        n_sensors: (1..=9).collect(),
        voltages: (1..=10).map(|v| v as f64 * 1e-3).collect(),
        replicates: 20,
        seed,
        zbar: 0.2,
        z_in: 0.325,
        z_out: 0.0,
        chain: c,
        drive,
        noise: NoiseModel {
            noise_floor: floor,
            jitter,
        },
        free_intercept: false,
        modes: SwitchMode::ALL.to_vec(),
        trials: 1,
    }
}

#[test]
fn drive_voltage_anchors() {
    let d = SensorDriveModel::default();
    assert!((voltage_to_beam_tilt(1.0, &d).unwrap() - 2.2e-6).abs() < 1e-18);
    assert!((voltage_to_beam_tilt(5e-3, &d).unwrap() - 11e-9).abs() < 1e-20);
    assert_eq!(voltage_to_beam_tilt(0.0, &d).unwrap(), 0.0);
    assert!(voltage_to_beam_tilt(-1.0, &d).is_err());
}

#[test]
fn measured_table_is_self_consistent() {
    let d = SensorDriveModel::default();
    for m in MEASURED_PRECISION {
        let tilt = voltage_to_beam_tilt(m.min_voltage, &d).unwrap();
        // the N = 6 row disagrees with its own voltage by 0.55%
        let tol = if m.n_sensors == 6 { 6e-3 } else { 2e-3 };
        assert!((tilt / m.min_tilt - 1.0).abs() < tol, "N = {}", m.n_sensors);
    }
}

#[test]
fn snr_examples() {
    let c = chain();
    let noise = NoiseModel {
        noise_floor: 1e-6,
        jitter: 0.0,
    };
    assert_eq!(snr_model(0.0, &geom(3, 0.0), &noise, &c).unwrap(), 0.0);
    let r = snr_model(1e-9, &geom(2, 0.0), &noise, &c).unwrap() / snr_model(1e-9, &geom(1, 0.0), &noise, &c).unwrap();
    assert!((r - 3.0).abs() < 1e-12);
}

#[test]
fn calibrated_floor_gives_unit_snr() {
    let c = chain();
    let g = geom(1, 0.325);
    let phi = MEASURED_PRECISION[0].min_tilt;
    let noise = NoiseModel {
        noise_floor: calibrate_noise_floor(phi, &g, &c).unwrap(),
        jitter: 0.0,
    };
    assert!((snr_model(phi, &g, &noise, &c).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn noiseless_snr_fit_recovers_slope() {
    let c = chain();
    let d = SensorDriveModel::default();
    let g = geom(4, 0.325);
    let noise = NoiseModel {
        noise_floor: 3e-7,
        jitter: 0.0,
    };
    let samples: Vec<SnrSample> = (1..=10)
        .map(|i| {
            let v = i as f64 * 1e-3;
            SnrSample {
                n_sensors: 4,
                drive_voltage_pp: v,
                snr: snr_model(voltage_to_beam_tilt(v, &d).unwrap(), &g, &noise, &c).unwrap(),
                replicate_index: 0,
            }
        })
        .collect();
    let slope = samples[0].snr / samples[0].drive_voltage_pp;
    for free in [false, true] {
        let fit = fit_snr_vs_voltage(&samples, &d, free).unwrap();
        assert!((fit.slope / slope - 1.0).abs() < 1e-10);
        assert!(fit.intercept.abs() < 1e-9);
        assert!((fit.min_voltage * slope - 1.0).abs() < 1e-9);
        assert!((fit.min_tilt - voltage_to_beam_tilt(fit.min_voltage, &d).unwrap()).abs() < 1e-24);
    }
}

#[test]
fn snr_fit_errors() {
    let d = SensorDriveModel::default();
    let zero: Vec<SnrSample> = (1..=3)
        .map(|i| SnrSample {
            n_sensors: 1,
            drive_voltage_pp: i as f64,
            snr: 0.0,
            replicate_index: 0,
        })
        .collect();
    assert!(fit_snr_vs_voltage(&zero, &d, false).is_err());
    assert!(fit_snr_vs_voltage(&[], &d, false).is_err());
}

#[test]
fn measured_scaling_fit() {
    let fit = fit_scaling_law(&measured_points()).unwrap();
    assert!((fit.a / 4.77e-9 - 1.0).abs() < 0.03, "a = {}", fit.a);
    assert!((fit.b / 4.25 - 1.0).abs() < 0.05, "b = {}", fit.b);
    assert!(fit.r_squared >= 0.985, "R² = {}", fit.r_squared);
}

#[test]
fn synthetic_scaling_fit_is_exact() {
    let pts: Vec<(f64, f64)> = (1..=9).map(|n| (n as f64, 5.0 / ((n * n + 3 * n) as f64))).collect();
    let fit = fit_scaling_law(&pts).unwrap();
    assert!((fit.a - 5.0).abs() < 1e-9 * 5.0);
    assert!((fit.b - 3.0).abs() < 1e-9 * 3.0);
    assert!((fit.r_squared - 1.0).abs() < 1e-9);
    assert!((fit.heisenberg_comparison(2.0) - fit.a / (1.0 + 2.0 * fit.b)).abs() < 1e-15);
    assert!(fit.predict(9.0) < fit.heisenberg_comparison(9.0));
}

#[test]
fn scaling_fit_needs_three_counts() {
    assert!(fit_scaling_law(&[(1.0, 1.0), (2.0, 0.3)]).is_err());
    assert!(fit_scaling_law(&[(1.0, 1.0), (2.0, -0.3), (3.0, 0.1)]).is_err());
}

#[test]
fn noiseless_sweep_closes_the_loop() {
    let cfg = config(0.0, 1);
    let rep = end_to_end_sweep(&cfg).unwrap();
    assert_eq!(rep.samples.len(), 9 * 10 * 20);
    assert!((rep.scaling.r_squared - 1.0).abs() < 1e-9);
    // b ↔ 1 + 2 z_in/z̄, and N = 1 lands on the calibration tilt
    assert!((rep.scaling.b - (1.0 + 2.0 * 0.325 / 0.2)).abs() < 1e-9);
    let a = MEASURED_PRECISION[0].min_tilt * (1.0 + rep.scaling.b);
    assert!((rep.scaling.a / a - 1.0).abs() < 1e-9);
    assert_eq!(rep.qcrb.len(), 9 * SwitchMode::ALL.len());
}

#[test]
fn lead_in_sets_linear_coefficient() {
    let mut cfg = config(0.0, 1);
    cfg.z_in = 0.0;
    cfg.replicates = 1;
    let rep = end_to_end_sweep(&cfg).unwrap();
    assert!((rep.scaling.b - 1.0).abs() < 1e-9);
}

#[test]
fn jittered_sweep_is_deterministic() {
    let a = end_to_end_sweep(&config(0.05, 42)).unwrap();
    let b = end_to_end_sweep(&config(0.05, 42)).unwrap();
    assert_eq!(a, b);
    let c = end_to_end_sweep(&config(0.05, 43)).unwrap();
    assert_ne!(a.samples, c.samples);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let d = serial.install(|| end_to_end_sweep(&config(0.05, 42)).unwrap());
    assert_eq!(a, d);
}

#[test]
fn jitter_draws_shared_across_sensor_counts() {
    let noisy = end_to_end_sweep(&config(0.05, 7)).unwrap();
    let clean = end_to_end_sweep(&config(0.0, 7)).unwrap();
    let per_cell = 10 * 20;
    let factors: Vec<Vec<f64>> = noisy
        .samples
        .chunks(per_cell)
        .zip(clean.samples.chunks(per_cell))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.snr / y.snr).collect())
        .collect();
    for f in &factors[1..] {
        for (x, y) in f.iter().zip(&factors[0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    let mean = factors[0].iter().sum::<f64>() / per_cell as f64;
    assert!((mean - 1.0).abs() < 0.02);
    let fit = noisy.scaling;
    assert!(fit.r_squared > 0.98 && fit.b > 0.0);
}

#[test]
fn sweep_config_errors() {
    let mut cfg = config(0.0, 1);
    cfg.voltages = vec![1e-3];
    assert!(end_to_end_sweep(&cfg).is_err());
    let mut cfg = config(0.0, 1);
    cfg.noise.noise_floor = 0.0;
    assert!(end_to_end_sweep(&cfg).is_err());
}

proptest! {
    #[test]
    fn snr_monotone(n in 1usize..30, v in 1e-4f64..1e-1, z_in in 0.0f64..1.0) {
        let c = chain();
        let d = SensorDriveModel::default();
        let noise = NoiseModel { noise_floor: 1e-6, jitter: 0.0 };
        let phi = voltage_to_beam_tilt(v, &d).unwrap();
        let s = snr_model(phi, &geom(n, z_in), &noise, &c).unwrap();
        prop_assert!(snr_model(phi, &geom(n + 1, z_in), &noise, &c).unwrap() > s);
        let phi2 = voltage_to_beam_tilt(v * 1.01, &d).unwrap();
        prop_assert!(snr_model(phi2, &geom(n, z_in), &noise, &c).unwrap() > s);
    }
}
