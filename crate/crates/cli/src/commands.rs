use std::path::Path;

use serde::Serialize;
use switchsense::experiment::{
    end_to_end_sweep, fit_scaling_law, measured_points, SweepConfig, MEASURED_PRECISION,
};
use switchsense::fisher::{qcrb_for, switch_scaled_limit, GeneratorMoments, QcrbReport};
use switchsense::network::KickVector;
use switchsense::wva::{
    min_detectable_tilt, momentum_readout, predicted_mean_momentum, qpd_signal, waveplate_compensation,
    weak_value, wva_final_probe, wva_final_probe_with_phase, DetectionLimit, MomentumReadout, QpdSignal,
    WvaMethod, SMALL_SIGNAL_GUARD,
};
use switchsense::{make_gaussian, moments};

use crate::config::{DataSource, RunConfig};
use crate::oracle::{self, CheckResult};
use crate::output::{prepare_dir, sci, write_csv, write_json};
use crate::{CliError, Outcome};

const QCRB_HEADER: [&str; 5] = ["N", "mode", "qcrb", "qcrb_times_N4", "per_shot_precision"];

fn qcrb_rows(reports: &[QcrbReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.n_sensors.to_string(),
                r.strategy.as_str().to_string(),
                sci(r.bound),
                sci(r.scaled_bound),
                sci(r.precision),
            ]
        })
        .collect()
}

pub fn qcrb_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let spec = cfg.probe_spec()?;
    let mut reports = Vec::new();
    for n in cfg.qcrb.n_min..=cfg.qcrb.n_max {
        let gm = GeneratorMoments::gaussian(&spec, &cfg.geometry(n)?);
        for &mode in &cfg.qcrb.modes {
            reports.push(qcrb_for(mode, &gm, cfg.qcrb.trials)?);
        }
    }
    prepare_dir(out, cfg)?;
    write_csv(&out.join("qcrb_sweep.csv"), &QCRB_HEADER, &qcrb_rows(&reports))?;
    let limit = switch_scaled_limit(&GeneratorMoments::gaussian(&spec, &cfg.geometry(1)?));
    println!("rows={} switch_limit_N4={}", reports.len(), sci(limit));
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct OracleReport<'a> {
    passed: usize,
    failed: usize,
    checks: &'a [CheckResult],
}

pub fn oracle_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let checks = oracle::run_all(cfg);
    let failed = checks.iter().filter(|c| !c.pass).count();
    prepare_dir(out, cfg)?;
    let report = OracleReport {
        passed: checks.len() - failed,
        failed,
        checks: &checks,
    };
    write_json(&out.join("oracle_report.json"), &report)?;
    for c in checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "FAIL {} rel_error={} tol={} {}",
            c.name,
            c.rel_error,
            c.tolerance,
            c.detail.as_deref().unwrap_or("")
        );
    }
    println!("checks={} failed={failed}", checks.len());
    Ok(if failed == 0 {
        Outcome::Success
    } else {
        Outcome::ChecksFailed
    })
}

#[derive(Serialize)]
struct PerN {
    n_sensors: usize,
    min_voltage: f64,
    min_tilt: f64,
}

#[derive(Serialize)]
struct ScalingReport {
    source: DataSource,
    a: f64,
    b: f64,
    r_squared: f64,
    noise_floor: f64,
    per_n: Vec<PerN>,
}

fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig, CliError> {
    let e = &cfg.experiment;
    Ok(SweepConfig {
        n_sensors: e.n_sensors.clone(),
        voltages: e.voltages.clone(),
        replicates: e.replicates,
        seed: cfg.seed,
        zbar: cfg.geometry.zbar,
        z_in: cfg.geometry.z_in,
        z_out: cfg.geometry.z_out,
        chain: cfg.signal_chain()?,
        drive: e.drive,
        noise: cfg.noise_model()?,
        free_intercept: e.free_intercept,
        modes: cfg.qcrb.modes.clone(),
        trials: cfg.qcrb.trials,
    })
}

pub fn reproduce_experiment(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let sweep = sweep_config(cfg)?;
    let report = end_to_end_sweep(&sweep)?;

    let (fit, per_n) = match cfg.experiment.source {
        DataSource::Synthetic => (
            report.scaling,
            report
                .per_n
                .iter()
                .map(|p| PerN {
                    n_sensors: p.n_sensors,
                    min_voltage: p.fit.min_voltage,
                    min_tilt: p.fit.min_tilt,
                })
                .collect::<Vec<_>>(),
        ),
        DataSource::Measured => (
            fit_scaling_law(&measured_points())?,
            MEASURED_PRECISION
                .iter()
                .map(|m| PerN {
                    n_sensors: m.n_sensors,
                    min_voltage: m.min_voltage,
                    min_tilt: m.min_tilt,
                })
                .collect(),
        ),
    };

    prepare_dir(out, cfg)?;
    let rows: Vec<Vec<String>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                s.n_sensors.to_string(),
                sci(s.drive_voltage_pp),
                s.replicate_index.to_string(),
                sci(s.snr),
            ]
        })
        .collect();
    write_csv(&out.join("snr_sweep.csv"), &["N", "voltage", "replicate", "snr"], &rows)?;

    let n_lo = per_n.iter().map(|p| p.n_sensors).min().unwrap_or(1) as f64;
    let n_hi = per_n.iter().map(|p| p.n_sensors).max().unwrap_or(1) as f64;
    let m = cfg.experiment.curve_points;
    let ns: Vec<f64> = (0..m)
        .map(|i| n_lo + (n_hi - n_lo) * i as f64 / (m - 1) as f64)
        .collect();
    let curve = |f: &dyn Fn(f64) -> f64| -> Vec<Vec<String>> {
        ns.iter().map(|&n| vec![sci(n), sci(f(n))]).collect()
    };
    write_csv(&out.join("fitted_curve.csv"), &["N", "min_tilt"], &curve(&|n| fit.predict(n)))?;
    write_csv(
        &out.join("heisenberg_curve.csv"),
        &["N", "min_tilt"],
        &curve(&|n| fit.heisenberg_comparison(n)),
    )?;
    write_csv(&out.join("qcrb.csv"), &QCRB_HEADER, &qcrb_rows(&report.qcrb))?;
    write_json(
        &out.join("scaling_fit.json"),
        &ScalingReport {
            source: cfg.experiment.source,
            a: fit.a,
            b: fit.b,
            r_squared: fit.r_squared,
            noise_floor: sweep.noise.noise_floor,
            per_n,
        },
    )?;
    println!(
        "samples={} a={} b={} r_squared={}",
        report.samples.len(),
        sci(fit.a),
        sci(fit.b),
        sci(fit.r_squared)
    );
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct WvaPoint {
    n_sensors: usize,
    theta_bar: f64,
    phi_bar: f64,
    method: WvaMethod,
    epsilon: f64,
    weak_value_re: f64,
    weak_value_im: f64,
    delta_theta: f64,
    compensated: bool,
    success_probability: f64,
    mean_p: f64,
    spread_p: f64,
    predicted_mean_p: f64,
    readout: MomentumReadout,
    qpd: QpdSignal,
    detection_limit: DetectionLimit,
}

pub fn wva_sim(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let w = &cfg.wva;
    let spec = cfg.probe_spec()?;
    let ps = cfg.post_selection()?;
    let rm = cfg.readout_model()?;
    let geom = cfg.geometry(w.n_sensors)?;
    let aw = weak_value(&ps)?;

    let n = w.n_sensors as f64;
    let theta = match w.theta_bar {
        Some(t) => t,
        None => {
            let amp = SMALL_SIGNAL_GUARD / (aw.norm() * geom.zbar() / (2.0 * geom.k) * n * n * spec.delta_p());
            let kick = SMALL_SIGNAL_GUARD / (n * spec.delta_x());
            0.1 * amp.min(kick)
        }
    };
    let phased = w.delta_theta != 0.0 || w.compensate;
    if phased && w.method == WvaMethod::FirstOrder {
        return Err(CliError::Config(
            "wva.method: an interferometer phase needs exact-grid".into(),
        ));
    }

    let grid = cfg.grid_for(spec.w0, spec.k, geom.z_tot())?;
    let psi = make_gaussian(&spec, &grid)?;
    let var_p = moments(&psi)?.var_p;
    let kicks = KickVector::uniform(w.n_sensors, theta);
    let outcome = if phased {
        let comp = w.compensate.then(|| waveplate_compensation(w.delta_theta));
        wva_final_probe_with_phase(&psi, &geom, &kicks, &ps, w.delta_theta, comp.as_ref())?
    } else {
        wva_final_probe(&psi, &geom, &kicks, &ps, w.method)?
    };
    let m = moments(&outcome.probe)?;
    let point = WvaPoint {
        n_sensors: w.n_sensors,
        theta_bar: theta,
        phi_bar: theta / geom.k,
        method: w.method,
        epsilon: ps.epsilon,
        weak_value_re: aw.re,
        weak_value_im: aw.im,
        delta_theta: w.delta_theta,
        compensated: w.compensate,
        success_probability: outcome.success_probability,
        mean_p: m.mean_p,
        spread_p: m.var_p.sqrt(),
        predicted_mean_p: predicted_mean_momentum(&geom, var_p, &ps, theta),
        readout: momentum_readout(&outcome.probe, &rm, geom.k)?,
        qpd: qpd_signal(theta / geom.k, &geom, &spec, &ps, &rm)?,
        detection_limit: min_detectable_tilt(&geom, &spec, &ps)?,
    };

    prepare_dir(out, cfg)?;
    write_json(&out.join("wva_point.json"), &point)?;
    // momentum density in ascending p, which is what the lens maps onto the quadcell
    let amps = outcome.probe.momentum_amplitudes();
    let mut rows: Vec<(f64, f64)> = grid
        .ps()
        .into_iter()
        .zip(amps.iter().map(|a| a.norm_sqr()))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rows: Vec<Vec<String>> = rows.into_iter().map(|(p, d)| vec![sci(p), sci(d)]).collect();
    write_csv(&out.join("final_probe.csv"), &["p", "density"], &rows)?;
    println!(
        "mean_p={} predicted={} success={}",
        sci(point.mean_p),
        sci(point.predicted_mean_p),
        sci(point.success_probability)
    );
    Ok(Outcome::Success)
}
