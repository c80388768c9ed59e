//! One function per subcommand. Each computes everything first, then writes
//! its CSV and `meta.json` together, and returns the `results` block of the
//! metadata for printing.

use std::path::Path;

use cavity_eit::dynamics::{convergence_check, DensityMatrix};
use cavity_eit::hilbert::{Level, SpaceDims};
use cavity_eit::model::SystemParams;
use cavity_eit::sideband::{
    bsb_rabi_trace, fit_damped_sinusoid, run_cooling_sequence, sideband_ratio, RATIO_AVERAGE_SAMPLES,
};
use cavity_eit::spectrum::{
    analytic_spectrum, central_window, compare_thermal_nonthermal, default_grid, eit_linewidth_with, fit_lorentzian,
    linewidth_map_2d, sweep_spectrum_with, Spectrum, MAP_RATIO_REFERENCE,
};
use cavity_eit::thermometry::{
    build_calibration, collective_coupling, invert_linewidth, multiion_calibration, multiion_linewidth_scan,
    CalibrationCurve,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, fmt_opt, json_bytes, write_all, Csv};

pub const CALIBRATION_HEADER: &[&str] = &["temperature_k", "n_th", "nbar_steady", "fwhm_mhz"];

fn meta<C: Serialize>(command: &str, config: &C, resolved: Value, results: &Value) -> CliResult<Vec<u8>> {
    json_bytes(&json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "config": config,
        "resolved": resolved,
        "results": results,
    }))
}

fn normalization(s: &Spectrum) -> Value {
    json!({
        "reference": "empty_cavity_output",
        "definition": "epsilon^2 / kappa",
        "value": s.reference,
    })
}

fn spectrum_csv(s: &Spectrum) -> Vec<u8> {
    let mut csv = Csv::new(&["detuning_mhz", "transmission_raw", "transmission_normalized"]);
    for ((d, t), n) in s.detunings.iter().zip(&s.transmission).zip(s.normalized()) {
        csv.row(&[fmt_f64(*d), fmt_f64(*t), fmt_f64(n)]);
    }
    csv.into_bytes()
}

pub fn spectrum(cfg: &SpectrumConfig, dir: &Path) -> CliResult<Value> {
    cfg.validate()?;
    let grid = match &cfg.grid {
        Some(g) => g.values("grid")?,
        None => default_grid(&cfg.params),
    };
    let s = sweep_spectrum_with(&cfg.params, cfg.kind, &grid, cfg.method)?;
    let fit = cfg.fit.then(|| central_window(&s).and_then(|w| fit_lorentzian(&s, w)));
    let fit_json = match &fit {
        None => Value::Null,
        Some(Ok(f)) => json!(f),
        Some(Err(e)) => json!({ "error": e.to_string() }),
    };
    let convergence = if cfg.convergence_check {
        let (kind, method) = (cfg.kind, cfg.method);
        match convergence_check(&cfg.params, |q: &SystemParams| eit_linewidth_with(q, kind, method)) {
            Ok(r) => json!(r),
            Err(e) => json!({ "error": e.to_string() }),
        }
    } else {
        Value::Null
    };
    let peaks: Vec<f64> = s.local_maxima().iter().map(|&i| s.detunings[i]).collect();
    let results = json!({
        "fwhm_mhz": fit.as_ref().and_then(|f| f.as_ref().ok()).map(|f| f.fwhm),
        "fit": fit_json,
        "local_maxima_mhz": peaks,
    });
    let resolved = json!({
        "params": s.params,
        "method": s.method,
        "cutoffs": s.params.dims,
        "normalization": normalization(&s),
        "convergence": convergence,
    });
    write_all(dir, vec![("spectrum.csv", spectrum_csv(&s)), ("meta.json", meta("spectrum", cfg, resolved, &results)?)])?;
    Ok(results)
}

fn calibration_csv(c: &CalibrationCurve) -> Vec<u8> {
    let mut csv = Csv::new(CALIBRATION_HEADER);
    for i in 0..c.temps.len() {
        csv.row(&[fmt_f64(c.temps[i]), fmt_f64(c.n_th[i]), fmt_opt(c.nbar_steady[i]), fmt_opt(c.linewidths[i])]);
    }
    csv.into_bytes()
}

fn curve_summary(c: &CalibrationCurve) -> Value {
    let (a, b) = c.monotone_range;
    let failures: Vec<Value> = c
        .errors
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.as_ref().map(|e| json!({ "index": i, "temperature_k": c.temps[i], "error": e })))
        .collect();
    json!({
        "monotone_range": [a, b],
        "monotone_temperature_span_k": [c.temps[a], c.temps[b]],
        "monotone_fwhm_span_mhz": c.linewidth_span(),
        "failed_points": failures,
    })
}

pub fn calibrate(cfg: &CalibrateConfig, dir: &Path) -> CliResult<Value> {
    let temps = cfg.validate()?;
    let curve = build_calibration(&cfg.params, &temps, cfg.method)?;
    let results = curve_summary(&curve);
    let resolved = json!({
        "params": curve.params,
        "method": cfg.method,
        "phonon_cutoffs": curve.cutoffs,
        "cutoff_rule": "max(12, ceil(6 n_th))",
    });
    write_all(
        dir,
        vec![("calibration.csv", calibration_csv(&curve)), ("meta.json", meta("calibrate", cfg, resolved, &results)?)],
    )?;
    Ok(results)
}

fn parse_field(s: &str, line: usize) -> CliResult<Option<f64>> {
    if s == "nan" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| CliError::config(format!("calibration.csv line {line}: bad number {s:?}")))
}

/// Rebuilds a curve from the `calibration.csv` and `meta.json` of a
/// `calibrate` run.
pub fn load_calibration(dir: &Path) -> CliResult<CalibrationCurve> {
    let read = |name: &str| {
        std::fs::read_to_string(dir.join(name))
            .map_err(|e| CliError::config(format!("calibration_dir: cannot read {name}: {e}")))
    };
    let meta: Value = serde_json::from_str(&read("meta.json")?)
        .map_err(|e| CliError::config(format!("calibration_dir: meta.json: {e}")))?;
    let params: SystemParams = serde_json::from_value(meta["resolved"]["params"].clone())
        .map_err(|e| CliError::config(format!("calibration_dir: meta.json resolved.params: {e}")))?;
    let text = read("calibration.csv")?;
    let mut lines = text.lines();
    if lines.next() != Some(CALIBRATION_HEADER.join(",").as_str()) {
        return Err(CliError::config("calibration.csv: unexpected header"));
    }
    let (mut temps, mut nbar, mut fwhm, mut errors) = (vec![], vec![], vec![], vec![]);
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CALIBRATION_HEADER.len() {
            return Err(CliError::config(format!("calibration.csv line {}: expected 4 fields", k + 2)));
        }
        let t = parse_field(f[0], k + 2)?.ok_or_else(|| CliError::config("calibration.csv: missing temperature"))?;
        let w = parse_field(f[3], k + 2)?;
        temps.push(t);
        nbar.push(parse_field(f[2], k + 2)?);
        errors.push(w.is_none().then(|| "no linewidth recorded".to_string()));
        fwhm.push(w);
    }
    CalibrationCurve::assemble(params, temps, nbar, fwhm, errors)
        .map_err(|e| CliError::config(format!("calibration_dir: {e}")))
}

pub fn invert(cfg: &InvertConfig, dir: &Path) -> CliResult<Value> {
    cfg.validate()?;
    let curve = match &cfg.calibration_dir {
        Some(d) => load_calibration(d)?,
        None => build_calibration(&cfg.params, &cfg.temperatures.values("temperatures")?, cfg.method)?,
    };
    let inv = invert_linewidth(&curve, cfg.measured_fwhm_mhz)?;
    let results = json!({
        "measured_fwhm_mhz": cfg.measured_fwhm_mhz,
        "temperature_k": inv.temperature,
        "nbar": inv.nbar,
        "sensitivity_k_per_mhz": inv.sensitivity,
        "low_sensitivity": inv.low_sensitivity,
        "curve": curve_summary(&curve),
    });
    let resolved = json!({ "params": curve.params, "method": cfg.method });
    write_all(dir, vec![("inversion.json", json_bytes(&results)?), ("meta.json", meta("invert", cfg, resolved, &results)?)])?;
    Ok(results)
}

pub fn map2d(cfg: &Map2dConfig, dir: &Path) -> CliResult<Value> {
    let (g, oc) = cfg.validate()?;
    let cells = linewidth_map_2d(&cfg.params, &g, &oc, &cfg.n_th, cfg.method)?;
    let mut csv = Csv::new(&["g_mhz", "omega_c_mhz", "n_th", "fwhm_mhz", "fwhm_ratio"]);
    for c in &cells {
        csv.row(&[fmt_f64(c.g), fmt_f64(c.omega_c), fmt_f64(c.n_th), fmt_opt(c.fwhm), fmt_opt(c.fwhm_ratio)]);
    }
    let failed: Vec<Value> = cells
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| json!({ "g": c.g, "omega_c": c.omega_c, "n_th": c.n_th, "error": e })))
        .collect();
    let results = json!({ "cells": cells.len(), "failed_cells": failed });
    let resolved = json!({
        "params": cfg.params,
        "method": cfg.method,
        "cutoff_rule": "n_phonon raised to max(12, ceil(6 n_th))",
        "ratio_reference": MAP_RATIO_REFERENCE,
        "ratio_denominator_mhz": 2.0 * cfg.params.kappa,
    });
    write_all(dir, vec![("map2d.csv", csv.into_bytes()), ("meta.json", meta("map2d", cfg, resolved, &results)?)])?;
    Ok(results)
}

pub fn multiion(cfg: &MultiIonConfig, dir: &Path) -> CliResult<Value> {
    let temps = cfg.validate()?;
    let rows = multiion_linewidth_scan(&cfg.params, &cfg.n_ions, cfg.method)?;
    let mut csv = Csv::new(&["n_ions", "g_eff_mhz", "fwhm_mhz", "fwhm_ratio"]);
    for r in &rows {
        csv.row(&[
            r.n_ions.to_string(),
            fmt_f64(collective_coupling(cfg.params.g, r.n_ions)),
            fmt_opt(r.fwhm),
            fmt_opt(r.fwhm_ratio),
        ]);
    }
    let mut files = vec![("multiion.csv", csv.into_bytes())];
    let mut curves = Vec::new();
    if let Some(temps) = &temps {
        let mut csv = Csv::new(&["n_ions", "temperature_k", "n_th", "nbar_steady", "fwhm_mhz"]);
        for (n, curve) in multiion_calibration(&cfg.params, &cfg.n_ions, temps, cfg.method)? {
            match curve {
                Ok(c) => {
                    for i in 0..c.temps.len() {
                        csv.row(&[
                            n.to_string(),
                            fmt_f64(c.temps[i]),
                            fmt_f64(c.n_th[i]),
                            fmt_opt(c.nbar_steady[i]),
                            fmt_opt(c.linewidths[i]),
                        ]);
                    }
                    curves.push(json!({ "n_ions": n, "curve": curve_summary(&c) }));
                }
                Err(e) => curves.push(json!({ "n_ions": n, "error": e.to_string() })),
            }
        }
        files.push(("multiion_calibration.csv", csv.into_bytes()));
    }
    let results = json!({ "rows": rows, "calibrations": curves });
    let resolved = json!({
        "params": cfg.params,
        "method": cfg.method,
        "ratio_reference": MAP_RATIO_REFERENCE,
    });
    files.push(("meta.json", meta("multiion", cfg, resolved, &results)?));
    write_all(dir, files)?;
    Ok(results)
}

pub fn compare(cfg: &CompareConfig, dir: &Path) -> CliResult<Value> {
    let oc = cfg.validate()?;
    let rows = compare_thermal_nonthermal(&cfg.params, &oc, &cfg.temperatures_k, cfg.method)?;
    let mut csv = Csv::new(&["omega_c_mhz", "model", "temperature_k", "fwhm_mhz"]);
    for r in &rows {
        let oc = fmt_f64(r.omega_c);
        csv.row(&[oc.clone(), "analytic".into(), "nan".into(), fmt_opt(r.analytic_fwhm)]);
        csv.row(&[oc.clone(), "non_thermal".into(), "nan".into(), fmt_opt(r.nonthermal_fwhm)]);
        for (t, w) in cfg.temperatures_k.iter().zip(&r.thermal_fwhm) {
            csv.row(&[oc.clone(), "thermal".into(), fmt_f64(*t), fmt_opt(*w)]);
        }
    }
    let results = json!({ "rows": rows });
    let resolved = json!({ "params": cfg.params, "method": cfg.method });
    write_all(dir, vec![("compare.csv", csv.into_bytes()), ("meta.json", meta("compare", cfg, resolved, &results)?)])?;
    Ok(results)
}

pub fn analytic(cfg: &AnalyticConfig, dir: &Path) -> CliResult<Value> {
    cfg.validate()?;
    let grid = match &cfg.grid {
        Some(g) => g.values("grid")?,
        None => default_grid(&cfg.params),
    };
    let s = analytic_spectrum(&cfg.params, &grid)?;
    let mut csv = Csv::new(&["detuning_mhz", "transmission_normalized"]);
    for (d, t) in s.detunings.iter().zip(&s.transmission) {
        csv.row(&[fmt_f64(*d), fmt_f64(*t)]);
    }
    let fwhm = central_window(&s).and_then(|w| fit_lorentzian(&s, w));
    let results = match &fwhm {
        Ok(f) => json!({ "fwhm_mhz": f.fwhm, "fit": f }),
        Err(e) => json!({ "fwhm_mhz": null, "fit": { "error": e.to_string() } }),
    };
    let resolved = json!({
        "params": cfg.params,
        "transmission": "kappa^2 / |(delta + i kappa) - g_eff^2 chi|^2",
    });
    write_all(dir, vec![("analytic.csv", csv.into_bytes()), ("meta.json", meta("analytic", cfg, resolved, &results)?)])?;
    Ok(results)
}

pub fn sideband_rabi(cfg: &RabiConfig, dir: &Path) -> CliResult<Value> {
    let times = cfg.validate()?;
    let pe = bsb_rabi_trace(cfg.eta, cfg.omega, cfg.gamma, cfg.n0, &times)?;
    let mut csv = Csv::new(&["time_us", "p_e"]);
    for (t, p) in times.iter().zip(&pe) {
        csv.row(&[fmt_f64(*t), fmt_f64(*p)]);
    }
    let expected = cfg.eta * cfg.omega * ((cfg.n0 + 1) as f64).sqrt();
    let results = match fit_damped_sinusoid(&times, &pe) {
        Ok(f) => json!({
            "rabi_frequency_mhz": f.rabi_frequency(),
            "expected_mhz": expected,
            "fit": f,
        }),
        Err(e) => json!({ "rabi_frequency_mhz": null, "expected_mhz": expected, "fit": { "error": e.to_string() } }),
    };
    let resolved = json!({ "n_phonon": cfg.n0 + 12, "decay_channel": "sigma_ue" });
    write_all(
        dir,
        vec![("sideband_trace.csv", csv.into_bytes()), ("meta.json", meta("sideband rabi", cfg, resolved, &results)?)],
    )?;
    Ok(results)
}

pub fn sideband_ratio_scan(cfg: &RatioConfig, dir: &Path) -> CliResult<Value> {
    cfg.validate()?;
    let mut csv = Csv::new(&[
        "n",
        "pulse_time_us",
        "p_rsb",
        "p_bsb",
        "ratio",
        "p_rsb_avg",
        "p_bsb_avg",
        "ratio_avg",
        "expected",
    ]);
    let mut worst: f64 = 0.0;
    for n in 1..=cfg.n_max {
        let r = sideband_ratio(n, cfg.eta, cfg.omega, cfg.gamma, cfg.pulse_time_us)?;
        worst = worst.max((r.ratio / r.expected - 1.0).abs());
        csv.row(&[
            n.to_string(),
            fmt_f64(r.pulse_time),
            fmt_f64(r.p_rsb),
            fmt_f64(r.p_bsb),
            fmt_f64(r.ratio),
            fmt_f64(r.p_rsb_avg),
            fmt_f64(r.p_bsb_avg),
            fmt_f64(r.ratio_avg),
            fmt_f64(r.expected),
        ]);
    }
    let results = json!({ "max_relative_deviation": worst });
    let resolved = json!({
        "pulse_time": if cfg.pulse_time_us.is_some() { "fixed" } else { "bsb_pi_time_per_n" },
        "average_samples": RATIO_AVERAGE_SAMPLES,
    });
    write_all(
        dir,
        vec![("sideband_ratio.csv", csv.into_bytes()), ("meta.json", meta("sideband ratio", cfg, resolved, &results)?)],
    )?;
    Ok(results)
}

pub fn sideband_cool(cfg: &CoolConfig, dir: &Path) -> CliResult<Value> {
    cfg.validate()?;
    let dims = SpaceDims::sideband(cfg.n_phonon)?;
    let rho0 = DensityMatrix::basis_state(dims, dims.index(Level::U.index(), 0, cfg.initial_phonon));
    let tr = run_cooling_sequence(&cfg.sequence, &rho0, cfg.samples_per_step)?;
    let labels = tr.labels();
    let mut header = vec!["time_us"];
    header.extend(labels.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for (t, pops) in tr.times.iter().zip(&tr.populations) {
        let mut row = vec![fmt_f64(*t)];
        row.extend(pops.iter().map(|&p| fmt_f64(p)));
        csv.row(&row);
    }
    let k = tr.last();
    let top = cfg.n_phonon - 1;
    let results = json!({
        "final_time_us": tr.times[k],
        "final_ground_population": tr.population(k, Level::U, 0),
        "final_mean_phonon": tr.mean_phonon(k),
        "final_top_level_population": tr.population(k, Level::U, top) + tr.population(k, Level::E, top),
    });
    let resolved = json!({ "n_phonon": cfg.n_phonon, "decay_channel": "sigma_ue" });
    write_all(
        dir,
        vec![("sideband_trace.csv", csv.into_bytes()), ("meta.json", meta("sideband cool", cfg, resolved, &results)?)],
    )?;
    Ok(results)
}
