//! Temperature, mean phonon number and linewidth conversions, calibration
//! curves and their inversion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_liouvillian, evolve, expect, steady_state, DensityMatrix, EvolveOptions};
use crate::error::{Error, Result};
use crate::hilbert::{build_space, Level, OperatorMatrix, SpaceDims};
use crate::model::{phonon_channels, Channel, ModelKind, SystemParams};
use crate::spectrum::{eit_linewidth_with, steady_occupations, SweepMethod};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// `ħω/k_B` in kelvin for a secular frequency in MHz (ω = 2π·f).
pub fn quantum_temperature(omega_sec: f64) -> f64 {
    HBAR * 2.0 * std::f64::consts::PI * omega_sec * 1e6 / K_B
}

fn check_omega(omega_sec: f64) -> Result<()> {
    if !(omega_sec > 0.0 && omega_sec.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega_sec must be positive, got {omega_sec}")));
    }
    Ok(())
}

/// Bose occupation `1/(exp(ħω/k_B T) − 1)`.
pub fn nbar_from_temperature(t: f64, omega_sec: f64) -> Result<f64> {
    check_omega(omega_sec)?;
    if !(t > 0.0) {
        return Err(Error::NonPositiveTemperature(t));
    }
    Ok(1.0 / (quantum_temperature(omega_sec) / t).exp_m1())
}

/// Exact inverse of [`nbar_from_temperature`].
pub fn temperature_from_nbar(nbar: f64, omega_sec: f64) -> Result<f64> {
    check_omega(omega_sec)?;
    if !(nbar > 0.0) || !nbar.is_finite() {
        return Err(Error::GroundState(nbar));
    }
    Ok(quantum_temperature(omega_sec) / (1.0 / nbar).ln_1p())
}

/// Collective coupling `g √N` of `n_ions` identically coupled ions.
pub fn collective_coupling(g: f64, n_ions: u32) -> f64 {
    g * f64::from(n_ions).sqrt()
}

/// Log-spaced temperatures from `lo` to `hi` (K) with `per_decade` points per
/// decade; both ends included.
pub fn log_temperature_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || per_decade == 0 {
        return Err(Error::InvalidParameter(format!("bad temperature span [{lo}, {hi}] or density {per_decade}")));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    Ok((0..=steps).map(|k| lo * 10f64.powf(decades * k as f64 / steps as f64)).collect())
}

pub const DEFAULT_T_MIN: f64 = 10e-6;
pub const DEFAULT_T_MAX: f64 = 10e-3;
pub const DEFAULT_POINTS_PER_DECADE: usize = 24;

/// 24 points per decade over 10 μK – 10 mK.
pub fn default_temperature_grid() -> Vec<f64> {
    log_temperature_grid(DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_POINTS_PER_DECADE).expect("valid constants")
}

/// Phonon cutoff used for a bath occupancy: `max(12, ⌈6 n_th⌉)`.
pub fn calibration_cutoff(n_th: f64) -> usize {
    12usize.max((6.0 * n_th).ceil() as usize)
}

pub const MIN_CALIBRATION_POINTS: usize = 8;
pub const MIN_MONOTONE_POINTS: usize = 4;

/// Linewidth versus temperature at otherwise fixed parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationCurve {
    /// Parameter snapshot; `n_th` and the phonon cutoff vary per point.
    pub params: SystemParams,
    pub temps: Vec<f64>,
    /// Bath occupancy set from each temperature.
    pub n_th: Vec<f64>,
    /// Steady-state `⟨b†b⟩` at zero probe detuning.
    pub nbar_steady: Vec<Option<f64>>,
    pub linewidths: Vec<Option<f64>>,
    pub cutoffs: Vec<usize>,
    pub errors: Vec<Option<String>>,
    /// Inclusive index span over which the linewidth is strictly increasing.
    pub monotone_range: (usize, usize),
}

impl CalibrationCurve {
    /// Monotone part as `(temperature, linewidth)` pairs.
    pub fn monotone_points(&self) -> Vec<(f64, f64)> {
        let (a, b) = self.monotone_range;
        (a..=b).map(|i| (self.temps[i], self.linewidths[i].expect("monotone points are valid"))).collect()
    }

    /// Builds a curve from per-temperature results, recomputing `n_th`, the
    /// cutoffs and the monotone range.
    pub fn assemble(
        params: SystemParams,
        temps: Vec<f64>,
        nbar_steady: Vec<Option<f64>>,
        linewidths: Vec<Option<f64>>,
        errors: Vec<Option<String>>,
    ) -> Result<Self> {
        let n = temps.len();
        if nbar_steady.len() != n || linewidths.len() != n || errors.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: linewidths.len() });
        }
        if temps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("temperature grid must be strictly increasing".into()));
        }
        let n_th = temps.iter().map(|&t| nbar_from_temperature(t, params.omega_sec)).collect::<Result<Vec<_>>>()?;
        let monotone_range = longest_increasing_run(&linewidths)
            .filter(|(a, b)| b - a + 1 >= MIN_MONOTONE_POINTS)
            .ok_or_else(|| Error::Calibration(format!("monotone range shorter than {MIN_MONOTONE_POINTS} points")))?;
        Ok(Self {
            params,
            temps,
            cutoffs: n_th.iter().map(|&x| calibration_cutoff(x)).collect(),
            n_th,
            nbar_steady,
            linewidths,
            errors,
            monotone_range,
        })
    }

    /// Linewidth span covered by the monotone range.
    pub fn linewidth_span(&self) -> (f64, f64) {
        let pts = self.monotone_points();
        (pts[0].1, pts[pts.len() - 1].1)
    }
}

/// Longest run of consecutive valid points with strictly increasing values.
fn longest_increasing_run(values: &[Option<f64>]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    for (i, value) in values.iter().enumerate() {
        start = match (value, start) {
            (None, _) => None,
            (Some(v), Some(s)) if values[i - 1].is_some_and(|prev| *v > prev) => Some(s),
            (Some(_), _) => Some(i),
        };
        if let Some(s) = start {
            if best.is_none_or(|(a, b)| i - s > b - a) {
                best = Some((s, i));
            }
        }
    }
    best
}

/// Linewidth and steady phonon number at one bath occupancy.
pub fn calibration_point(p: &SystemParams, n_th: f64, method: SweepMethod) -> Result<(f64, f64)> {
    let mut q = SystemParams { n_th, delta_p: 0.0, ..p.clone() };
    q.dims.n_phonon = calibration_cutoff(n_th);
    let fwhm = eit_linewidth_with(&q, ModelKind::Thermal, method)?;
    let (_, nbar) = steady_occupations(&q, ModelKind::Thermal, method)?;
    Ok((fwhm, nbar))
}

/// Simulates every temperature of `temps` (K, strictly increasing, at least
/// eight). Failing points are kept with their error; the curve is rejected if
/// its monotone part has fewer than four points.
pub fn build_calibration(p: &SystemParams, temps: &[f64], method: SweepMethod) -> Result<CalibrationCurve> {
    p.validate()?;
    if temps.len() < MIN_CALIBRATION_POINTS {
        return Err(Error::TooFewSamples { found: temps.len(), needed: MIN_CALIBRATION_POINTS });
    }
    if temps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("temperature grid must be strictly increasing".into()));
    }
    let n_th = temps.iter().map(|&t| nbar_from_temperature(t, p.omega_sec)).collect::<Result<Vec<_>>>()?;
    let points: Vec<Result<(f64, f64)>> = n_th.par_iter().map(|&n| calibration_point(p, n, method)).collect();
    let mut linewidths = Vec::with_capacity(points.len());
    let mut nbar_steady = Vec::with_capacity(points.len());
    let mut errors = Vec::with_capacity(points.len());
    for r in points {
        match r {
            Ok((w, nb)) => {
                linewidths.push(Some(w));
                nbar_steady.push(Some(nb));
                errors.push(None);
            }
            Err(e) => {
                linewidths.push(None);
                nbar_steady.push(None);
                errors.push(Some(e.to_string()));
            }
        }
    }
    CalibrationCurve::assemble(p.clone(), temps.to_vec(), nbar_steady, linewidths, errors)
}

/// Sensitivity above which an inversion is flagged: the curve is too flat for
/// the linewidth to pin the temperature (K per MHz).
pub const LOW_SENSITIVITY_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inversion {
    pub temperature: f64,
    pub nbar: f64,
    /// Local `dT/dFWHM` in K/MHz.
    pub sensitivity: f64,
    pub low_sensitivity: bool,
}

/// Piecewise-linear inversion of the monotone part of `curve`.
pub fn invert_linewidth(curve: &CalibrationCurve, measured_fwhm: f64) -> Result<Inversion> {
    let pts = curve.monotone_points();
    let (lo, hi) = (pts[0].1, pts[pts.len() - 1].1);
    if !(measured_fwhm >= lo && measured_fwhm <= hi) {
        return Err(Error::OutOfRange { value: measured_fwhm, lo, hi });
    }
    let k = pts.windows(2).position(|w| measured_fwhm <= w[1].1).expect("inside span");
    let ((t0, w0), (t1, w1)) = (pts[k], pts[k + 1]);
    let sensitivity = (t1 - t0) / (w1 - w0);
    let temperature = t0 + (measured_fwhm - w0) * sensitivity;
    Ok(Inversion {
        temperature,
        nbar: nbar_from_temperature(temperature, curve.params.omega_sec)?,
        sensitivity,
        low_sensitivity: sensitivity > LOW_SENSITIVITY_THRESHOLD,
    })
}

/// Initial slope of `⟨b†b⟩` from the motional ground state under the bath
/// alone, with the two candidate closed forms next to it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatingRate {
    /// quanta/μs
    pub slope: f64,
    pub gamma_b_n_th: f64,
    pub twice_gamma_b_n_th: f64,
}

impl HeatingRate {
    /// `c` in `slope = c·γ_b·n_th` when one candidate matches within `rtol`.
    pub fn convention(&self, rtol: f64) -> Option<u8> {
        if self.gamma_b_n_th == 0.0 {
            return None;
        }
        let c = self.slope / self.gamma_b_n_th;
        [1u8, 2].into_iter().find(|&k| (c / f64::from(k) - 1.0).abs() < rtol)
    }
}

pub fn heating_rate(p: &SystemParams) -> Result<HeatingRate> {
    p.validate()?;
    let candidates = |slope| HeatingRate {
        slope,
        gamma_b_n_th: p.gamma_b * p.n_th,
        twice_gamma_b_n_th: 2.0 * p.gamma_b * p.n_th,
    };
    if p.gamma_b == 0.0 || p.n_th == 0.0 {
        return Ok(candidates(0.0));
    }
    let dims = SpaceDims::new(2, 1, 4)?;
    let ops = build_space(dims)?;
    let l = build_liouvillian(&OperatorMatrix::zeros(dims), &phonon_channels(&ops, p.gamma_b, p.n_th))?;
    // A step far shorter than 1/γ_b keeps the curvature correction below 1e-5.
    let dt = 1e-5 / p.gamma_b;
    let traj = evolve(&l, &DensityMatrix::basis_state(dims, 0), &[dt], EvolveOptions::default())?;
    let n = expect(&ops.phonon_number(), &traj[0])?.re;
    Ok(candidates(n / dt))
}

/// Phonon-bath steady state `⟨b†b⟩` with the cutoff doubled from
/// [`calibration_cutoff`] until the value moves by less than `rtol`.
pub fn thermal_occupancy(gamma_b: f64, n_th: f64, rtol: f64) -> Result<(f64, usize)> {
    if !(gamma_b > 0.0) {
        return Err(Error::InvalidParameter("gamma_b must be positive".into()));
    }
    let value = |cutoff: usize| -> Result<f64> {
        let dims = SpaceDims::new(2, 1, cutoff)?;
        let ops = build_space(dims)?;
        let mut ch = phonon_channels(&ops, gamma_b, n_th).to_vec();
        // The atom is a spectator here; pinning it keeps the steady state unique.
        ch.push(Channel { label: "pin", op: ops.sigma(Level::U, Level::E).clone(), rate: 1.0 });
        let rho = steady_state(&build_liouvillian(&OperatorMatrix::zeros(dims), &ch)?)?;
        Ok(expect(&ops.phonon_number(), &rho)?.re)
    };
    let mut cutoff = calibration_cutoff(n_th);
    let mut prev = value(cutoff)?;
    for _ in 0..6 {
        let next = value(2 * cutoff)?;
        cutoff *= 2;
        if (next - prev).abs() <= rtol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok((next, cutoff));
        }
        prev = next;
    }
    Err(Error::NotConverged { residual: f64::NAN })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiIonRow {
    pub n_ions: u32,
    pub fwhm: Option<f64>,
    /// FWHM over the empty-cavity width `2κ`.
    pub fwhm_ratio: Option<f64>,
    pub error: Option<String>,
}

fn check_ion_list(n_ions: &[u32]) -> Result<()> {
    if n_ions.is_empty() || n_ions[0] == 0 || n_ions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("ion counts must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Thermal-model linewidth for each ion number.
pub fn multiion_linewidth_scan(p: &SystemParams, n_ions: &[u32], method: SweepMethod) -> Result<Vec<MultiIonRow>> {
    check_ion_list(n_ions)?;
    let reference = 2.0 * p.kappa;
    Ok(n_ions
        .par_iter()
        .map(|&n| match eit_linewidth_with(&SystemParams { n_ions: n, ..p.clone() }, ModelKind::Thermal, method) {
            Ok(w) => MultiIonRow { n_ions: n, fwhm: Some(w), fwhm_ratio: Some(w / reference), error: None },
            Err(e) => MultiIonRow { n_ions: n, fwhm: None, fwhm_ratio: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// One calibration curve per ion number.
pub fn multiion_calibration(
    p: &SystemParams,
    n_ions: &[u32],
    temps: &[f64],
    method: SweepMethod,
) -> Result<Vec<(u32, Result<CalibrationCurve>)>> {
    check_ion_list(n_ions)?;
    Ok(n_ions.iter().map(|&n| (n, build_calibration(&SystemParams { n_ions: n, ..p.clone() }, temps, method))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bose_factor_limits() {
        let t0 = quantum_temperature(1.0);
        let n = nbar_from_temperature(t0 / std::f64::consts::LN_2, 1.0).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(nbar_from_temperature(1e-9, 10.0).unwrap() < 1e-100);
        assert!(matches!(nbar_from_temperature(0.0, 10.0), Err(Error::NonPositiveTemperature(_))));
        assert!(matches!(temperature_from_nbar(0.0, 10.0), Err(Error::GroundState(_))));
    }

    #[test]
    fn increasing_runs() {
        let v = [Some(1.0), None, Some(0.5), Some(0.6), Some(0.7), Some(0.65), Some(0.9)];
        assert_eq!(longest_increasing_run(&v), Some((2, 4)));
        assert_eq!(longest_increasing_run(&[None, None]), None);
        assert_eq!(longest_increasing_run(&[Some(1.0), Some(1.0)]), Some((0, 0)));
    }

    #[test]
    fn grid_endpoints() {
        let g = default_temperature_grid();
        assert_eq!(g.len(), 73);
        assert!((g[0] - 1e-5).abs() < 1e-18 && (g[72] / 1e-2 - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
