//! Probe-detuning sweeps of the cavity output, the closed-form weak-probe
//! transmission, Lorentzian linewidth extraction, and linewidth scans.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_liouvillian, expect, SteadyStateFamily, WeakDriveFamily};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::hilbert::{build_space, OperatorMatrix, SpaceDims};
use crate::model::{
    channels_on, detuning_generator, excitation_charge, static_hamiltonian, ModelKind, SystemParams,
};
use crate::thermometry::{calibration_cutoff, nbar_from_temperature};

/// Number of samples in the default detuning grid.
pub const DEFAULT_GRID_POINTS: usize = 401;
/// Half-width of the default grid in units of the side-peak position.
pub const DEFAULT_GRID_SPAN: f64 = 2.5;
/// Fraction of the flanking-minima distance trimmed from each side of the fit window.
pub const WINDOW_SHRINK: f64 = 0.1;
pub const MIN_FIT_SAMPLES: usize = 8;

/// Cavity output versus probe detuning.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub detunings: Vec<f64>,
    /// `κ⟨a†a⟩`.
    pub transmission: Vec<f64>,
    /// Empty-cavity resonant output `ε²/κ` used for normalization.
    pub reference: f64,
    pub kind: ModelKind,
    /// Method actually used; never `Auto`.
    pub method: SweepMethod,
    pub params: SystemParams,
}

impl Spectrum {
    pub fn new(detunings: Vec<f64>, transmission: Vec<f64>, kind: ModelKind, params: SystemParams) -> Result<Self> {
        check_grid(&detunings)?;
        if detunings.len() != transmission.len() {
            return Err(Error::DimensionMismatch { expected: detunings.len(), found: transmission.len() });
        }
        if transmission.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidParameter("transmission must be finite and non-negative".into()));
        }
        let reference = params.empty_cavity_output();
        Ok(Self { detunings, transmission, reference, kind, method: SweepMethod::Exact, params })
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Output divided by the empty-cavity resonant value.
    pub fn normalized(&self) -> Vec<f64> {
        self.transmission.iter().map(|t| t / self.reference).collect()
    }

    /// Grid indices of interior local maxima (first sample of a plateau).
    pub fn local_maxima(&self) -> Vec<usize> {
        local_extrema(&self.transmission, true)
    }

    pub fn local_minima(&self) -> Vec<usize> {
        local_extrema(&self.transmission, false)
    }

    /// Copy with every transmission value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { transmission: self.transmission.iter().map(|t| t * s).collect(), ..self.clone() }
    }
}

fn local_extrema(v: &[f64], maxima: bool) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        let beyond = |a: f64, b: f64| if maxima { a > b } else { a < b };
        if beyond(v[i], v[i - 1]) {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && beyond(v[i], v[j + 1]) {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("detuning grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Half-width of the default grid: 2.5 × the side-peak position, or 2.5 × 2κ
/// when there is no coupling at all.
pub fn default_half_span(p: &SystemParams) -> f64 {
    let peak = p.side_peak_position();
    let scale = if peak > 0.0 { peak } else { 2.0 * p.kappa };
    DEFAULT_GRID_SPAN * scale
}

/// 401 uniform points over `±2.5 √(g_eff² + (ηΩ_c)²)`.
pub fn default_grid(p: &SystemParams) -> Vec<f64> {
    let half = default_half_span(p);
    linspace(-half, half, DEFAULT_GRID_POINTS)
}

/// How the steady state at each detuning is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    /// Exact solve for small systems, weak-probe expansion otherwise.
    #[default]
    Auto,
    /// Full sparse steady state of the driven Liouvillian.
    Exact,
    /// Steady state to second order in the probe amplitude `ε`.
    WeakProbe,
}

/// Largest Hilbert dimension for which [`SweepMethod::Auto`] picks the exact solve.
pub const AUTO_EXACT_MAX_DIM: usize = 128;

/// Dimensions actually simulated: the motionless model has no motional
/// factor, and the weak-probe expansion never needs more than one photon.
pub fn model_dims(p: &SystemParams, kind: ModelKind, method: SweepMethod) -> SpaceDims {
    resolve(p, kind, method).0
}

/// Simulated dimensions together with the concrete method. `Auto` is decided
/// on the requested cutoffs, before the photon space is trimmed.
fn resolve(p: &SystemParams, kind: ModelKind, method: SweepMethod) -> (SpaceDims, SweepMethod) {
    let mut dims = p.dims;
    if kind == ModelKind::NonThermal {
        dims.n_phonon = 1;
    }
    let method = resolve_method(dims, method);
    if method == SweepMethod::WeakProbe {
        dims.n_photon = 2;
    }
    (dims, method)
}

/// The concrete method [`SweepMethod::Auto`] stands for at `dims`.
pub fn resolve_method(dims: SpaceDims, method: SweepMethod) -> SweepMethod {
    match method {
        SweepMethod::Auto if dims.total() <= AUTO_EXACT_MAX_DIM => SweepMethod::Exact,
        SweepMethod::Auto => SweepMethod::WeakProbe,
        m => m,
    }
}

/// Steady-state expectations `(⟨a†a⟩, ⟨b†b⟩)` along a detuning grid.
enum Solver {
    Exact(SteadyStateFamily),
    Weak(WeakDriveFamily, f64),
}

struct Prepared {
    params: SystemParams,
    method: SweepMethod,
    solver: Solver,
    photons: OperatorMatrix,
    phonons: OperatorMatrix,
}

fn prepare(p: &SystemParams, kind: ModelKind, method: SweepMethod) -> Result<Prepared> {
    p.validate()?;
    let (dims, method) = resolve(p, kind, method);
    let params = SystemParams { dims, ..p.clone() };
    let ops = build_space(dims)?;
    let channels = channels_on(&params, &ops, kind == ModelKind::Thermal);
    let generator = detuning_generator(&ops);
    let solver = match method {
        SweepMethod::WeakProbe => {
            let undriven = SystemParams { epsilon: 0.0, ..params.clone() };
            let h0 = static_hamiltonian(&undriven, kind, &ops)?;
            let charge = excitation_charge(kind, dims);
            Solver::Weak(WeakDriveFamily::new(&h0, &generator, &channels, &ops.a_dag, &charge)?, params.epsilon)
        }
        _ => {
            let h0 = static_hamiltonian(&params, kind, &ops)?;
            let base = build_liouvillian(&h0, &channels)?;
            let slope = build_liouvillian(&generator, &[])?;
            Solver::Exact(SteadyStateFamily::new(&base, &slope)?)
        }
    };
    Ok(Prepared { params, method, solver, photons: ops.photon_number(), phonons: ops.phonon_number() })
}

impl Prepared {
    fn observe(&self, delta: f64) -> Result<(f64, f64)> {
        match &self.solver {
            Solver::Exact(f) => {
                let rho = f.solve(delta)?;
                Ok((expect(&self.photons, &rho)?.re, expect(&self.phonons, &rho)?.re))
            }
            Solver::Weak(f, eps) => {
                let s = f.solve(delta)?;
                Ok((s.expect(&self.photons, *eps).re, s.expect(&self.phonons, *eps).re))
            }
        }
    }
}

/// Steady-state cavity output `κ⟨a†a⟩` at each detuning of `grid`.
pub fn sweep_spectrum(p: &SystemParams, kind: ModelKind, grid: &[f64]) -> Result<Spectrum> {
    sweep_spectrum_with(p, kind, grid, SweepMethod::Auto)
}

pub fn sweep_spectrum_with(p: &SystemParams, kind: ModelKind, grid: &[f64], method: SweepMethod) -> Result<Spectrum> {
    check_grid(grid)?;
    let prepared = prepare(p, kind, method)?;
    let transmission = grid
        .par_iter()
        .enumerate()
        .map(|(index, &delta)| {
            let (n, _) = prepared
                .observe(delta)
                .map_err(|e| Error::AtDetuning { detuning: delta, index, source: Box::new(e) })?;
            Ok(prepared.params.kappa * n.max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut s = Spectrum::new(grid.to_vec(), transmission, kind, prepared.params)?;
    s.method = prepared.method;
    Ok(s)
}

/// Steady-state `(⟨a†a⟩, ⟨b†b⟩)` at the detuning `p.delta_p`.
pub fn steady_occupations(p: &SystemParams, kind: ModelKind, method: SweepMethod) -> Result<(f64, f64)> {
    prepare(p, kind, method)?.observe(p.delta_p)
}

/// Weak-probe transmission of the motionless model, normalized to 1 on an
/// empty-cavity resonance:
///
/// `T = κ² / |(Δ + iκ) − g²N χ|²`, `χ = Δ / (Δ² + i(γ_eu + γ_eg)Δ − Ω_c²)`.
pub fn analytic_transmission(p: &SystemParams, delta_p: f64) -> f64 {
    let d = C64::new(delta_p, 0.0);
    let gamma = p.gamma_eu + p.gamma_eg;
    let denom = d * d + C64::new(0.0, gamma) * d - p.omega_c * p.omega_c;
    let chi = if denom.norm() == 0.0 { C64::new(0.0, 0.0) } else { d / denom };
    let g2n = p.g_eff().powi(2);
    let resp = d + C64::new(0.0, p.kappa) - g2n * chi;
    p.kappa * p.kappa / resp.norm_sqr()
}

/// Analytic spectrum on `grid`, stored in raw output units so it is directly
/// comparable with [`sweep_spectrum`].
pub fn analytic_spectrum(p: &SystemParams, grid: &[f64]) -> Result<Spectrum> {
    let mut params = p.clone();
    params.dims.n_phonon = 1;
    let reference = params.empty_cavity_output();
    let t = grid.iter().map(|&d| analytic_transmission(&params, d) * reference).collect();
    Spectrum::new(grid.to_vec(), t, ModelKind::NonThermal, params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub rms_residual: f64,
    pub fit_window: (f64, f64),
}

impl LorentzianFit {
    pub fn eval(&self, x: f64) -> f64 {
        lorentzian(x, self.amplitude, self.fwhm, self.center, self.offset)
    }
}

pub fn lorentzian(x: f64, amplitude: f64, fwhm: f64, center: f64, offset: f64) -> f64 {
    let hw2 = 0.25 * fwhm * fwhm;
    amplitude * hw2 / ((x - center).powi(2) + hw2) + offset
}

/// Least-squares fit of `A (w/2)² / ((Δ − Δ₀)² + (w/2)²) + c` to the samples
/// inside `window`.
pub fn fit_lorentzian(s: &Spectrum, window: (f64, f64)) -> Result<LorentzianFit> {
    let (lo, hi) = window;
    let idx: Vec<usize> = (0..s.len()).filter(|&i| s.detunings[i] >= lo && s.detunings[i] <= hi).collect();
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples { found: idx.len(), needed: MIN_FIT_SAMPLES });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| s.detunings[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| s.transmission[i]).collect();
    let peaks = local_extrema(&ys, true);
    if peaks.len() != 1 {
        return Err(Error::MultiPeakWindow(peaks.len()));
    }

    let scale = ys.iter().fold(0.0f64, |a, &y| a.max(y.abs()));
    if scale == 0.0 {
        return Err(Error::Fit("window holds no signal".into()));
    }
    let yn: Vec<f64> = ys.iter().map(|y| y / scale).collect();
    let imax = argmax_nearest_zero(&xs, &yn);
    let ymin = yn.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = yn[imax];
    let half = 0.5 * (ymax + ymin);
    let left = (0..imax).rev().find(|&i| yn[i] <= half).map(|i| xs[i]).unwrap_or(xs[0]);
    let right = (imax..xs.len()).find(|&i| yn[i] <= half).map(|i| xs[i]).unwrap_or(xs[xs.len() - 1]);
    let w0 = (right - left).max(xs[1] - xs[0]);
    let p0 = [ymax - ymin, w0, xs[imax], ymin];

    let sol = levenberg_marquardt(
        |p, r, jac| {
            let (a, w, x0, c) = (p[0], p[1], p[2], p[3]);
            let hw2 = 0.25 * w * w;
            for (i, (&x, &y)) in xs.iter().zip(&yn).enumerate() {
                let dx = x - x0;
                let den = dx * dx + hw2;
                let shape = hw2 / den;
                r[i] = a * shape + c - y;
                jac[i * 4] = shape;
                jac[i * 4 + 1] = a * (0.5 * w * dx * dx) / (den * den);
                jac[i * 4 + 2] = a * 2.0 * hw2 * dx / (den * den);
                jac[i * 4 + 3] = 1.0;
            }
        },
        &p0,
        xs.len(),
        LmOptions::default(),
    )?;
    let (a, w, x0, c) = (sol.params[0], sol.params[1].abs(), sol.params[2], sol.params[3]);
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Fit(format!("non-positive width {w}")));
    }
    if x0 < lo || x0 > hi {
        return Err(Error::Fit(format!("fitted center {x0} left the window [{lo}, {hi}]")));
    }
    let rms = (sol.residuals.iter().map(|r| r * r).sum::<f64>() / xs.len() as f64).sqrt() * scale;
    Ok(LorentzianFit { center: x0, fwhm: w, amplitude: a * scale, offset: c * scale, rms_residual: rms, fit_window: window })
}

/// Index of the largest sample; ties go to the smallest `|x|`.
fn argmax_nearest_zero(xs: &[f64], ys: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..ys.len() {
        if ys[i] > ys[best] || (ys[i] == ys[best] && xs[i].abs() < xs[best].abs()) {
            best = i;
        }
    }
    best
}

/// Fit window around the central transparency peak: between the local minima
/// flanking zero detuning, trimmed by 10 % of their distance on each side.
pub fn central_window(s: &Spectrum) -> Result<(f64, f64)> {
    let t = &s.transmission;
    let n = t.len();
    if n < 3 {
        return Err(Error::TooFewSamples { found: n, needed: MIN_FIT_SAMPLES });
    }
    let c = (0..n)
        .min_by(|&i, &j| s.detunings[i].abs().total_cmp(&s.detunings[j].abs()))
        .expect("non-empty");
    let left_up = c > 0 && t[c - 1] > t[c];
    let right_up = c + 1 < n && t[c + 1] > t[c];
    if left_up && right_up {
        return Err(Error::NoCentralPeak);
    }
    // Climb to the central maximum first, then descend both flanks.
    let mut top = c;
    while top + 1 < n && t[top + 1] > t[top] {
        top += 1;
    }
    while top > 0 && t[top - 1] > t[top] {
        top -= 1;
    }
    let mut l = top;
    while l > 0 && t[l - 1] <= t[l] {
        l -= 1;
    }
    let mut r = top;
    while r + 1 < n && t[r + 1] <= t[r] {
        r += 1;
    }
    let (lo, hi) = (s.detunings[l], s.detunings[r]);
    let trim = WINDOW_SHRINK * (hi - lo);
    Ok((lo + trim, hi - trim))
}

/// Sweep, central window and Lorentzian fit in one go.
#[derive(Clone, Debug, Serialize)]
pub struct LinewidthResult {
    pub spectrum: Spectrum,
    pub fit: LorentzianFit,
}

pub fn eit_linewidth_detailed(p: &SystemParams, kind: ModelKind, method: SweepMethod) -> Result<LinewidthResult> {
    let spectrum = sweep_spectrum_with(p, kind, &default_grid(p), method)?;
    let fit = fit_lorentzian(&spectrum, central_window(&spectrum)?)?;
    Ok(LinewidthResult { spectrum, fit })
}

/// FWHM (MHz) of the central transparency peak on the default grid.
pub fn eit_linewidth(p: &SystemParams, kind: ModelKind) -> Result<f64> {
    eit_linewidth_with(p, kind, SweepMethod::Auto)
}

pub fn eit_linewidth_with(p: &SystemParams, kind: ModelKind, method: SweepMethod) -> Result<f64> {
    Ok(eit_linewidth_detailed(p, kind, method)?.fit.fwhm)
}

/// FWHM of the central peak of the closed-form transmission on the default grid.
pub fn analytic_linewidth(p: &SystemParams) -> Result<f64> {
    let s = analytic_spectrum(p, &default_grid(p))?;
    Ok(fit_lorentzian(&s, central_window(&s)?)?.fwhm)
}

/// Label stored with every map describing the ratio denominator.
pub const MAP_RATIO_REFERENCE: &str = "empty_cavity_fwhm_2kappa";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapCell {
    pub g: f64,
    pub omega_c: f64,
    pub n_th: f64,
    pub fwhm: Option<f64>,
    pub fwhm_ratio: Option<f64>,
    pub error: Option<String>,
}

/// Thermal-model linewidth over the `(n_th, g, Ω_c)` grid, ordered with `n_th`
/// slowest and `Ω_c` fastest. The ratio divides by the empty-cavity width 2κ.
/// The phonon cutoff is raised to [`calibration_cutoff`] where the base one is
/// too small. Failing cells are recorded, not propagated.
pub fn linewidth_map_2d(
    base: &SystemParams,
    g_grid: &[f64],
    omega_c_grid: &[f64],
    n_th: &[f64],
    method: SweepMethod,
) -> Result<Vec<MapCell>> {
    check_grid(g_grid)?;
    check_grid(omega_c_grid)?;
    let mut points = Vec::with_capacity(n_th.len() * g_grid.len() * omega_c_grid.len());
    for &nt in n_th {
        for &g in g_grid {
            for &oc in omega_c_grid {
                points.push((g, oc, nt));
            }
        }
    }
    let reference = 2.0 * base.kappa;
    Ok(points
        .into_par_iter()
        .map(|(g, omega_c, nt)| {
            let mut p = SystemParams { g, omega_c, n_th: nt, ..base.clone() };
            p.dims.n_phonon = p.dims.n_phonon.max(calibration_cutoff(nt));
            match eit_linewidth_with(&p, ModelKind::Thermal, method) {
                Ok(w) => MapCell { g, omega_c, n_th: nt, fwhm: Some(w), fwhm_ratio: Some(w / reference), error: None },
                Err(e) => MapCell { g, omega_c, n_th: nt, fwhm: None, fwhm_ratio: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub omega_c: f64,
    pub analytic_fwhm: Option<f64>,
    pub nonthermal_fwhm: Option<f64>,
    /// One entry per requested temperature.
    pub thermal_fwhm: Vec<Option<f64>>,
}

/// For each control strength: closed-form, motionless numerical, and thermal
/// numerical linewidths at each temperature (K). The thermal bath occupancy is
/// derived from the temperature through the secular frequency in `base`.
pub fn compare_thermal_nonthermal(
    base: &SystemParams,
    omega_c_grid: &[f64],
    temps: &[f64],
    method: SweepMethod,
) -> Result<Vec<ComparisonRow>> {
    let n_ths = temps.iter().map(|&t| nbar_from_temperature(t, base.omega_sec)).collect::<Result<Vec<_>>>()?;
    Ok(omega_c_grid
        .par_iter()
        .map(|&omega_c| {
            let p = SystemParams { omega_c, ..base.clone() };
            ComparisonRow {
                omega_c,
                analytic_fwhm: analytic_linewidth(&p).ok(),
                nonthermal_fwhm: eit_linewidth_with(&p, ModelKind::NonThermal, method).ok(),
                thermal_fwhm: n_ths
                    .iter()
                    .map(|&n_th| {
                        let mut q = SystemParams { n_th, ..p.clone() };
                        q.dims.n_phonon = q.dims.n_phonon.max(calibration_cutoff(n_th));
                        eit_linewidth_with(&q, ModelKind::Thermal, method).ok()
                    })
                    .collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(a: f64, w: f64, x0: f64, c: f64) -> Spectrum {
        let grid = linspace(-2.0, 2.0, 201);
        let t = grid.iter().map(|&x| lorentzian(x, a, w, x0, c)).collect();
        Spectrum::new(grid, t, ModelKind::NonThermal, SystemParams::default()).unwrap()
    }

    #[test]
    fn recovers_exact_lorentzian() {
        let s = synthetic(1.0, 0.5, 0.0, 0.0);
        let fit = fit_lorentzian(&s, (-2.0, 2.0)).unwrap();
        assert!((fit.fwhm - 0.5).abs() < 1e-6);
        assert!(fit.center.abs() < 1e-8);
        assert!(fit.rms_residual < 1e-8);
    }

    #[test]
    fn fit_is_scale_invariant() {
        let s = synthetic(0.8, 0.3, 0.1, 0.05);
        let a = fit_lorentzian(&s, (-1.0, 1.0)).unwrap();
        let b = fit_lorentzian(&s.scaled(37.0), (-1.0, 1.0)).unwrap();
        assert!((a.fwhm - b.fwhm).abs() < 1e-9);
        assert!((b.amplitude / a.amplitude - 37.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_small_and_multi_peak_windows() {
        let s = synthetic(1.0, 0.5, 0.0, 0.0);
        assert!(matches!(fit_lorentzian(&s, (-0.05, 0.05)), Err(Error::TooFewSamples { .. })));
        let grid = linspace(-2.0, 2.0, 201);
        let t = grid.iter().map(|&x| lorentzian(x, 1.0, 0.2, -0.8, 0.0) + lorentzian(x, 1.0, 0.2, 0.8, 0.0)).collect();
        let two = Spectrum::new(grid, t, ModelKind::NonThermal, SystemParams::default()).unwrap();
        assert!(matches!(fit_lorentzian(&two, (-2.0, 2.0)), Err(Error::MultiPeakWindow(2))));
    }

    #[test]
    fn spectrum_rejects_bad_grids() {
        let p = SystemParams::default();
        assert!(Spectrum::new(vec![0.0, 0.0], vec![1.0, 1.0], ModelKind::Thermal, p.clone()).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], vec![1.0], ModelKind::Thermal, p.clone()).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], vec![1.0, -1.0], ModelKind::Thermal, p).is_err());
    }

    #[test]
    fn analytic_limits() {
        let p = SystemParams { g: 0.0, ..SystemParams::default() };
        assert!((analytic_transmission(&p, 0.0) - 1.0).abs() < 1e-15);
        let d: f64 = 0.3;
        assert!((analytic_transmission(&p, d) - 0.16 / (d * d + 0.16)).abs() < 1e-15);
        let q = SystemParams::default();
        assert!(analytic_transmission(&q, 1e6) < 1e-12);
        assert!(analytic_transmission(&q, -1e6) < 1e-12);
    }

    #[test]
    fn central_window_needs_central_peak() {
        let grid = linspace(-2.0, 2.0, 101);
        let t: Vec<f64> = grid.iter().map(|&x| 1.0 - lorentzian(x, 0.9, 0.5, 0.0, 0.0)).collect();
        let dip = Spectrum::new(grid, t, ModelKind::NonThermal, SystemParams::default()).unwrap();
        assert!(matches!(central_window(&dip), Err(Error::NoCentralPeak)));
    }

    #[test]
    fn plateau_extrema() {
        assert_eq!(local_extrema(&[0.0, 1.0, 1.0, 0.0], true), vec![1]);
        assert_eq!(local_extrema(&[0.0, 1.0, 1.0, 2.0], true), Vec::<usize>::new());
        assert_eq!(local_extrema(&[1.0, 0.0, 1.0, 0.0, 1.0], false), vec![1, 3]);
    }
}
