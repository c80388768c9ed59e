//! Resolved-sideband dynamics on the two-level `{u, e} ⊗ phonon` space:
//! Rabi flopping, red/blue excitation ratios and pulsed cooling or heating.
//!
//! Spontaneous decay `e → u` keeps the vibrational level and enters as the
//! channel `(σ_ue, γ)`, so the excited population decays at `2γ`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{build_liouvillian, evolve, expect, DensityMatrix, EvolveOptions, Liouvillian};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::hilbert::{build_space, Level, OperatorMatrix, OperatorSet, SpaceDims};
use crate::model::{sideband_on, Channel, SidebandKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Bsb,
    Rsb,
    Wait,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseStep {
    pub kind: StepKind,
    /// μs
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub steps: Vec<PulseStep>,
    pub eta: f64,
    /// MHz
    pub omega: f64,
    /// Excited-state decay, MHz.
    pub gamma: f64,
}

impl PulseSequence {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in [0, 1), got {}", self.eta)));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0 && self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter("omega and gamma must be finite and >= 0".into()));
        }
        if let Some(s) = self.steps.iter().find(|s| !(s.duration > 0.0 && s.duration.is_finite())) {
            return Err(Error::InvalidParameter(format!("step duration must be positive, got {}", s.duration)));
        }
        Ok(())
    }

    /// `n` back-to-back pulses of one kind.
    pub fn repeated(kind: StepKind, n: usize, duration: f64, eta: f64, omega: f64, gamma: f64) -> Self {
        Self { steps: vec![PulseStep { kind, duration }; n], eta, omega, gamma }
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }
}

fn generator(ops: &OperatorSet, kind: StepKind, eta: f64, omega: f64, gamma: f64) -> Result<Liouvillian> {
    let h = match kind {
        StepKind::Bsb => sideband_on(ops, SidebandKind::Bsb, eta, omega),
        StepKind::Rsb => sideband_on(ops, SidebandKind::Rsb, eta, omega),
        StepKind::Wait => OperatorMatrix::zeros(ops.dims),
    };
    let decay = Channel { label: "decay_eu", op: ops.sigma(Level::U, Level::E).clone(), rate: gamma };
    build_liouvillian(&h, &[decay])
}

fn excited_population(ops: &OperatorSet, rho: &DensityMatrix) -> Result<f64> {
    Ok(expect(ops.sigma(Level::E, Level::E), rho)?.re)
}

/// Excited-state population along `times` for `|u, n0⟩` driven on the blue
/// sideband. The phonon cutoff leaves room for decay-assisted climbing.
pub fn bsb_rabi_trace(eta: f64, omega: f64, gamma: f64, n0: usize, times: &[f64]) -> Result<Vec<f64>> {
    let seq = PulseSequence { steps: vec![], eta, omega, gamma };
    seq.validate()?;
    let dims = SpaceDims::sideband(n0 + 12)?;
    let ops = build_space(dims)?;
    let l = generator(&ops, StepKind::Bsb, eta, omega, gamma)?;
    let rho0 = DensityMatrix::basis_state(dims, dims.index(Level::U.index(), 0, n0));
    evolve(&l, &rho0, times, EvolveOptions::default())?.iter().map(|r| excited_population(&ops, r)).collect()
}

/// Least-squares fit of `c + A e^{−λt} cos(ωt + φ)` to an excitation trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DampedSinusoid {
    pub offset: f64,
    pub amplitude: f64,
    pub decay: f64,
    /// Angular frequency of the population oscillation, rad/μs.
    pub omega: f64,
    pub phase: f64,
    pub rms_residual: f64,
}

impl DampedSinusoid {
    /// Coupling `Ω_R` of `P_e = sin²(Ω_R t)`, i.e. half the population frequency.
    pub fn rabi_frequency(&self) -> f64 {
        0.5 * self.omega
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (-self.decay * t).exp() * (self.omega * t + self.phase).cos()
    }
}

pub fn fit_damped_sinusoid(times: &[f64], values: &[f64]) -> Result<DampedSinusoid> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    if times.len() < 8 {
        return Err(Error::TooFewSamples { found: times.len(), needed: 8 });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let crossings = values.windows(2).filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0).count();
    if crossings < 2 {
        return Err(Error::Fit("trace holds less than one oscillation".into()));
    }
    let span = times[times.len() - 1] - times[0];
    let w0 = std::f64::consts::PI * crossings as f64 / span;
    let a0 = 0.5 * (hi - lo);
    let phi0 = ((values[0] - mean) / a0).clamp(-1.0, 1.0).acos();
    let t0 = times[0];
    let sol = levenberg_marquardt(
        |p, r, jac| {
            let (c, a, lam, w, phi) = (p[0], p[1], p[2], p[3], p[4]);
            for (i, (&t, &y)) in times.iter().zip(values).enumerate() {
                let s = t - t0;
                let env = (-lam * s).exp();
                let arg = w * s + phi;
                let (sin, cos) = arg.sin_cos();
                r[i] = c + a * env * cos - y;
                let row = &mut jac[i * 5..i * 5 + 5];
                row[0] = 1.0;
                row[1] = env * cos;
                row[2] = -s * a * env * cos;
                row[3] = -a * env * sin * s;
                row[4] = -a * env * sin;
            }
        },
        &[mean, a0, 0.0, w0, phi0],
        times.len(),
        LmOptions::default(),
    )?;
    let p = &sol.params;
    let rms = (sol.residuals.iter().map(|r| r * r).sum::<f64>() / times.len() as f64).sqrt();
    // Shift the phase back to absolute time.
    Ok(DampedSinusoid {
        offset: p[0],
        amplitude: p[1],
        decay: p[2],
        omega: p[3].abs(),
        phase: p[4] - p[3] * t0,
        rms_residual: rms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SidebandRatio {
    pub n: usize,
    pub pulse_time: f64,
    pub p_rsb: f64,
    pub p_bsb: f64,
    pub ratio: f64,
    /// Populations averaged over `[0, pulse_time]`.
    pub p_rsb_avg: f64,
    pub p_bsb_avg: f64,
    pub ratio_avg: f64,
    /// Closed-form target `n/(n+1)`.
    pub expected: f64,
}

/// Samples used for the time average in [`sideband_ratio`].
pub const RATIO_AVERAGE_SAMPLES: usize = 201;

/// First blue-sideband π time `π / (2ηΩ√(n+1))`.
pub fn bsb_pi_time(n: usize, eta: f64, omega: f64) -> f64 {
    std::f64::consts::PI / (2.0 * eta * omega * ((n + 1) as f64).sqrt())
}

/// Red and blue sideband excitation from `|u, n⟩` after a pulse of
/// `pulse_time` μs; `None` samples at the blue-sideband π time.
pub fn sideband_ratio(n: usize, eta: f64, omega: f64, gamma: f64, pulse_time: Option<f64>) -> Result<SidebandRatio> {
    PulseSequence { steps: vec![], eta, omega, gamma }.validate()?;
    if !(eta > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter("eta and omega must be positive".into()));
    }
    let t = pulse_time.unwrap_or_else(|| bsb_pi_time(n, eta, omega));
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("pulse time must be positive, got {t}")));
    }
    let dims = SpaceDims::sideband(n + 3)?;
    let ops = build_space(dims)?;
    let rho0 = DensityMatrix::basis_state(dims, dims.index(Level::U.index(), 0, n));
    let times: Vec<f64> = (0..RATIO_AVERAGE_SAMPLES).map(|k| t * k as f64 / (RATIO_AVERAGE_SAMPLES - 1) as f64).collect();
    let run = |kind| -> Result<(f64, f64)> {
        let l = generator(&ops, kind, eta, omega, gamma)?;
        let pe = evolve(&l, &rho0, &times, EvolveOptions::default())?
            .iter()
            .map(|r| excited_population(&ops, r))
            .collect::<Result<Vec<f64>>>()?;
        Ok((pe[pe.len() - 1], trapezoid_mean(&pe)))
    };
    let (p_rsb, p_rsb_avg) = run(StepKind::Rsb)?;
    let (p_bsb, p_bsb_avg) = run(StepKind::Bsb)?;
    let ratio_of = |r: f64, b: f64| if b > 0.0 { r / b } else { 0.0 };
    Ok(SidebandRatio {
        n,
        pulse_time: t,
        p_rsb,
        p_bsb,
        ratio: ratio_of(p_rsb, p_bsb),
        p_rsb_avg,
        p_bsb_avg,
        ratio_avg: ratio_of(p_rsb_avg, p_bsb_avg),
        expected: n as f64 / (n + 1) as f64,
    })
}

fn trapezoid_mean(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return v.first().copied().unwrap_or(0.0);
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    (inner + 0.5 * (v[0] + v[v.len() - 1])) / (v.len() - 1) as f64
}

/// Populations of every `|level, n⟩` over a pulse sequence.
#[derive(Clone, Debug, Serialize)]
pub struct CoolingTrajectory {
    pub n_phonon: usize,
    pub times: Vec<f64>,
    /// `populations[k][level * n_phonon + n]` at `times[k]`; level 0 is `u`.
    pub populations: Vec<Vec<f64>>,
}

impl CoolingTrajectory {
    pub fn labels(&self) -> Vec<String> {
        ["u", "e"]
            .iter()
            .flat_map(|l| (0..self.n_phonon).map(move |n| format!("p_{l}_{n}")))
            .collect()
    }

    pub fn population(&self, k: usize, level: Level, n: usize) -> f64 {
        self.populations[k][level.index() * self.n_phonon + n]
    }

    /// `Σ n·P(n)` at sample `k`, summed over both levels.
    pub fn mean_phonon(&self, k: usize) -> f64 {
        (0..self.n_phonon)
            .map(|n| n as f64 * (self.population(k, Level::U, n) + self.population(k, Level::E, n)))
            .sum()
    }

    pub fn last(&self) -> usize {
        self.times.len() - 1
    }
}

/// Evolves `rho0` through `seq`, sampling each step `samples_per_step` times
/// (plus the initial instant).
pub fn run_cooling_sequence(
    seq: &PulseSequence,
    rho0: &DensityMatrix,
    samples_per_step: usize,
) -> Result<CoolingTrajectory> {
    seq.validate()?;
    let dims = rho0.dims();
    if dims.n_atom != 2 || dims.n_photon != 1 {
        return Err(Error::InvalidDims("cooling runs on the two-level ⊗ phonon space".into()));
    }
    let ops = build_space(dims)?;
    let samples = samples_per_step.max(1);
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut populations = vec![rho.populations()];
    for step in &seq.steps {
        let l = generator(&ops, step.kind, seq.eta, seq.omega, seq.gamma)?;
        let local: Vec<f64> = (1..=samples).map(|k| step.duration * k as f64 / samples as f64).collect();
        let traj = evolve(&l, &rho, &local, EvolveOptions::default())?;
        for (dt, r) in local.iter().zip(&traj) {
            times.push(t + dt);
            populations.push(r.populations());
        }
        t += step.duration;
        rho = traj.into_iter().last().expect("at least one sample");
    }
    Ok(CoolingTrajectory { n_phonon: dims.n_phonon, times, populations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undamped_bsb_reaches_full_excitation() {
        let (eta, omega) = (0.1, 2.0);
        let t_pi = bsb_pi_time(0, eta, omega);
        let pe = bsb_rabi_trace(eta, omega, 0.0, 0, &[t_pi]).unwrap();
        assert!((pe[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn sinusoid_fit_recovers_parameters() {
        let times: Vec<f64> = (0..300).map(|k| 0.05 * k as f64).collect();
        let truth = DampedSinusoid { offset: 0.5, amplitude: -0.45, decay: 0.03, omega: 2.4, phase: 0.1, rms_residual: 0.0 };
        let y: Vec<f64> = times.iter().map(|&t| truth.eval(t)).collect();
        let fit = fit_damped_sinusoid(&times, &y).unwrap();
        assert!((fit.omega - 2.4).abs() < 1e-8, "{fit:?}");
        assert!((fit.decay - 0.03).abs() < 1e-8);
    }

    #[test]
    fn empty_sequence_leaves_state_alone() {
        let dims = SpaceDims::sideband(4).unwrap();
        let rho = DensityMatrix::basis_state(dims, 3);
        let seq = PulseSequence { steps: vec![], eta: 0.2, omega: 2.0, gamma: 4.0 };
        let tr = run_cooling_sequence(&seq, &rho, 5).unwrap();
        assert_eq!(tr.times, vec![0.0]);
        assert_eq!(tr.populations[0], rho.populations());
    }

    #[test]
    fn rejects_bad_sequences() {
        let bad_eta = PulseSequence { steps: vec![], eta: 1.0, omega: 1.0, gamma: 0.0 };
        assert!(bad_eta.validate().is_err());
        let bad_step = PulseSequence::repeated(StepKind::Rsb, 1, 0.0, 0.1, 1.0, 0.0);
        assert!(bad_step.validate().is_err());
    }
}
