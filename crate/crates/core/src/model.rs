//! System parameters, Hamiltonians and Lindblad channels.
//!
//! All rates and couplings are plain numbers in MHz; time is in μs. No factor
//! of 2π is inserted anywhere in the dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{build_space, Level, OperatorMatrix, OperatorSet, SpaceDims};
use crate::thermometry::collective_coupling;

/// Physical parameters of one simulation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Cavity field decay rate.
    pub kappa: f64,
    /// Single-ion cavity coupling.
    pub g: f64,
    /// Control Rabi frequency.
    pub omega_c: f64,
    pub gamma_eg: f64,
    pub gamma_eu: f64,
    /// Phonon damping rate.
    pub gamma_b: f64,
    /// Thermal bath occupancy.
    pub n_th: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// Probe drive amplitude.
    pub epsilon: f64,
    pub delta_p: f64,
    pub n_ions: u32,
    /// Secular frequency, only used to convert occupancies to temperatures.
    pub omega_sec: f64,
    pub dims: SpaceDims,
}

impl Default for SystemParams {
    /// Single-ion working point: κ = 0.4, g = 3κ, ηΩ_c = 2.5κ, γ_eg = γ_eu = κ,
    /// γ_b = 0.25κ, n_th = 1, weak probe ε = 0.05κ.
    fn default() -> Self {
        let kappa = 0.4;
        Self {
            kappa,
            g: 3.0 * kappa,
            omega_c: 2.5 * kappa,
            gamma_eg: kappa,
            gamma_eu: kappa,
            gamma_b: 0.25 * kappa,
            n_th: 1.0,
            eta: 1.0,
            epsilon: 0.05 * kappa,
            delta_p: 0.0,
            n_ions: 1,
            omega_sec: 10.0,
            dims: SpaceDims { n_atom: 3, n_photon: 4, n_phonon: 20 },
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let rates = [
            ("kappa", self.kappa),
            ("g", self.g),
            ("omega_c", self.omega_c),
            ("gamma_eg", self.gamma_eg),
            ("gamma_eu", self.gamma_eu),
            ("gamma_b", self.gamma_b),
            ("n_th", self.n_th),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("omega_sec", self.omega_sec),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.delta_p.is_finite() {
            return Err(Error::InvalidParameter("delta_p must be finite".into()));
        }
        if self.n_ions == 0 {
            return Err(Error::InvalidParameter("n_ions must be >= 1".into()));
        }
        Ok(())
    }

    /// Collective coupling `g √N`.
    pub fn g_eff(&self) -> f64 {
        collective_coupling(self.g, self.n_ions)
    }

    /// Control coupling on the sideband transition, `η Ω_c`.
    pub fn control_eff(&self) -> f64 {
        self.eta * self.omega_c
    }

    /// Expected vacuum-Rabi side-peak position `√(g_eff² + (ηΩ_c)²)`.
    pub fn side_peak_position(&self) -> f64 {
        self.g_eff().hypot(self.control_eff())
    }

    /// Empty-cavity resonant output `ε²/κ`, the normalization reference.
    pub fn empty_cavity_output(&self) -> f64 {
        self.epsilon * self.epsilon / self.kappa
    }

    pub fn with_detuning(&self, delta_p: f64) -> Self {
        Self { delta_p, ..self.clone() }
    }
}

/// Which coherent model to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Control drives the phonon sideband `|u,n⟩ ↔ |e,n+1⟩`.
    Thermal,
    /// Control drives the carrier, motion ignored.
    NonThermal,
}

/// One Lindblad channel `rate·(2AρA† − A†Aρ − ρA†A)`.
#[derive(Clone, Debug)]
pub struct Channel {
    pub label: &'static str,
    pub op: OperatorMatrix,
    pub rate: f64,
}

fn require_three_level(dims: SpaceDims) -> Result<()> {
    if dims.n_atom != 3 {
        return Err(Error::InvalidDims(format!("EIT model needs 3 atomic levels, got {}", dims.n_atom)));
    }
    Ok(())
}

/// Coefficient of `Δ_p` in every EIT Hamiltonian: `σ_gg − a†a`.
pub fn detuning_generator(ops: &OperatorSet) -> OperatorMatrix {
    ops.sigma(Level::G, Level::G) - &ops.photon_number()
}

/// Detuning-independent part of the Hamiltonian of `kind`.
pub fn static_hamiltonian(p: &SystemParams, kind: ModelKind, ops: &OperatorSet) -> Result<OperatorMatrix> {
    require_three_level(ops.dims)?;
    let s = |i, j| ops.sigma(i, j);
    let cavity = &(&ops.a_dag * s(Level::G, Level::E)) + &(&ops.a * s(Level::E, Level::G));
    let control = match kind {
        ModelKind::Thermal => {
            let raise = s(Level::E, Level::U) * &ops.b_dag;
            &raise + &raise.adjoint()
        }
        ModelKind::NonThermal => s(Level::U, Level::E) + s(Level::E, Level::U),
    };
    let control_strength = match kind {
        ModelKind::Thermal => p.control_eff(),
        ModelKind::NonThermal => p.omega_c,
    };
    let drive = &ops.a_dag + &ops.a;
    let h = &(&(p.g_eff() * &cavity) + &(control_strength * &control)) + &(p.epsilon * &drive);
    Ok(h)
}

/// Integer excitation charge of each basis state that the undriven model of
/// `kind` conserves: `a†a + σ_ee − b†b` for the sideband-driven model and
/// `a†a + σ_ee + σ_uu` for the carrier-driven one. The probe `a†` raises it by one.
pub fn excitation_charge(kind: ModelKind, dims: SpaceDims) -> Vec<i64> {
    (0..dims.total())
        .map(|k| {
            let (atom, photon, phonon) = dims.decompose(k);
            let photon = photon as i64;
            let excited = i64::from(atom == Level::E.index());
            match kind {
                ModelKind::Thermal => photon + excited - phonon as i64,
                ModelKind::NonThermal => photon + excited + i64::from(atom == Level::U.index()),
            }
        })
        .collect()
}

fn assemble(p: &SystemParams, kind: ModelKind) -> Result<OperatorMatrix> {
    p.validate()?;
    require_three_level(p.dims)?;
    let ops = build_space(p.dims)?;
    let h0 = static_hamiltonian(p, kind, &ops)?;
    Ok(&h0 + &(p.delta_p * &detuning_generator(&ops)))
}

/// `Δσ_gg − Δa†a + g√N(a†σ_ge + aσ_eg) + ηΩ_c(σ_eu b† + σ_ue b) + ε(a† + a)`.
pub fn hamiltonian_thermal(p: &SystemParams) -> Result<OperatorMatrix> {
    assemble(p, ModelKind::Thermal)
}

/// As [`hamiltonian_thermal`] but with the control on the carrier: `Ω_c(σ_ue + σ_eu)`.
pub fn hamiltonian_noneit(p: &SystemParams) -> Result<OperatorMatrix> {
    assemble(p, ModelKind::NonThermal)
}

pub fn hamiltonian(p: &SystemParams, kind: ModelKind) -> Result<OperatorMatrix> {
    assemble(p, kind)
}

/// Cavity loss, the two spontaneous-emission branches, and the phonon bath
/// pair. The heating channel is always present; its rate is zero when `n_th = 0`.
pub fn dissipators(p: &SystemParams) -> Result<Vec<Channel>> {
    p.validate()?;
    require_three_level(p.dims)?;
    let ops = build_space(p.dims)?;
    Ok(channels_on(p, &ops, true))
}

pub(crate) fn channels_on(p: &SystemParams, ops: &OperatorSet, with_phonons: bool) -> Vec<Channel> {
    let mut out = vec![
        Channel { label: "cavity", op: ops.a.clone(), rate: p.kappa },
        Channel { label: "decay_eg", op: ops.sigma(Level::G, Level::E).clone(), rate: p.gamma_eg },
        Channel { label: "decay_eu", op: ops.sigma(Level::U, Level::E).clone(), rate: p.gamma_eu },
    ];
    if with_phonons {
        out.extend(phonon_channels(ops, p.gamma_b, p.n_th));
    }
    out
}

/// Thermal-bath pair: `(b, γ_b(n_th+1))` and `(b†, γ_b n_th)`.
pub fn phonon_channels(ops: &OperatorSet, gamma_b: f64, n_th: f64) -> [Channel; 2] {
    [
        Channel { label: "phonon_cooling", op: ops.b.clone(), rate: gamma_b * (n_th + 1.0) },
        Channel { label: "phonon_heating", op: ops.b_dag.clone(), rate: gamma_b * n_th },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidebandKind {
    Bsb,
    Rsb,
}

/// Sideband Hamiltonian on the two-level `{u, e} ⊗ phonon` space.
///
/// BSB: `ηΩ(σ_eu b† + σ_ue b)`; RSB: `ηΩ(σ_eu b + σ_ue b†)`.
pub fn hamiltonian_sideband(kind: SidebandKind, eta: f64, omega: f64, dims: SpaceDims) -> Result<OperatorMatrix> {
    dims.validate()?;
    if dims.n_atom != 2 {
        return Err(Error::InvalidDims(format!("sideband model needs 2 atomic levels, got {}", dims.n_atom)));
    }
    let ops = build_space(dims)?;
    Ok(sideband_on(&ops, kind, eta, omega))
}

pub(crate) fn sideband_on(ops: &OperatorSet, kind: SidebandKind, eta: f64, omega: f64) -> OperatorMatrix {
    let phonon = match kind {
        SidebandKind::Bsb => &ops.b_dag,
        SidebandKind::Rsb => &ops.b,
    };
    let up = ops.sigma(Level::E, Level::U) * phonon;
    (eta * omega) * &(&up + &up.adjoint())
}
