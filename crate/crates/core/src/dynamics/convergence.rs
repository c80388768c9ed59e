use serde::Serialize;

use crate::error::Result;
use crate::hilbert::SpaceDims;
use crate::model::SystemParams;

pub const CONVERGENCE_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub base_dims: SpaceDims,
    pub doubled_dims: SpaceDims,
    pub base_value: f64,
    pub doubled_value: f64,
    pub relative_change: f64,
    pub passed: bool,
}

/// Photon and phonon cutoffs doubled; the atom factor is untouched.
pub fn doubled_cutoffs(dims: SpaceDims) -> SpaceDims {
    SpaceDims { n_photon: 2 * dims.n_photon, n_phonon: 2 * dims.n_phonon, ..dims }
}

/// Re-evaluates `observable` with doubled photon and phonon cutoffs.
pub fn convergence_check<F>(p: &SystemParams, observable: F) -> Result<ConvergenceReport>
where
    F: Fn(&SystemParams) -> Result<f64>,
{
    let base_value = observable(p)?;
    let doubled = SystemParams { dims: doubled_cutoffs(p.dims), ..p.clone() };
    let doubled_value = observable(&doubled)?;
    let denom = doubled_value.abs().max(f64::MIN_POSITIVE);
    let relative_change = (doubled_value - base_value).abs() / denom;
    Ok(ConvergenceReport {
        base_dims: p.dims,
        doubled_dims: doubled.dims,
        base_value,
        doubled_value,
        relative_change,
        passed: relative_change < CONVERGENCE_TOLERANCE,
    })
}
