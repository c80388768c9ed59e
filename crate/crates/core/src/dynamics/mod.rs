//! Open-system dynamics: Liouvillian assembly, steady states, time evolution
//! and expectation values.
//!
//! Density matrices are stored column-stacked, so the storage vector *is*
//! `vec(ρ)` and `AρB` corresponds to `(Bᵀ ⊗ A) vec(ρ)`.

mod convergence;
mod evolve;
mod family;
mod liouvillian;
mod steady;
mod weak;

pub use convergence::{convergence_check, doubled_cutoffs, ConvergenceReport, CONVERGENCE_TOLERANCE};
pub use evolve::{evolve, evolve_from, EvolveOptions};
pub use liouvillian::{build_liouvillian, Liouvillian};
pub use steady::{steady_state, SteadyStateFamily, DENSE_FALLBACK_LIMIT};
pub use weak::{WeakDriveFamily, WeakDriveState};

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, SpaceDims};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: SpaceDims,
    /// Column-major entries; `data[j * d + i] = ρ_ij`.
    data: Vec<C64>,
}

impl DensityMatrix {
    /// Wraps a column-stacked vector without checking physicality.
    pub fn from_vec(dims: SpaceDims, data: Vec<C64>) -> Result<Self> {
        let d = dims.total();
        if data.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: data.len() });
        }
        Ok(Self { dims, data })
    }

    /// `|ψ⟩⟨ψ|` for the basis state with the given global index.
    pub fn basis_state(dims: SpaceDims, index: usize) -> Self {
        let d = dims.total();
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        data[index * d + index] = C64::new(1.0, 0.0);
        Self { dims, data }
    }

    /// Diagonal state with the given populations (normalized internally).
    pub fn diagonal(dims: SpaceDims, populations: &[f64]) -> Result<Self> {
        let d = dims.total();
        if populations.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: populations.len() });
        }
        let total: f64 = populations.iter().sum();
        if !(total > 0.0) || populations.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidParameter("populations must be non-negative with positive sum".into()));
        }
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for (i, &p) in populations.iter().enumerate() {
            data[i * d + i] = C64::new(p / total, 0.0);
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[j * self.dim() + i]
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re).collect()
    }

    /// `max |ρ_ij − ρ_ji*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = Mat::<C64>::from_fn(d, d, |i, j| 0.5 * (self.get(i, j) + self.get(j, i).conj()));
        match m.self_adjoint_eigenvalues(Side::Lower) {
            Ok(ev) => ev.into_iter().fold(f64::INFINITY, f64::min),
            Err(_) => f64::NAN,
        }
    }

    /// Hermitian, unit trace and positive within the module tolerances.
    pub fn check_physical(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > HERMITICITY_TOL {
            return Err(Error::Solver(format!("density matrix not Hermitian (defect {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Solver(format!("density matrix trace {tr} differs from 1")));
        }
        let ev = self.min_eigenvalue();
        if ev.is_nan() || ev < POSITIVITY_TOL {
            return Err(Error::Solver(format!("density matrix has eigenvalue {ev:.3e}")));
        }
        Ok(())
    }

    /// Partial trace over atom and photon, returning phonon-number populations.
    pub fn phonon_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.n_phonon];
        for (i, p) in self.populations().into_iter().enumerate() {
            out[self.dims.decompose(i).2] += p;
        }
        out
    }
}

/// `tr(op ρ)`.
pub fn expect(op: &OperatorMatrix, rho: &DensityMatrix) -> Result<C64> {
    if op.dims() != rho.dims() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    // tr(Aρ) = Σ_ij A_ij ρ_ji
    Ok(op.matrix().iter().map(|(i, j, a)| a * rho.get(j, i)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, Level};

    #[test]
    fn expect_identity_is_one() {
        let dims = SpaceDims::eit(2, 3).unwrap();
        let ops = build_space(dims).unwrap();
        let rho = DensityMatrix::diagonal(dims, &vec![1.0; dims.total()]).unwrap();
        assert!((expect(&ops.identity, &rho).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn excited_population_of_ground_state() {
        let dims = SpaceDims::eit(2, 3).unwrap();
        let ops = build_space(dims).unwrap();
        let rho = DensityMatrix::basis_state(dims, dims.index(Level::G.index(), 0, 0));
        assert_eq!(expect(ops.sigma(Level::E, Level::E), &rho).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn thermal_phonon_mean() {
        // Geometric distribution with mean 1 truncated at 60 levels.
        let dims = SpaceDims::new(2, 1, 60).unwrap();
        let ops = build_space(dims).unwrap();
        let mut pops = vec![0.0; dims.total()];
        for n in 0..60 {
            pops[dims.index(0, 0, n)] = 0.5f64.powi(n as i32 + 1);
        }
        let rho = DensityMatrix::diagonal(dims, &pops).unwrap();
        let nb = expect(&ops.phonon_number(), &rho).unwrap();
        assert!((nb.re - 1.0).abs() < 1e-12);
        assert!(nb.im.abs() < 1e-15);
    }

    #[test]
    fn expect_rejects_mismatched_dims() {
        let ops = build_space(SpaceDims::eit(2, 3).unwrap()).unwrap();
        let rho = DensityMatrix::basis_state(SpaceDims::eit(2, 2).unwrap(), 0);
        assert!(expect(&ops.identity, &rho).is_err());
    }

    #[test]
    fn min_eigenvalue_of_mixed_state() {
        let dims = SpaceDims::sideband(1).unwrap();
        let rho = DensityMatrix::diagonal(dims, &[0.25, 0.75]).unwrap();
        assert!((rho.min_eigenvalue() - 0.25).abs() < 1e-14);
        rho.check_physical().unwrap();
    }
}
