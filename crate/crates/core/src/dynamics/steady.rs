use num_complex::Complex64 as C64;

use super::family::{Constraint, Factored, LinearFamily};
use super::{DensityMatrix, Liouvillian};
use crate::error::{Error, Result};
use crate::hilbert::SpaceDims;
use crate::sparse::SparseMatrix;

/// Largest system solved densely when the sparse path fails.
pub const DENSE_FALLBACK_LIMIT: usize = 4096;

/// Relative residual bound `‖Lρ‖ < RESIDUAL_TOL · ‖L‖`.
pub(crate) const RESIDUAL_TOL: f64 = 1e-9;

/// Bound on `‖M⁻¹p‖·‖L‖` above which the bordered system counts as singular.
const SINGULAR_GAIN: f64 = 1e12;

/// A one-parameter family `L(x) = L0 + x·L1` solved for its steady state.
///
/// The first row of `L(x)` is replaced by the trace functional, so the solve is
/// `M x = e₁`. The union sparsity pattern is analysed once and reused for every
/// value of `x`.
#[derive(Clone)]
pub struct SteadyStateFamily {
    dims: SpaceDims,
    base: SparseMatrix,
    slope: SparseMatrix,
    family: LinearFamily,
    norm_base: f64,
    norm_slope: f64,
}

impl SteadyStateFamily {
    pub fn new(base: &Liouvillian, slope: &Liouvillian) -> Result<Self> {
        if base.dims() != slope.dims() {
            return Err(Error::DimensionMismatch { expected: base.dims().total(), found: slope.dims().total() });
        }
        let dims = base.dims();
        let d = dims.total();
        let trace = Constraint { row: 0, cols: (0..d).map(|k| k * (d + 1)).collect() };
        let family = LinearFamily::new(base.superop(), slope.superop(), Some(&trace))?;
        Ok(Self {
            dims,
            base: base.superop().clone(),
            slope: slope.superop().clone(),
            family,
            norm_base: base.norm(),
            norm_slope: slope.norm(),
        })
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    /// Steady state of `L0 + x·L1`.
    pub fn solve(&self, x: f64) -> Result<DensityMatrix> {
        let n = self.family.dim();
        let mut rhs = vec![C64::new(0.0, 0.0); n];
        rhs[0] = C64::new(1.0, 0.0);
        let attempt = match self.family.factor(x) {
            Ok(f) => self.accept(&f, &rhs, x),
            Err(e) => Err(e),
        };
        match attempt {
            Err(e) if n <= DENSE_FALLBACK_LIMIT => {
                let f = self.family.factor_dense_at(x).map_err(|_| e)?;
                self.accept(&f, &rhs, x)
            }
            other => other,
        }
    }

    fn accept(&self, f: &Factored, rhs: &[C64], x: f64) -> Result<DensityMatrix> {
        let v = f.solve(rhs);
        let n = v.len();
        let scale = self.norm_base + x.abs() * self.norm_slope;
        // A null space wider than one leaves the bordered system singular, which
        // rounding can hide from the solution itself but not from a generic probe.
        if probe_gain(f, n) * scale > SINGULAR_GAIN {
            return Err(Error::NonUniqueSteadyState { residual: f64::NAN });
        }
        // Any valid density matrix has |ρ_ij| ≤ 1; blow-up means a singular system.
        let max_entry = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !max_entry.is_finite() || max_entry > 1.0 + 1e-6 {
            return Err(Error::NonUniqueSteadyState { residual: f64::NAN });
        }
        let mut r0 = vec![C64::new(0.0, 0.0); n];
        let mut r1 = vec![C64::new(0.0, 0.0); n];
        self.base.matvec(&v, &mut r0);
        self.slope.matvec(&v, &mut r1);
        let residual = r0.iter().zip(&r1).map(|(a, b)| (a + b * x).norm_sqr()).sum::<f64>().sqrt();
        if residual > RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotConverged { residual });
        }
        let rho = DensityMatrix::from_vec(self.dims, v)?;
        Ok(hermitize(rho))
    }
}

/// `max|M⁻¹p|` for a fixed generic unit-size `p`. Stays finite and moderate
/// only when the factored system is nonsingular.
fn probe_gain(f: &Factored, n: usize) -> f64 {
    let probe: Vec<C64> = (0..n)
        .map(|k| {
            let t = (k as f64 + 1.0) * 0.618_033_988_749_895;
            C64::new((t * 12.9898).sin(), (t * 78.233).cos())
        })
        .collect();
    f.solve(&probe).iter().map(|z| z.norm()).fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

fn hermitize(rho: DensityMatrix) -> DensityMatrix {
    let dims = rho.dims();
    let d = dims.total();
    let mut v = rho.into_vec();
    for j in 0..d {
        for i in 0..j {
            let avg = 0.5 * (v[j * d + i] + v[i * d + j].conj());
            v[j * d + i] = avg;
            v[i * d + j] = avg.conj();
        }
        v[j * d + j] = C64::new(v[j * d + j].re, 0.0);
    }
    DensityMatrix::from_vec(dims, v).expect("same length")
}

/// Unique steady state of `L`, normalized to unit trace.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let zero = l.scaled(0.0);
    SteadyStateFamily::new(l, &zero)?.solve(0.0)
}
