//! Steady state under a weak coherent drive, to second order in the drive.
//!
//! The undriven generator must conserve an integer charge `q` that is diagonal
//! in the basis: every Hamiltonian element connects equal charges and every
//! jump operator shifts the charge by a fixed amount. Then `L0` is block
//! diagonal in `m = q_row − q_col` and a drive `ε(X + X†)`, with `X` raising the
//! charge by one, only couples neighbouring blocks:
//!
//! ```text
//! L0 ρ0 = 0,            tr ρ0 = 1      (m = 0)
//! L0 ρ1 = i[X, ρ0],                    (m = +1; the m = −1 part is ρ1†)
//! L0 ρ2 = i[X†, ρ1] + h.c., tr ρ2 = 0  (m = 0)
//! ```
//!
//! Charge-conserving observables then read `⟨O⟩ = tr Oρ0 + ε² tr Oρ2 + O(ε⁴)`.
//! Only the `m = 0` and `m = 1` blocks are ever assembled, which is what makes
//! large phonon cutoffs affordable.

use num_complex::Complex64 as C64;

use super::family::{Constraint, Factored, LinearFamily};
use super::steady::RESIDUAL_TOL;
use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, SpaceDims};
use crate::model::Channel;
use crate::sparse::SparseMatrix;

const ABSENT: u32 = u32::MAX;

#[derive(Clone)]
struct Block {
    positions: Vec<(usize, usize)>,
    base: SparseMatrix,
    slope: SparseMatrix,
    family: LinearFamily,
}

/// Second-order weak-drive steady states of `H0 + x·G` with fixed channels.
#[derive(Clone)]
pub struct WeakDriveFamily {
    dims: SpaceDims,
    charge: Vec<i64>,
    zero: Block,
    one: Block,
    trace_row: usize,
    raise: SparseMatrix,
    lower: SparseMatrix,
}

/// `ρ0` and the second-order correction `ρ2`, both on the `m = 0` block.
#[derive(Clone, Debug)]
pub struct WeakDriveState {
    dims: SpaceDims,
    positions: Vec<(usize, usize)>,
    rho0: Vec<C64>,
    rho2: Vec<C64>,
}

impl WeakDriveState {
    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    fn trace_with(&self, op: &OperatorMatrix, v: &[C64]) -> C64 {
        self.positions.iter().zip(v).map(|(&(i, j), &r)| op.get(j, i) * r).sum()
    }

    /// `tr(O ρ0)`, the undriven expectation.
    pub fn expect_undriven(&self, op: &OperatorMatrix) -> C64 {
        self.trace_with(op, &self.rho0)
    }

    /// Coefficient of `ε²` in `⟨O⟩`.
    pub fn expect_second_order(&self, op: &OperatorMatrix) -> C64 {
        self.trace_with(op, &self.rho2)
    }

    /// `⟨O⟩` to second order in the drive amplitude.
    pub fn expect(&self, op: &OperatorMatrix, epsilon: f64) -> C64 {
        self.expect_undriven(op) + self.expect_second_order(op) * (epsilon * epsilon)
    }
}

fn check_charge(op: &SparseMatrix, charge: &[i64], what: &str) -> Result<Option<i64>> {
    let mut shift = None;
    for (r, c, v) in op.iter() {
        if v.norm() == 0.0 {
            continue;
        }
        let s = charge[r] - charge[c];
        match shift {
            None => shift = Some(s),
            Some(t) if t == s => {}
            Some(_) => return Err(Error::InvalidParameter(format!("{what} does not shift the charge uniformly"))),
        }
    }
    Ok(shift)
}

impl WeakDriveFamily {
    /// `raise` is `X` in the drive `ε(X + X†)` and must raise the charge by one.
    pub fn new(
        h0: &OperatorMatrix,
        generator: &OperatorMatrix,
        channels: &[Channel],
        raise: &OperatorMatrix,
        charge: &[i64],
    ) -> Result<Self> {
        let dims = h0.dims();
        let d = dims.total();
        if charge.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: charge.len() });
        }
        for op in [generator, raise].into_iter().chain(channels.iter().map(|c| &c.op)) {
            if op.dims() != dims {
                return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
            }
        }
        for (m, what) in [(h0, "hamiltonian"), (generator, "detuning generator")] {
            if check_charge(m.matrix(), charge, what)?.is_some_and(|s| s != 0) {
                return Err(Error::InvalidParameter(format!("{what} does not conserve the charge")));
            }
        }
        for c in channels {
            check_charge(c.op.matrix(), charge, c.label)?;
        }
        if check_charge(raise.matrix(), charge, "drive")? != Some(1) {
            return Err(Error::InvalidParameter("drive must raise the charge by one".into()));
        }

        let mut lookup = vec![ABSENT; d * d];
        let mut pos = [Vec::new(), Vec::new()];
        for j in 0..d {
            for i in 0..d {
                let m = charge[i] - charge[j];
                if m == 0 || m == 1 {
                    let b = &mut pos[m as usize];
                    lookup[j * d + i] = b.len() as u32;
                    b.push((i, j));
                }
            }
        }
        let [p0, p1] = pos;
        let active: Vec<&Channel> = channels.iter().filter(|c| c.rate != 0.0).collect();
        let build = |positions: Vec<(usize, usize)>, constraint: Option<Constraint>| -> Result<Block> {
            let base = block_superop(h0.matrix(), &active, &positions, &lookup, d)?;
            let slope = block_superop(generator.matrix(), &[], &positions, &lookup, d)?;
            let family = LinearFamily::new(&base, &slope, constraint.as_ref())?;
            Ok(Block { positions, base, slope, family })
        };
        let trace_row = lookup[0] as usize;
        let trace = Constraint { row: trace_row, cols: (0..d).map(|i| lookup[i * d + i] as usize).collect() };
        let zero = build(p0, Some(trace))?;
        let one = build(p1, None)?;
        Ok(Self {
            dims,
            charge: charge.to_vec(),
            zero,
            one,
            trace_row,
            raise: raise.matrix().clone(),
            lower: raise.matrix().adjoint(),
        })
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    /// Sizes of the `m = 0` and `m = 1` blocks.
    pub fn block_sizes(&self) -> (usize, usize) {
        (self.zero.positions.len(), self.one.positions.len())
    }

    pub fn solve(&self, x: f64) -> Result<WeakDriveState> {
        let d = self.dims.total();
        let f0 = factor(&self.zero.family, x)?;
        let mut rhs = vec![C64::new(0.0, 0.0); self.zero.positions.len()];
        rhs[self.trace_row] = C64::new(1.0, 0.0);
        let rho0 = f0.solve(&rhs);
        let max_entry = rho0.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !max_entry.is_finite() || max_entry > 1.0 + 1e-6 {
            return Err(Error::NonUniqueSteadyState { residual: f64::NAN });
        }
        check_residual(&self.zero, x, &rho0, &vec![C64::new(0.0, 0.0); rho0.len()])?;

        // ρ1 on m = +1.
        let dense0 = self.scatter(&self.zero.positions, &rho0);
        let i = C64::new(0.0, 1.0);
        let comm = commutator_dense(&self.raise, &dense0, d);
        let rhs1: Vec<C64> = self.one.positions.iter().map(|&(r, c)| i * comm[c * d + r]).collect();
        let f1 = factor(&self.one.family, x)?;
        let rho1 = f1.solve(&rhs1);
        check_residual(&self.one, x, &rho1, &rhs1)?;

        // ρ2 on m = 0, driven by i[X†, ρ1⁺] + h.c.
        let dense1 = self.scatter(&self.one.positions, &rho1);
        let comm = commutator_dense(&self.lower, &dense1, d);
        let mut rhs2: Vec<C64> = self
            .zero
            .positions
            .iter()
            .map(|&(r, c)| i * comm[c * d + r] + (i * comm[r * d + c]).conj())
            .collect();
        let full_rhs2 = rhs2.clone();
        rhs2[self.trace_row] = C64::new(0.0, 0.0);
        let rho2 = f0.solve(&rhs2);
        check_residual(&self.zero, x, &rho2, &full_rhs2)?;

        Ok(WeakDriveState { dims: self.dims, positions: self.zero.positions.clone(), rho0, rho2 })
    }

    fn scatter(&self, positions: &[(usize, usize)], v: &[C64]) -> Vec<C64> {
        let d = self.dims.total();
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for (&(r, c), &z) in positions.iter().zip(v) {
            out[c * d + r] = z;
        }
        out
    }

    /// Charge of each basis state, as supplied.
    pub fn charge(&self) -> &[i64] {
        &self.charge
    }
}

fn factor(family: &LinearFamily, x: f64) -> Result<Factored> {
    match family.factor(x) {
        Ok(f) => Ok(f),
        Err(e) => family.factor_dense_at(x).map_err(|_| e),
    }
}

fn check_residual(block: &Block, x: f64, v: &[C64], rhs: &[C64]) -> Result<()> {
    let n = v.len();
    let mut r0 = vec![C64::new(0.0, 0.0); n];
    let mut r1 = vec![C64::new(0.0, 0.0); n];
    block.base.matvec(v, &mut r0);
    block.slope.matvec(v, &mut r1);
    let residual = (0..n).map(|k| (r0[k] + r1[k] * x - rhs[k]).norm_sqr()).sum::<f64>().sqrt();
    let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = (block.base.norm() + x.abs() * block.slope.norm()) * vnorm + rnorm;
    if !(residual <= RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotConverged { residual });
    }
    Ok(())
}

/// `Aρ − ρA` for column-major dense `ρ`.
fn commutator_dense(a: &SparseMatrix, rho: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    for (r, c, v) in a.iter() {
        // (Aρ)_{r,j} += A_{rc} ρ_{c,j};  (ρA)_{i,c} += ρ_{i,r} A_{rc}
        for j in 0..d {
            out[j * d + r] += v * rho[j * d + c];
        }
        for i in 0..d {
            out[c * d + i] -= rho[r * d + i] * v;
        }
    }
    out
}

/// Restriction of `ρ ↦ −i(Hρ − ρH) + Σ r(2AρA† − A†Aρ − ρA†A)` to one block.
fn block_superop(
    h: &SparseMatrix,
    channels: &[&Channel],
    positions: &[(usize, usize)],
    lookup: &[u32],
    d: usize,
) -> Result<SparseMatrix> {
    let i = C64::new(0.0, 1.0);
    // K = H − i Σ r A†A, so the no-jump part is −iKρ + iρK†.
    let mut k = h.clone();
    for c in channels {
        let ada = c.op.matrix().adjoint().matmul(c.op.matrix());
        k = k.sub(&ada.scale(i * c.rate));
    }
    let n = positions.len();
    let mut trip = Vec::new();
    let mut push = |row: usize, ri: usize, rj: usize, v: C64| -> Result<()> {
        let col = lookup[rj * d + ri];
        if col == ABSENT || positions.get(col as usize) != Some(&(ri, rj)) {
            return Err(Error::InvalidParameter("generator leaks out of its charge block".into()));
        }
        trip.push((row, col as usize, v));
        Ok(())
    };
    for (row, &(a, b)) in positions.iter().enumerate() {
        for (l, v) in k.row(a) {
            push(row, l, b, -i * v)?;
        }
        for (l, v) in k.row(b) {
            push(row, a, l, i * v.conj())?;
        }
        for c in channels {
            let op = c.op.matrix();
            for (ka, va) in op.row(a) {
                for (kb, vb) in op.row(b) {
                    push(row, ka, kb, va * vb.conj() * (2.0 * c.rate))?;
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(n, trip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_liouvillian, expect, steady_state};
    use crate::hilbert::{build_space, Level};
    use crate::model::{channels_on, detuning_generator, static_hamiltonian, ModelKind, SystemParams};

    fn thermal_charge(dims: SpaceDims) -> Vec<i64> {
        (0..dims.total())
            .map(|k| {
                let (atom, ph, b) = dims.decompose(k);
                ph as i64 + i64::from(atom == Level::E.index()) - b as i64
            })
            .collect()
    }

    #[test]
    fn matches_exact_steady_state_at_weak_drive() {
        let dims = SpaceDims::eit(3, 5).unwrap();
        let eps = 1e-3;
        let p = SystemParams { epsilon: eps, dims, ..SystemParams::default() };
        let ops = build_space(dims).unwrap();
        let ch = channels_on(&p, &ops, true);
        let undriven = SystemParams { epsilon: 0.0, ..p.clone() };
        let h0 = static_hamiltonian(&undriven, ModelKind::Thermal, &ops).unwrap();
        let gen = detuning_generator(&ops);
        let weak = WeakDriveFamily::new(&h0, &gen, &ch, &ops.a_dag, &thermal_charge(dims)).unwrap();
        for delta in [-1.1, 0.0, 0.3] {
            let h = static_hamiltonian(&p, ModelKind::Thermal, &ops).unwrap();
            let h = &h + &gen.scale(delta);
            let exact = steady_state(&build_liouvillian(&h, &ch).unwrap()).unwrap();
            let n_exact = expect(&ops.photon_number(), &exact).unwrap().re;
            let state = weak.solve(delta).unwrap();
            let n_weak = state.expect(&ops.photon_number(), eps).re;
            assert!((n_weak / n_exact - 1.0).abs() < 1e-4, "Δ={delta}: {n_weak} vs {n_exact}");
            let b_exact = expect(&ops.phonon_number(), &exact).unwrap().re;
            assert!((state.expect(&ops.phonon_number(), eps).re - b_exact).abs() < 1e-8);
            assert!((state.expect_undriven(&ops.identity).re - 1.0).abs() < 1e-12);
            assert!(state.expect_second_order(&ops.identity).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_conserving_hamiltonian() {
        let dims = SpaceDims::eit(2, 2).unwrap();
        let ops = build_space(dims).unwrap();
        let h = &ops.a + &ops.a_dag;
        let err = WeakDriveFamily::new(&h, &h, &[], &ops.a_dag, &thermal_charge(dims));
        assert!(err.is_err());
    }
}
