use num_complex::Complex64 as C64;

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, SpaceDims};
use crate::model::Channel;
use crate::sparse::SparseMatrix;

/// Vectorized generator `dvec(ρ)/dt = L vec(ρ)`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dims: SpaceDims,
    superop: SparseMatrix,
}

impl Liouvillian {
    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn superop(&self) -> &SparseMatrix {
        &self.superop
    }

    /// Frobenius norm of the superoperator.
    pub fn norm(&self) -> f64 {
        self.superop.norm()
    }

    pub fn apply_vec(&self, x: &[C64], y: &mut [C64]) {
        self.superop.matvec(x, y);
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); rho.as_slice().len()];
        self.superop.matvec(rho.as_slice(), &mut out);
        out
    }

    /// Sum of two generators on the same space.
    pub fn plus(&self, other: &Liouvillian) -> Result<Liouvillian> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.total(), found: other.dims.total() });
        }
        Ok(Liouvillian { dims: self.dims, superop: self.superop.add(&other.superop) })
    }

    pub fn scaled(&self, s: f64) -> Liouvillian {
        Liouvillian { dims: self.dims, superop: self.superop.scale(C64::new(s, 0.0)) }
    }
}

/// `−i[H,·] + Σ_k r_k (2A_k·A_k† − A_k†A_k· − ·A_k†A_k)`; zero-rate channels are skipped.
pub fn build_liouvillian(h: &OperatorMatrix, channels: &[Channel]) -> Result<Liouvillian> {
    let dims = h.dims();
    let d = dims.total();
    for ch in channels {
        if ch.op.dims() != dims {
            return Err(Error::DimensionMismatch { expected: d, found: ch.op.dim() });
        }
    }
    let id = SparseMatrix::identity(d);
    let hm = h.matrix();
    let mi = C64::new(0.0, -1.0);
    let mut superop = id.kron(hm).sub(&hm.transpose().kron(&id)).scale(mi);
    for ch in channels.iter().filter(|c| c.rate != 0.0) {
        let a = ch.op.matrix();
        let ada = a.adjoint().matmul(a);
        let jump = a.conj().kron(a).scale(C64::new(2.0, 0.0));
        let anti = id.kron(&ada).add(&ada.transpose().kron(&id));
        superop = superop.add(&jump.sub(&anti).scale(C64::new(ch.rate, 0.0)));
    }
    Ok(Liouvillian { dims, superop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DensityMatrix;
    use crate::hilbert::{build_space, Level, SpaceDims};
    use crate::model::{dissipators, hamiltonian_thermal, SystemParams};
    use faer::Mat;

    fn random_state(dims: SpaceDims, seed: u64) -> DensityMatrix {
        // ρ = M M† / tr, with M from a small LCG.
        let d = dims.total();
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m: Vec<C64> = (0..d * d).map(|_| C64::new(next(), next())).collect();
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += m[i * d + k] * m[j * d + k].conj();
                }
                rho[j * d + i] = acc;
            }
        }
        let tr: C64 = (0..d).map(|i| rho[i * d + i]).sum();
        rho.iter_mut().for_each(|v| *v /= tr);
        DensityMatrix::from_vec(dims, rho).unwrap()
    }

    fn trace_of(dims: SpaceDims, v: &[C64]) -> C64 {
        let d = dims.total();
        (0..d).map(|i| v[i * d + i]).sum()
    }

    #[test]
    fn zero_generator() {
        let dims = SpaceDims::eit(2, 2).unwrap();
        let l = build_liouvillian(&OperatorMatrix::zeros(dims), &[]).unwrap();
        assert_eq!(l.superop().nnz(), 0);
    }

    #[test]
    fn preserves_trace_of_random_states() {
        let p = SystemParams { dims: SpaceDims::eit(3, 3).unwrap(), delta_p: 0.3, ..SystemParams::default() };
        let l = build_liouvillian(&hamiltonian_thermal(&p).unwrap(), &dissipators(&p).unwrap()).unwrap();
        for seed in 1..4 {
            let rho = random_state(p.dims, seed);
            assert!(trace_of(p.dims, &l.apply(&rho)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_master_equation() {
        let p = SystemParams { dims: SpaceDims::eit(2, 2).unwrap(), delta_p: -0.2, ..SystemParams::default() };
        let h = hamiltonian_thermal(&p).unwrap();
        let ch = dissipators(&p).unwrap();
        let l = build_liouvillian(&h, &ch).unwrap();
        let rho = random_state(p.dims, 7);
        let d = p.dims.total();
        let dense = |m: &SparseMatrix| {
            let v = m.to_dense();
            Mat::<C64>::from_fn(d, d, |i, j| v[i * d + j])
        };
        let r = Mat::<C64>::from_fn(d, d, |i, j| rho.get(i, j));
        let hd = dense(h.matrix());
        let mut rhs = (&hd * &r - &r * &hd) * faer::Scale(C64::new(0.0, -1.0));
        for c in ch.iter() {
            let a = dense(c.op.matrix());
            let ad = a.adjoint().to_owned();
            let ada = &ad * &a;
            let term = (&a * &r * &ad) * faer::Scale(C64::new(2.0, 0.0)) - &ada * &r - &r * &ada;
            rhs += term * faer::Scale(C64::new(c.rate, 0.0));
        }
        let lv = l.apply(&rho);
        for i in 0..d {
            for j in 0..d {
                assert!((lv[j * d + i] - rhs[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_nonzero_eigenvalue_at_origin() {
        // d = 3·2·4 = 24
        let p = SystemParams { dims: SpaceDims::eit(2, 4).unwrap(), delta_p: 0.1, ..SystemParams::default() };
        let l = build_liouvillian(&hamiltonian_thermal(&p).unwrap(), &dissipators(&p).unwrap()).unwrap();
        let n = l.superop().dim();
        let dense = l.superop().to_dense();
        let m = Mat::<C64>::from_fn(n, n, |i, j| dense[i * n + j]);
        let ev = m.eigenvalues().unwrap();
        let zeros = ev.iter().filter(|z| z.norm() < 1e-9).count();
        assert_eq!(zeros, 1);
        assert!(ev.iter().filter(|z| z.norm() >= 1e-9).all(|z| z.re < 0.0));
    }

    #[test]
    fn rejects_channel_on_other_space() {
        let dims = SpaceDims::eit(2, 2).unwrap();
        let other = build_space(SpaceDims::eit(2, 3).unwrap()).unwrap();
        let ch = Channel { label: "x", op: other.sigma(Level::G, Level::E).clone(), rate: 1.0 };
        assert!(build_liouvillian(&OperatorMatrix::zeros(dims), &[ch]).is_err());
    }
}
