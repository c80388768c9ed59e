//! Composite Hilbert space `atom ⊗ photon ⊗ phonon` and its elementary operators.
//!
//! Basis ordering is fixed: the atom index varies slowest and the phonon index
//! fastest, so the global index of `|i_atom, i_ph, i_b⟩` is
//! `((i_atom * n_photon) + i_ph) * n_phonon + i_b`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Internal level of the ion. In the two-level sideband space only `U` and `E` exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    U,
    E,
    G,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::U => 0,
            Level::E => 1,
            Level::G => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDims {
    pub n_atom: usize,
    pub n_photon: usize,
    pub n_phonon: usize,
}

impl SpaceDims {
    pub fn new(n_atom: usize, n_photon: usize, n_phonon: usize) -> Result<Self> {
        let dims = Self { n_atom, n_photon, n_phonon };
        dims.validate()?;
        Ok(dims)
    }

    /// Three-level EIT space.
    pub fn eit(n_photon: usize, n_phonon: usize) -> Result<Self> {
        Self::new(3, n_photon, n_phonon)
    }

    /// Two-level `{u, e}` space dressed with phonons, no cavity.
    pub fn sideband(n_phonon: usize) -> Result<Self> {
        Self::new(2, 1, n_phonon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atom == 0 || self.n_photon == 0 || self.n_phonon == 0 {
            return Err(Error::InvalidDims(format!(
                "all factors must be >= 1, got ({}, {}, {})",
                self.n_atom, self.n_photon, self.n_phonon
            )));
        }
        if !(2..=3).contains(&self.n_atom) {
            return Err(Error::InvalidDims(format!("n_atom must be 2 or 3, got {}", self.n_atom)));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.n_atom * self.n_photon * self.n_phonon
    }

    pub fn index(&self, atom: usize, photon: usize, phonon: usize) -> usize {
        (atom * self.n_photon + photon) * self.n_phonon + phonon
    }

    /// Inverse of [`SpaceDims::index`].
    pub fn decompose(&self, index: usize) -> (usize, usize, usize) {
        let phonon = index % self.n_phonon;
        let rest = index / self.n_phonon;
        (rest / self.n_photon, rest % self.n_photon, phonon)
    }

    pub fn factor(&self, slot: Slot) -> usize {
        match slot {
            Slot::Atom => self.n_atom,
            Slot::Photon => self.n_photon,
            Slot::Phonon => self.n_phonon,
        }
    }

    pub fn has_level(&self, level: Level) -> bool {
        level.index() < self.n_atom
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Atom,
    Photon,
    Phonon,
}

/// Operator on the full composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dims: SpaceDims,
    matrix: SparseMatrix,
}

impl OperatorMatrix {
    pub fn new(dims: SpaceDims, matrix: SparseMatrix) -> Result<Self> {
        if matrix.dim() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), found: matrix.dim() });
        }
        Ok(Self { dims, matrix })
    }

    pub fn zeros(dims: SpaceDims) -> Self {
        Self { dims, matrix: SparseMatrix::zeros(dims.total()) }
    }

    pub fn identity(dims: SpaceDims) -> Self {
        Self { dims, matrix: SparseMatrix::identity(dims.total()) }
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims, matrix: self.matrix.adjoint() }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.assert_same_space(other);
        Self { dims: self.dims, matrix: self.matrix.commutator(&other.matrix) }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.is_hermitian(tol)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dims: self.dims, matrix: self.matrix.scale(C64::new(s, 0.0)) }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.matrix.matvec(v, &mut out);
        out
    }

    fn assert_same_space(&self, other: &Self) {
        assert_eq!(self.dims, other.dims, "operators live on different spaces");
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        self.assert_same_space(rhs);
        OperatorMatrix { dims: self.dims, matrix: self.matrix.add(&rhs.matrix) }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        self.assert_same_space(rhs);
        OperatorMatrix { dims: self.dims, matrix: self.matrix.sub(&rhs.matrix) }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        self.assert_same_space(rhs);
        OperatorMatrix { dims: self.dims, matrix: self.matrix.matmul(&rhs.matrix) }
    }
}

impl Mul<&OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(self)
    }
}

/// Truncated annihilation operator on `n` Fock states.
pub fn destroy(n: usize) -> SparseMatrix {
    SparseMatrix::from_triplets(n, (1..n).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))))
}

/// `|i⟩⟨j|` on an `n`-level factor.
pub fn projector(n: usize, i: usize, j: usize) -> SparseMatrix {
    SparseMatrix::from_triplets(n, [(i, j, C64::new(1.0, 0.0))])
}

/// Embeds a single-factor operator as `1 ⊗ … ⊗ op ⊗ … ⊗ 1`.
pub fn tensor_embed(op: &SparseMatrix, slot: Slot, dims: SpaceDims) -> Result<OperatorMatrix> {
    dims.validate()?;
    let expected = dims.factor(slot);
    if op.dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: op.dim() });
    }
    let id = SparseMatrix::identity;
    let matrix = match slot {
        Slot::Atom => op.kron(&id(dims.n_photon)).kron(&id(dims.n_phonon)),
        Slot::Photon => id(dims.n_atom).kron(op).kron(&id(dims.n_phonon)),
        Slot::Phonon => id(dims.n_atom).kron(&id(dims.n_photon)).kron(op),
    };
    OperatorMatrix::new(dims, matrix)
}

/// Elementary operators on one composite space.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub dims: SpaceDims,
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub b: OperatorMatrix,
    pub b_dag: OperatorMatrix,
    pub identity: OperatorMatrix,
    sigmas: Vec<OperatorMatrix>,
}

impl OperatorSet {
    /// `|i⟩⟨j| ⊗ 1 ⊗ 1`. Panics if either level is absent from the space.
    pub fn sigma(&self, i: Level, j: Level) -> &OperatorMatrix {
        assert!(
            self.dims.has_level(i) && self.dims.has_level(j),
            "level missing from {}-level space",
            self.dims.n_atom
        );
        &self.sigmas[i.index() * self.dims.n_atom + j.index()]
    }

    pub fn photon_number(&self) -> OperatorMatrix {
        &self.a_dag * &self.a
    }

    pub fn phonon_number(&self) -> OperatorMatrix {
        &self.b_dag * &self.b
    }
}

pub fn build_space(dims: SpaceDims) -> Result<OperatorSet> {
    dims.validate()?;
    let a = tensor_embed(&destroy(dims.n_photon), Slot::Photon, dims)?;
    let b = tensor_embed(&destroy(dims.n_phonon), Slot::Phonon, dims)?;
    let mut sigmas = Vec::with_capacity(dims.n_atom * dims.n_atom);
    for i in 0..dims.n_atom {
        for j in 0..dims.n_atom {
            sigmas.push(tensor_embed(&projector(dims.n_atom, i, j), Slot::Atom, dims)?);
        }
    }
    Ok(OperatorSet {
        dims,
        a_dag: a.adjoint(),
        b_dag: b.adjoint(),
        a,
        b,
        identity: OperatorMatrix::identity(dims),
        sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEVELS: [Level; 3] = [Level::U, Level::E, Level::G];

    fn basis(dims: SpaceDims, atom: usize, ph: usize, b: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dims.total()];
        v[dims.index(atom, ph, b)] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn rejects_zero_sizes() {
        assert!(SpaceDims::new(3, 0, 2).is_err());
        assert!(SpaceDims::new(0, 2, 2).is_err());
        assert!(SpaceDims::new(3, 2, 0).is_err());
        let bad = SpaceDims { n_atom: 3, n_photon: 2, n_phonon: 0 };
        assert!(build_space(bad).is_err());
    }

    #[test]
    fn number_operator_annihilates_vacuum() {
        let dims = SpaceDims::eit(2, 2).unwrap();
        let ops = build_space(dims).unwrap();
        let n = ops.photon_number();
        for atom in 0..3 {
            for b in 0..2 {
                let out = n.apply(&basis(dims, atom, 0, b));
                assert!(out.iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn number_operator_eigenvalue_one() {
        let dims = SpaceDims::eit(4, 1).unwrap();
        let ops = build_space(dims).unwrap();
        let n = ops.photon_number();
        let i = dims.index(0, 1, 0);
        assert_eq!(n.get(i, i), C64::new(1.0, 0.0));
    }

    #[test]
    fn ccr_fails_only_at_top_fock_level() {
        let dims = SpaceDims::eit(4, 4).unwrap();
        let ops = build_space(dims).unwrap();
        let defect = &ops.a.commutator(&ops.a_dag) - &ops.identity;
        for (r, c, v) in defect.matrix().iter().filter(|e| e.2.norm() > 1e-12) {
            assert_eq!(r, c);
            let (_, ph, _) = dims.decompose(r);
            assert_eq!(ph, dims.n_photon - 1, "nonzero defect {v} below cutoff");
        }
        // The top level carries exactly -n_photon.
        let top = dims.index(1, 3, 2);
        assert!((defect.get(top, top) - C64::new(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sigma_products_follow_projector_algebra() {
        let dims = SpaceDims::eit(2, 2).unwrap();
        let ops = build_space(dims).unwrap();
        for i in LEVELS {
            for j in LEVELS {
                for k in LEVELS {
                    for l in LEVELS {
                        let prod = ops.sigma(i, j) * ops.sigma(k, l);
                        let expected = if j == k { ops.sigma(i, l).clone() } else { OperatorMatrix::zeros(dims) };
                        assert_eq!(prod, expected);
                    }
                }
            }
        }
    }

    #[test]
    fn photon_and_phonon_operators_commute() {
        let dims = SpaceDims::eit(3, 4).unwrap();
        let ops = build_space(dims).unwrap();
        for x in [&ops.a, &ops.a_dag] {
            for y in [&ops.b, &ops.b_dag] {
                assert_eq!(x.commutator(y).norm(), 0.0);
            }
        }
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let dims = SpaceDims::eit(3, 5).unwrap();
        let e = tensor_embed(&SparseMatrix::identity(3), Slot::Photon, dims).unwrap();
        assert_eq!(e, OperatorMatrix::identity(dims));
    }

    #[test]
    fn embed_sigma_ee_trace() {
        let dims = SpaceDims::eit(3, 5).unwrap();
        let e = tensor_embed(&projector(3, 1, 1), Slot::Atom, dims).unwrap();
        assert_eq!(e.trace(), C64::new(15.0, 0.0));
    }

    #[test]
    fn embed_photon_annihilator_matrix_element() {
        let dims = SpaceDims::eit(3, 2).unwrap();
        let a = tensor_embed(&destroy(3), Slot::Photon, dims).unwrap();
        // ⟨u,0,0| A |u,1,0⟩ sits at global indices 0 and n_phonon.
        assert_eq!(dims.index(0, 1, 0), 2);
        assert_eq!(a.get(0, 2), C64::new(1.0, 0.0));
    }

    #[test]
    fn embed_rejects_wrong_factor_size() {
        let dims = SpaceDims::eit(3, 5).unwrap();
        assert!(matches!(
            tensor_embed(&destroy(4), Slot::Photon, dims),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn index_round_trip() {
        let dims = SpaceDims::eit(4, 7).unwrap();
        for i in 0..dims.total() {
            let (a, p, b) = dims.decompose(i);
            assert_eq!(dims.index(a, p, b), i);
        }
    }
}
