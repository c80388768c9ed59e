//! Sparse linear systems `(A + x·B) v = r` solved repeatedly for many `x`,
//! sharing one symbolic LU analysis.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use num_complex::Complex64 as C64;

use super::steady::DENSE_FALLBACK_LIMIT;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Row `row` of the system is overwritten by ones at `cols` (a trace functional).
#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    pub row: usize,
    pub cols: Vec<usize>,
}

#[derive(Clone)]
pub(crate) struct LinearFamily {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals_a: Vec<C64>,
    vals_b: Vec<C64>,
    symbolic: Option<SymbolicLu<usize>>,
}

enum Factor {
    Sparse(Lu<usize, C64>),
    Dense(faer::linalg::solvers::FullPivLu<C64>),
}

/// Numeric factorization of one member of the family.
pub(crate) struct Factored {
    factor: Factor,
    n: usize,
}

impl Factored {
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let mut b = Mat::<C64>::from_fn(self.n, 1, |i, _| rhs[i]);
        match &self.factor {
            Factor::Sparse(lu) => lu.solve_in_place(b.as_mut()),
            Factor::Dense(lu) => lu.solve_in_place(b.as_mut()),
        }
        (0..self.n).map(|i| b[(i, 0)]).collect()
    }
}

impl LinearFamily {
    pub fn new(a: &SparseMatrix, b: &SparseMatrix, constraint: Option<&Constraint>) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        let n = a.dim();
        let zero = C64::new(0.0, 0.0);
        let skip = constraint.map(|c| c.row);
        // (col, row, a, b)
        let mut entries: Vec<(usize, usize, C64, C64)> = Vec::with_capacity(a.nnz() + b.nnz() + n);
        entries.extend(a.iter().filter(|e| Some(e.0) != skip).map(|(r, c, v)| (c, r, v, zero)));
        entries.extend(b.iter().filter(|e| Some(e.0) != skip).map(|(r, c, v)| (c, r, zero, v)));
        if let Some(c) = constraint {
            entries.extend(c.cols.iter().map(|&col| (col, c.row, C64::new(1.0, 0.0), zero)));
        }
        entries.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut vals_a: Vec<C64> = Vec::with_capacity(entries.len());
        let mut vals_b: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (c, r, va, vb) in entries {
            if last == Some((c, r)) {
                *vals_a.last_mut().expect("previous entry") += va;
                *vals_b.last_mut().expect("previous entry") += vb;
            } else {
                col_ptr[c + 1] += 1;
                row_idx.push(r);
                vals_a.push(va);
                vals_b.push(vb);
                last = Some((c, r));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let symbolic = SymbolicLu::try_new(SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx)).ok();
        Ok(Self { n, col_ptr, row_idx, vals_a, vals_b, symbolic })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn values(&self, x: f64) -> Vec<C64> {
        self.vals_a.iter().zip(&self.vals_b).map(|(a, b)| a + b * x).collect()
    }

    /// Sparse LU of `A + x·B`; the dense full-pivot path is used when the
    /// sparse one fails and the system is small enough.
    pub fn factor(&self, x: f64) -> Result<Factored> {
        let vals = self.values(x);
        let sparse = self.symbolic.as_ref().and_then(|symbolic| {
            let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx);
            Lu::try_new_with_symbolic(symbolic.clone(), SparseColMatRef::new(sym, &vals)).ok()
        });
        match sparse {
            Some(lu) => Ok(Factored { factor: Factor::Sparse(lu), n: self.n }),
            None => self.factor_dense(&vals),
        }
    }

    /// Dense full-pivot factorization with a rank check on the pivots.
    pub fn factor_dense_at(&self, x: f64) -> Result<Factored> {
        self.factor_dense(&self.values(x))
    }

    fn factor_dense(&self, vals: &[C64]) -> Result<Factored> {
        let n = self.n;
        if n > DENSE_FALLBACK_LIMIT {
            return Err(Error::Solver(format!("sparse LU failed and dimension {n} exceeds the dense limit")));
        }
        let mut m = Mat::<C64>::zeros(n, n);
        for c in 0..n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                m[(self.row_idx[k], c)] = vals[k];
            }
        }
        let lu = m.full_piv_lu();
        let pivots: Vec<f64> = (0..n).map(|i| lu.U()[(i, i)].norm()).collect();
        let largest = pivots.iter().copied().fold(0.0, f64::max);
        let smallest = pivots.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smallest > 1e-12 * largest) {
            return Err(Error::NonUniqueSteadyState { residual: f64::NAN });
        }
        Ok(Factored { factor: Factor::Dense(lu), n })
    }
}
