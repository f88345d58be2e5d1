//! Sparse and dense matrices, the sparse-plus-dense-block operator used by
//! the nonlocal boundary term, and symmetric positive definite solvers.

mod cg;
mod dense;
mod sparse;

pub use cg::{pcg, solve_direct, solve_spd, SolveOptions, SolveStats, DIRECT_LIMIT};
pub use dense::{Cholesky, DenseMatrix};
pub use sparse::{CsrMatrix, Triplets};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Square operator with a matrix-vector product and a readable diagonal.
pub trait LinearOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn mul_vec(&self, x: &[T], y: &mut [T]);
    fn diagonal(&self) -> Vec<T>;

    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.mul_vec(x, &mut y);
        y
    }

    fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.apply(x))
    }

    /// Column-by-column materialization.
    fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut d = DenseMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.apply(&e);
            for i in 0..n {
                d[(i, j)] = col[i];
            }
            e[j] = T::zero();
        }
        d
    }
}

impl<T: Real> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.rows
    }
    fn mul_vec(&self, x: &[T], y: &mut [T]) {
        CsrMatrix::mul_vec(self, x, y)
    }
    fn diagonal(&self) -> Vec<T> {
        CsrMatrix::diagonal(self)
    }
}

impl<T: Real> LinearOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.rows
    }
    fn mul_vec(&self, x: &[T], y: &mut [T]) {
        DenseMatrix::mul_vec(self, x, y)
    }
    fn diagonal(&self) -> Vec<T> {
        DenseMatrix::diagonal(self)
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Sparse matrix plus a dense block acting on the index list `dofs`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOperator<T> {
    pub sparse: CsrMatrix<T>,
    pub block: DenseMatrix<T>,
    pub dofs: Vec<usize>,
}

impl<T: Real> HybridOperator<T> {
    pub fn new(sparse: CsrMatrix<T>, block: DenseMatrix<T>, dofs: Vec<usize>) -> Result<Self> {
        if sparse.rows != sparse.cols {
            return Err(invalid("sparse part must be square"));
        }
        if block.rows != dofs.len() || block.cols != dofs.len() {
            return Err(invalid(format!("dense block is {}x{} for {} dofs", block.rows, block.cols, dofs.len())));
        }
        let mut seen = vec![false; sparse.rows];
        for &d in &dofs {
            if d >= sparse.rows || std::mem::replace(&mut seen[d], true) {
                return Err(invalid(format!("block dof {d} is out of range or repeated")));
            }
        }
        Ok(Self { sparse, block, dofs })
    }

    pub fn from_sparse(sparse: CsrMatrix<T>) -> Self {
        Self { sparse, block: DenseMatrix::zeros(0, 0), dofs: Vec::new() }
    }

    /// `alpha·self + beta·other`, the dense block scaled by `alpha`.
    pub fn combine(&self, alpha: T, other: &CsrMatrix<T>, beta: T) -> Self {
        let mut block = self.block.clone();
        for v in &mut block.data {
            *v *= alpha;
        }
        Self { sparse: self.sparse.add(alpha, other, beta), block, dofs: self.dofs.clone() }
    }

    /// Restriction to the index list `keep`.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.sparse.rows];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let kept: Vec<usize> = (0..self.dofs.len()).filter(|&k| map[self.dofs[k]] != usize::MAX).collect();
        let block = DenseMatrix::from_fn(kept.len(), kept.len(), |a, b| self.block[(kept[a], kept[b])]);
        Self { sparse: self.sparse.submatrix(keep), block, dofs: kept.iter().map(|&k| map[self.dofs[k]]).collect() }
    }

    pub fn max_asymmetry(&self) -> T {
        self.sparse.max_asymmetry() + self.block.max_asymmetry()
    }

    /// Largest absolute entry of either part; used as a scale for symmetry checks.
    pub fn max_abs(&self) -> T {
        self.sparse.max_abs().max(self.block.max_abs())
    }
}

impl<T: Real> LinearOperator<T> for HybridOperator<T> {
    fn dim(&self) -> usize {
        self.sparse.rows
    }

    fn mul_vec(&self, x: &[T], y: &mut [T]) {
        self.sparse.mul_vec(x, y);
        if self.dofs.is_empty() {
            return;
        }
        let xb: Vec<T> = self.dofs.iter().map(|&d| x[d]).collect();
        let yb = self.block.apply(&xb);
        for (&d, v) in self.dofs.iter().zip(yb) {
            y[d] += v;
        }
    }

    fn diagonal(&self) -> Vec<T> {
        let mut d = self.sparse.diagonal();
        for (k, &i) in self.dofs.iter().enumerate() {
            d[i] += self.block[(k, k)];
        }
        d
    }
}

#[cfg(test)]
mod tests;
