use nalgebra::{DMatrix, SymmetricEigen};

use super::NormSystem;
use crate::assembly::{assemble_system, CoefficientField, NonlocalOptions};
use crate::error::{invalid, Error, Result};
use crate::geometry::PrefractalCurve;
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::mesh::Triangulation;
use crate::scalar::Real;

/// Extreme eigenvalues `(λ_min, λ_max)` of the symmetric-definite pencil
/// `A x = λ B x`.
pub fn pencil_extremes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.shape() != b.shape() || !a.is_square() || a.nrows() == 0 {
        return Err(invalid("pencil matrices must be square, nonempty and of equal size"));
    }
    let l = b.clone().cholesky().ok_or_else(|| Error::Assembly("pencil matrix B is not positive definite".into()))?.l();
    let linv = l.solve_lower_triangular(&DMatrix::identity(a.nrows(), a.nrows())).expect("nonsingular factor");
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c).eigenvalues;
    Ok((eig.min(), eig.max()))
}

fn dense<T: Real>(m: &impl LinearOperator<T>) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(d.rows, d.cols, |i, j| d[(i, j)].as_f64())
}

fn csr_dense<T: Real>(m: &CsrMatrix<T>) -> DMatrix<f64> {
    dense(m)
}

/// Discrete constants of the energy form on one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    /// `c₁ ‖v‖_V ≤ |||v|||`.
    pub c1: f64,
    /// `|||v||| ≤ c₂ ‖v‖_V`.
    pub c2: f64,
    /// `vᵀAv ≥ C̄ ‖v‖²_V` for the operator with reaction `b`.
    pub coercivity: f64,
    /// `‖v‖²_{L²(Ω)} ≤ C_p (‖∇v‖² + ‖v‖²_{L²(K)})`.
    pub friedrichs: f64,
    pub dofs: usize,
}

pub fn spectral_bounds<T: Real>(tri: &Triangulation<T>, curve: &PrefractalCurve<T>, b: T) -> Result<SpectralBounds> {
    let norms = NormSystem::new(tri, curve)?;
    let g_v = csr_dense(&norms.v_gram());
    let g_triple = dense(&norms.system.a);
    let (lo, hi) = pencil_extremes(&g_triple, &g_v)?;
    let a = assemble_system(tri, curve, &CoefficientField::unit(b), &NonlocalOptions::default())?;
    let (coer, _) = pencil_extremes(&dense(&a.a), &g_v)?;
    let s = &norms.system;
    let poincare = csr_dense(&s.bulk_stiffness.add(T::one(), &s.boundary_mass, T::one()));
    let (_, cp) = pencil_extremes(&csr_dense(&norms.bulk_mass), &poincare)?;
    Ok(SpectralBounds { c1: lo.max(0.0).sqrt(), c2: hi.sqrt(), coercivity: coer, friedrichs: cp, dofs: norms.dim() })
}
