use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::mesh::Triangulation;
use crate::scalar::{Point, Real};

/// Scalar coefficient, either constant, given per triangle, or a closed form
/// evaluated at quadrature points (one point per triangle for bulk terms).
#[derive(Clone)]
pub enum ScalarField<T> {
    Constant(T),
    PerTriangle(Vec<T>),
    Function(Arc<dyn Fn(Point<T>) -> T + Send + Sync>),
}

impl<T: fmt::Debug> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c:?})"),
            Self::PerTriangle(v) => write!(f, "PerTriangle(len {})", v.len()),
            Self::Function(_) => write!(f, "Function"),
        }
    }
}

impl<T: Real> ScalarField<T> {
    pub fn function(f: impl Fn(Point<T>) -> T + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn at(&self, p: Point<T>) -> T {
        match self {
            Self::Constant(c) => *c,
            Self::Function(f) => f(p),
            Self::PerTriangle(_) => panic!("per-triangle field has no pointwise value"),
        }
    }

    pub fn on_triangle(&self, tri: &Triangulation<T>, t: usize) -> T {
        match self {
            Self::PerTriangle(v) => v[t],
            other => other.at(tri.centroid(t)),
        }
    }

    /// Value on a boundary point; per-triangle fields are not defined there.
    pub fn on_curve(&self, p: Point<T>) -> Result<T> {
        match self {
            Self::PerTriangle(_) => Err(invalid("boundary coefficients cannot be given per triangle")),
            other => Ok(other.at(p)),
        }
    }
}

/// Time-dependent source `f(t, x)`.
#[derive(Clone)]
pub struct Source<T>(pub Arc<dyn Fn(T, Point<T>) -> T + Send + Sync>);

impl<T: Real> Source<T> {
    pub fn new(f: impl Fn(T, Point<T>) -> T + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn zero() -> Self {
        Self::new(|_, _| T::zero())
    }

    pub fn eval(&self, t: T, p: Point<T>) -> T {
        (self.0)(t, p)
    }
}

impl<T> fmt::Debug for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Source")
    }
}

/// Material data of the coupled bulk/boundary problem.
#[derive(Debug, Clone)]
pub struct CoefficientField<T> {
    /// Bulk conductivity `k`.
    pub k: ScalarField<T>,
    /// Bulk heat capacity per volume `ρ C_p`.
    pub rho_cp: ScalarField<T>,
    /// Boundary heat capacity `ρ_s C_{p,s}`.
    pub rho_cp_s: T,
    /// Boundary conductivity `k_s`.
    pub k_s: T,
    /// Boundary reaction coefficient.
    pub b: ScalarField<T>,
    /// Weight of the nonlocal term in the operator.
    pub nonlocal_weight: T,
}

impl<T: Real> CoefficientField<T> {
    /// All coefficients one; `b` as given. These define the analysis norms.
    pub fn unit(b: T) -> Self {
        Self {
            k: ScalarField::Constant(T::one()),
            rho_cp: ScalarField::Constant(T::one()),
            rho_cp_s: T::one(),
            k_s: T::one(),
            b: ScalarField::Constant(b),
            nonlocal_weight: T::one(),
        }
    }

    pub(crate) fn check_scalars(&self) -> Result<()> {
        if !(self.rho_cp_s > T::zero()) {
            return Err(invalid(format!("boundary capacity must be positive, got {}", self.rho_cp_s)));
        }
        if !(self.k_s > T::zero()) {
            return Err(invalid(format!("boundary conductivity must be positive, got {}", self.k_s)));
        }
        if !(self.nonlocal_weight >= T::zero()) {
            return Err(invalid("nonlocal weight must be nonnegative"));
        }
        Ok(())
    }
}
