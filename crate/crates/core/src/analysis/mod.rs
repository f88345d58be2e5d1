//! Analysis norms, convergence bookkeeping, spectral constants and
//! brute-force oracles used to validate the discretization.

mod flux;
mod oracle;
mod spectral;
mod study;
mod transfer;
mod weighted;

use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use flux::{interface_flux, FluxEvaluator};
pub use oracle::{nonlocal_oracle, nonlocal_oracle_matrix, ORACLE_MAX_EDGES};
pub use spectral::{pencil_extremes, spectral_bounds, SpectralBounds};
pub use study::{heat_on_square_error, run_level, Reference, StudyProblem, Trajectory};
pub use transfer::{check_refinement_ratio, prolongate, Interpolation, PointLocator};
pub use weighted::{weighted_h2_seminorm, weighted_h2_seminorm_at, Hessian};

use crate::assembly::{assemble_bulk_mass, assemble_system, AssembledSystem, CoefficientField, NonlocalOptions, ScalarField};
use crate::error::{invalid, Result};
use crate::geometry::PrefractalCurve;
use crate::linalg::CsrMatrix;
use crate::mesh::Triangulation;
use crate::scalar::Real;

/// Unit-coefficient operators defining the analysis norms on one mesh.
///
/// `system` is assembled with `k = ρC_p = ρ_sC_{p,s} = k_s = b = 1` and the
/// nonlocal form active on the whole curve, so `system.a` is the Gram matrix
/// of `|||·|||` and `system.mass` the one of `L²(Ω, m)`.
#[derive(Debug, Clone)]
pub struct NormSystem<T> {
    pub system: AssembledSystem<T>,
    pub bulk_mass: CsrMatrix<T>,
}

impl<T: Real> NormSystem<T> {
    pub fn new(tri: &Triangulation<T>, curve: &PrefractalCurve<T>) -> Result<Self> {
        let system = assemble_system(tri, curve, &CoefficientField::unit(T::one()), &NonlocalOptions::default())?;
        let bulk_mass = assemble_bulk_mass(tri, &ScalarField::Constant(T::one()))?;
        Ok(Self { system, bulk_mass })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Gram matrix of `‖·‖_V`: gradients in the bulk and along the curve
    /// plus the `L²(Ω, m)` mass.
    pub fn v_gram(&self) -> CsrMatrix<T> {
        let s = &self.system;
        s.bulk_stiffness.add(T::one(), &s.tangential_stiffness, T::one()).add(T::one(), &s.mass, T::one())
    }

    /// `‖v‖²_{H¹(K)}`.
    pub fn h1_curve_sq(&self, v: &[T]) -> T {
        self.system.tangential_stiffness.quad_form(v) + self.system.boundary_mass.quad_form(v)
    }
}

fn sqrt_nonneg<T: Real>(x: T) -> T {
    x.max(T::zero()).sqrt()
}

/// `‖v‖_{L²(Ω, m)}` with `dm = dx + ds`.
pub fn norm_l2_m<T: Real>(v: &[T], norms: &NormSystem<T>) -> T {
    sqrt_nonneg(norms.system.mass.quad_form(v))
}

/// `|||v|||`: bulk Dirichlet energy, `H¹` norm on the curve and the
/// nonlocal form.
pub fn norm_v<T: Real>(v: &[T], norms: &NormSystem<T>) -> T {
    let s = &norms.system;
    let sum = s.bulk_stiffness.quad_form(v) + norms.h1_curve_sq(v) + s.nonlocal_quad_form(v);
    sqrt_nonneg(sum)
}

/// `‖v‖_{H¹(K)}`.
pub fn norm_h1_curve<T: Real>(v: &[T], norms: &NormSystem<T>) -> T {
    sqrt_nonneg(norms.h1_curve_sq(v))
}

/// Mesh family of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Graded,
    Uniform,
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Graded => "graded",
            Self::Uniform => "uniform",
        })
    }
}

/// Errors of one discrete run against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub dt: f64,
    pub mu: Option<f64>,
    pub mesh_kind: MeshKind,
    /// `‖e(T)‖_{L²(Ω, m)}`.
    pub err_l2m: f64,
    /// `(Σ_l Δt |||e(t_l)|||²)^{1/2}`.
    pub err_v: f64,
    /// `|||e(T)|||`.
    pub err_v_final: f64,
    /// `‖e(T)‖_{H¹(K)}`.
    pub err_h1_curve: f64,
    pub err_weighted: Option<f64>,
    pub dofs: usize,
    pub seconds: f64,
}

impl ErrorRecord {
    fn key(&self) -> (u64, u64, Option<u64>, MeshKind) {
        (self.h.to_bits(), self.dt.to_bits(), self.mu.map(f64::to_bits), self.mesh_kind)
    }
}

/// Pairwise orders `log(e_i/e_{i+1}) / log(p_i/p_{i+1})`.
pub fn eoc(param: &[f64], err: &[f64]) -> Result<Vec<f64>> {
    check_series(param, err)?;
    Ok((1..param.len()).map(|i| (err[i - 1] / err[i]).ln() / (param[i - 1] / param[i]).ln()).collect())
}

/// Least-squares slope of `log e` against `log p`.
pub fn eoc_fit(param: &[f64], err: &[f64]) -> Result<f64> {
    check_series(param, err)?;
    let x: Vec<f64> = param.iter().map(|p| p.ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

fn check_series(param: &[f64], err: &[f64]) -> Result<()> {
    if param.len() != err.len() {
        return Err(invalid(format!("{} parameters for {} errors", param.len(), err.len())));
    }
    if param.len() < 2 {
        return Err(invalid("at least two records are needed for an order"));
    }
    let dec = param.windows(2).all(|w| w[1] < w[0]);
    let inc = param.windows(2).all(|w| w[1] > w[0]);
    if !(dec || inc) || param.iter().any(|p| !(*p > 0.0)) {
        return Err(invalid(format!("refinement parameters must be positive and strictly monotone: {param:?}")));
    }
    if err.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(invalid(format!("errors must be positive and finite: {err:?}")));
    }
    Ok(())
}

/// The refinement parameter varying between two consecutive records.
fn step_parameter(a: &ErrorRecord, b: &ErrorRecord) -> (f64, f64) {
    if a.h != b.h {
        (a.h, b.h)
    } else {
        (a.dt, b.dt)
    }
}

/// Writes the EOC table. Orders are taken between consecutive records of
/// the same mesh kind, against `h` or, for fixed `h`, against `Δt`.
pub fn write_eoc_csv<W: Write>(records: &[ErrorRecord], mut out: W) -> Result<()> {
    let mut keys = HashSet::new();
    for r in records {
        if r.err_l2m < 0.0 || r.err_v < 0.0 {
            return Err(invalid("errors must be nonnegative"));
        }
        if !keys.insert(r.key()) {
            return Err(invalid(format!("duplicate record for h={} dt={} mu={:?} {}", r.h, r.dt, r.mu, r.mesh_kind)));
        }
    }
    writeln!(out, "h,dt,mu,mesh_kind,err_L2m,err_V,eoc_L2m,eoc_V,dofs,seconds")?;
    let mut prev: Option<&ErrorRecord> = None;
    for r in records {
        let (eoc_l2, eoc_v) = match prev.filter(|p| p.mesh_kind == r.mesh_kind && p.mu == r.mu) {
            Some(p) => {
                let (a, b) = step_parameter(p, r);
                let rate = |ea: f64, eb: f64| {
                    if a != b && ea > 0.0 && eb > 0.0 {
                        format!("{:.4}", (ea / eb).ln() / (a / b).ln())
                    } else {
                        String::new()
                    }
                };
                (rate(p.err_l2m, r.err_l2m), rate(p.err_v, r.err_v))
            }
            None => (String::new(), String::new()),
        };
        let mu = r.mu.map(|m| m.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{:.6e},{:.6e},{},{},{},{:.3}",
            r.h, r.dt, mu, r.mesh_kind, r.err_l2m, r.err_v, eoc_l2, eoc_v, r.dofs, r.seconds
        )?;
        prev = Some(r);
    }
    Ok(())
}

#[cfg(test)]
mod tests;
