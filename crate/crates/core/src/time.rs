//! θ-method for `M u' + A u = F(t)`, `1/2 ≤ θ ≤ 1`.

use std::io::Write;

use crate::assembly::{assemble_composite_mass, assemble_load, ScalarField, Source};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Cholesky, CsrMatrix, HybridOperator, LinearOperator, SolveOptions, SolveStats};
use crate::mesh::Triangulation;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaScheme<T> {
    pub theta: T,
    pub dt: T,
}

impl<T: Real> ThetaScheme<T> {
    pub fn new(theta: T, dt: T) -> Result<Self> {
        if !(theta >= T::lit(0.5) && theta <= T::one()) {
            return Err(invalid(format!("theta must lie in [1/2, 1], got {theta}")));
        }
        if !(dt > T::zero()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { theta, dt })
    }

    pub fn backward_euler(dt: T) -> Result<Self> {
        Self::new(T::one(), dt)
    }

    pub fn crank_nicolson(dt: T) -> Result<Self> {
        Self::new(T::lit(0.5), dt)
    }

    /// Integer part of `t_final / dt`, tolerant to rounding of exact ratios.
    pub fn steps(&self, t_final: T) -> usize {
        (t_final / self.dt * (T::one() + T::tol(1e-12))).floor().to_usize().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver<T> {
    Cg(SolveOptions<T>),
    /// Dense Cholesky factorization, computed once per stepper.
    Direct,
}

impl<T: Real> Default for LinearSolver<T> {
    fn default() -> Self {
        Self::Cg(SolveOptions::default())
    }
}

/// Semi-discrete system `M u' + A u = F`.
#[derive(Debug, Clone, Copy)]
pub struct Pencil<'a, T> {
    pub mass: &'a CsrMatrix<T>,
    pub a: &'a HybridOperator<T>,
}

/// Advances one fixed `(θ, Δt)` pair; the system matrix is built once.
pub struct ThetaStepper<'a, T> {
    pencil: Pencil<'a, T>,
    scheme: ThetaScheme<T>,
    k: HybridOperator<T>,
    chol: Option<Cholesky<T>>,
    solver: LinearSolver<T>,
}

impl<'a, T: Real> ThetaStepper<'a, T> {
    pub fn new(pencil: Pencil<'a, T>, scheme: ThetaScheme<T>, solver: LinearSolver<T>) -> Result<Self> {
        if pencil.mass.rows != pencil.a.dim() {
            return Err(invalid("mass and operator dimensions differ"));
        }
        let k = pencil.a.combine(scheme.theta * scheme.dt, pencil.mass, T::one());
        let chol = match solver {
            LinearSolver::Direct => {
                if k.dim() > linalg::DIRECT_LIMIT {
                    return Err(invalid(format!("direct solve limited to {} unknowns", linalg::DIRECT_LIMIT)));
                }
                Some(k.to_dense().cholesky()?)
            }
            LinearSolver::Cg(_) => None,
        };
        Ok(Self { pencil, scheme, k, chol, solver })
    }

    pub fn scheme(&self) -> ThetaScheme<T> {
        self.scheme
    }

    /// Solves `(M + θΔt A) u⁺ = (M − (1−θ)Δt A) u + Δt(θ F⁺ + (1−θ) F)`.
    pub fn step(&self, u: &[T], f_l: &[T], f_next: &[T]) -> Result<(Vec<T>, SolveStats)> {
        let n = u.len();
        if n != self.k.dim() || f_l.len() != n || f_next.len() != n {
            return Err(invalid("state or load length does not match the system"));
        }
        let ThetaScheme { theta, dt } = self.scheme;
        let mu = self.pencil.mass.apply(u);
        let au = self.pencil.a.apply(u);
        let rest = T::one() - theta;
        let rhs: Vec<T> = (0..n).map(|i| mu[i] - rest * dt * au[i] + dt * (theta * f_next[i] + rest * f_l[i])).collect();
        match (&self.solver, &self.chol) {
            (LinearSolver::Direct, Some(c)) => Ok((c.solve(&rhs), SolveStats::default())),
            (LinearSolver::Cg(opts), _) => linalg::pcg(&self.k, &rhs, Some(u), *opts, |_, _, _| {}),
            _ => unreachable!("direct solver without factorization"),
        }
    }
}

/// One θ-step without keeping the stepper.
#[allow(clippy::too_many_arguments)]
pub fn theta_step<T: Real>(
    mass: &CsrMatrix<T>,
    a: &HybridOperator<T>,
    u: &[T],
    f_l: &[T],
    f_next: &[T],
    scheme: ThetaScheme<T>,
    solver: LinearSolver<T>,
) -> Result<(Vec<T>, SolveStats)> {
    ThetaStepper::new(Pencil { mass, a }, scheme, solver)?.step(u, f_l, f_next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub m_norm: f64,
    pub energy: f64,
    pub lin_iters: usize,
    pub lin_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientState<T> {
    pub u: Vec<T>,
    pub t: T,
    pub steps: usize,
    /// `(t_l, u^l)` every `stride` steps, starting with the initial state.
    pub trajectory: Vec<(T, Vec<T>)>,
    pub diagnostics: Vec<StepRecord>,
    /// Set when the run stopped early on the stationarity criterion.
    pub stationary: bool,
}

impl<T: Real> TransientState<T> {
    pub fn write_diagnostics<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,t,Mnorm,energy,lin_iters,lin_residual")?;
        for r in &self.diagnostics {
            writeln!(out, "{},{:.16e},{:.16e},{:.16e},{},{:.6e}", r.step, r.t, r.m_norm, r.energy, r.lin_iters, r.lin_residual)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions<T> {
    pub solver: LinearSolver<T>,
    /// Store every `stride`-th state; 0 keeps only the final state.
    pub stride: usize,
    /// Stop once `‖u⁺ − u‖ ≤ tol·‖u⁺‖` (Euclidean).
    pub stationary_tol: Option<T>,
}

impl<T: Real> Default for RunOptions<T> {
    fn default() -> Self {
        Self { solver: LinearSolver::default(), stride: 0, stationary_tol: None }
    }
}

/// Runs `⌊t_final/Δt⌋` steps from `u0`; `load(t)` returns `F(t)`.
pub fn run_transient<T: Real>(
    pencil: Pencil<'_, T>,
    u0: &[T],
    load: impl Fn(T) -> Vec<T>,
    t_final: T,
    scheme: ThetaScheme<T>,
    opts: RunOptions<T>,
) -> Result<TransientState<T>> {
    let stepper = ThetaStepper::new(pencil, scheme, opts.solver)?;
    let steps = scheme.steps(t_final);
    let mut u = u0.to_vec();
    let mut trajectory = Vec::new();
    if opts.stride > 0 {
        trajectory.push((T::zero(), u.clone()));
    }
    let mut diagnostics = Vec::with_capacity(steps);
    let mut f_l = load(T::zero());
    let mut done = 0;
    let mut stationary = false;
    for l in 0..steps {
        let t_next = T::from_usize_lossy(l + 1) * scheme.dt;
        let f_next = load(t_next);
        let (next, stats) = stepper.step(&u, &f_l, &f_next).map_err(|e| Error::Step { step: l + 1, source: Box::new(e) })?;
        let change = linalg::norm2(&next.iter().zip(&u).map(|(&a, &b)| a - b).collect::<Vec<_>>());
        let size = linalg::norm2(&next);
        u = next;
        f_l = f_next;
        done = l + 1;
        diagnostics.push(StepRecord {
            step: done,
            t: t_next.as_f64(),
            m_norm: pencil.mass.quad_form(&u).max(T::zero()).sqrt().as_f64(),
            energy: pencil.a.quad_form(&u).as_f64(),
            lin_iters: stats.iterations,
            lin_residual: stats.residual,
        });
        if opts.stride > 0 && done % opts.stride == 0 {
            trajectory.push((t_next, u.clone()));
        }
        if let Some(tol) = opts.stationary_tol {
            if change <= tol * size {
                stationary = true;
                break;
            }
        }
    }
    Ok(TransientState { t: T::from_usize_lossy(done) * scheme.dt, u, steps: done, trajectory, diagnostics, stationary })
}

/// `L²(Ω, m)` projection of `u0`: solves `M₁ c = (u0, φ_i)_{L²(Ω,m)}` with
/// the unit-coefficient composite mass.
pub fn l2_projection<T: Real>(tri: &Triangulation<T>, u0: impl Fn([T; 2]) -> T + Send + Sync + 'static) -> Result<Vec<T>> {
    let m1 = assemble_composite_mass(tri, &ScalarField::Constant(T::one()), T::one())?;
    let src = Source::new(move |_, p| u0(p));
    let b = assemble_load(tri, &src, T::zero());
    let opts = SolveOptions { tol: T::lit(1e-12).max(T::epsilon() * T::lit(100.0)), max_iter: 10 * tri.num_nodes() + 100 };
    Ok(linalg::solve_spd(&m1, &b, opts)?.0)
}

/// Ritz projection of `u0` in the inner product `(∇u, ∇v)_Ω + (u, v)_{L²(Ω,m)}
/// + (∂_s u, ∂_s v)_{K_n}`, given the gradient of `u0`.
pub fn elliptic_projection<T: Real>(
    tri: &Triangulation<T>,
    u0: impl Fn([T; 2]) -> T + Send + Sync + Clone + 'static,
    grad: impl Fn([T; 2]) -> [T; 2],
) -> Result<Vec<T>> {
    use crate::assembly::{assemble_bulk_stiffness, assemble_tangential_stiffness};
    use crate::scalar;
    let unit = ScalarField::Constant(T::one());
    let k = assemble_bulk_stiffness(tri, &unit)?
        .add(T::one(), &assemble_composite_mass(tri, &unit, T::one())?, T::one())
        .add(T::one(), &assemble_tangential_stiffness(tri, T::one())?, T::one());
    let u = u0.clone();
    let mut b = assemble_load(tri, &Source::new(move |_, p| u(p)), T::zero());
    let third = T::one() / T::lit(3.0);
    for t in 0..tri.num_triangles() {
        // gradients of P1 hats are constant; a three-point rule for ∇u0
        let v = tri.vertices(t);
        let area = tri.area(t);
        let area2 = area * T::lit(2.0);
        let g = |a: [T; 2], c: [T; 2]| [(a[1] - c[1]) / area2, (c[0] - a[0]) / area2];
        let hats = [g(v[1], v[2]), g(v[2], v[0]), g(v[0], v[1])];
        let mut avg = [T::zero(); 2];
        for q in 0..3 {
            let p = scalar::lerp(tri.centroid(t), v[q], T::lit(0.5));
            let gq = grad(p);
            avg = [avg[0] + gq[0] * third, avg[1] + gq[1] * third];
        }
        for i in 0..3 {
            b[tri.triangles[t][i]] += area * scalar::dot(avg, hats[i]);
        }
    }
    let (xs, ws) = scalar::gauss_legendre_unit(3);
    for e in &tri.curve_edges {
        let (p, q) = (tri.nodes[e.nodes[0]], tri.nodes[e.nodes[1]]);
        let l = scalar::dist(p, q);
        let tangent = scalar::scale(scalar::sub(q, p), T::one() / l);
        let mut ds = T::zero();
        for (&x, &w) in xs.iter().zip(&ws) {
            ds += T::lit(w) * scalar::dot(grad(scalar::lerp(p, q, T::lit(x))), tangent);
        }
        // ∫_e ∂_s u0 ∂_s φ ds with ∂_s φ = ∓1/l
        b[e.nodes[0]] -= ds;
        b[e.nodes[1]] += ds;
    }
    let opts = SolveOptions { tol: T::lit(1e-12).max(T::epsilon() * T::lit(100.0)), max_iter: 20 * tri.num_nodes() + 100 };
    Ok(linalg::solve_spd(&k, &b, opts)?.0)
}
