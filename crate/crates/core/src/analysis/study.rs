use std::f64::consts::PI;
use std::time::Instant;

use super::{norm_h1_curve, norm_l2_m, norm_v, ErrorRecord, Interpolation, MeshKind, NormSystem};
use crate::assembly::{assemble_bulk_load, assemble_bulk_mass, assemble_bulk_stiffness, assemble_load, assemble_system};
use crate::assembly::{CoefficientField, NonlocalOptions, ScalarField, Source};
use crate::error::{invalid, Error, Result};
use crate::geometry::PrefractalCurve;
use crate::linalg::HybridOperator;
use crate::mesh::{unit_square_mesh, Triangulation};
use crate::scalar::Real;
use crate::time::{run_transient, LinearSolver, Pencil, RunOptions, ThetaScheme};

use super::transfer::check_refinement_ratio;

/// Transient problem shared by every run of a study; runs start from zero.
#[derive(Debug, Clone)]
pub struct StudyProblem<T> {
    pub curve: PrefractalCurve<T>,
    pub coeffs: CoefficientField<T>,
    pub nonlocal: NonlocalOptions<T>,
    pub source: Source<T>,
    pub t_final: T,
    pub theta: T,
    pub solver: LinearSolver<T>,
}

/// States of one run at times `l·Δt·stride`, including `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub tri: Triangulation<T>,
    pub dt: T,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub seconds: f64,
}

pub fn run_level<T: Real>(problem: &StudyProblem<T>, tri: Triangulation<T>, dt: T, stride: usize) -> Result<Trajectory<T>> {
    if stride == 0 {
        return Err(invalid("stride must be positive"));
    }
    let start = Instant::now();
    let sys = assemble_system(&tri, &problem.curve, &problem.coeffs, &problem.nonlocal)?;
    let scheme = ThetaScheme::new(problem.theta, dt)?;
    let u0 = vec![T::zero(); sys.dim()];
    let opts = RunOptions { solver: problem.solver, stride, stationary_tol: None };
    let pencil = Pencil { mass: &sys.mass, a: &sys.a };
    let state = run_transient(pencil, &u0, |t| assemble_load(&tri, &problem.source, t), problem.t_final, scheme, opts)?;
    let (times, states) = state.trajectory.into_iter().unzip();
    Ok(Trajectory { tri, dt, times, states, seconds: start.elapsed().as_secs_f64() })
}

/// Fine-grid solution stored at multiples of `snapshot_dt`, with the
/// analysis norms of its mesh.
#[derive(Debug, Clone)]
pub struct Reference<T> {
    pub run: Trajectory<T>,
    pub norms: NormSystem<T>,
    pub snapshot_dt: T,
}

fn ratio<T: Real>(coarse: T, fine: T) -> Result<usize> {
    let r = (coarse / fine).round();
    if r < T::one() || (coarse - r * fine).abs() > T::tol(1e-9) * coarse {
        return Err(invalid(format!("time step {coarse} is not a multiple of {fine}")));
    }
    Ok(r.to_usize().expect("positive ratio"))
}

impl<T: Real> Reference<T> {
    pub fn compute(problem: &StudyProblem<T>, tri: Triangulation<T>, dt: T, snapshot_dt: T) -> Result<Self> {
        let stride = ratio(snapshot_dt, dt)?;
        let norms = NormSystem::new(&tri, &problem.curve)?;
        let run = run_level(problem, tri, dt, stride)?;
        Ok(Self { run, norms, snapshot_dt })
    }

    pub fn h(&self) -> T {
        self.run.tri.target_h
    }

    pub fn snapshot(&self, t: T) -> Result<&[T]> {
        let idx = (t / self.snapshot_dt).round().to_usize().unwrap_or(usize::MAX);
        match self.run.times.get(idx) {
            Some(&tk) if (tk - t).abs() <= T::tol(1e-9) * (T::one() + t.abs()) => Ok(&self.run.states[idx]),
            _ => Err(Error::Study(format!("reference has no snapshot at t = {t}"))),
        }
    }

    /// Reference states evaluated at the nodes of `coarse`.
    pub fn transfer_to(&self, coarse: &Triangulation<T>) -> Result<Vec<Vec<T>>> {
        let interp = Interpolation::new(&self.run.tri, &coarse.nodes)?;
        self.run.states.iter().map(|u| interp.apply(u)).collect()
    }

    /// Errors of `run` measured on the reference mesh, after P1 evaluation
    /// of the coarse states at the reference nodes.
    pub fn errors(&self, run: &Trajectory<T>, kind: MeshKind, mu: Option<f64>) -> Result<ErrorRecord> {
        check_refinement_ratio(self.h(), run.tri.target_h, self.run.dt, run.dt)?;
        let interp = Interpolation::new(&run.tri, &self.run.tri.nodes)?;
        self.measure(run, kind, mu, |u| interp.apply(u))
    }

    /// Errors of a run on the reference mesh itself; only the time step
    /// differs.
    pub fn time_errors(&self, run: &Trajectory<T>, kind: MeshKind) -> Result<ErrorRecord> {
        if run.tri.nodes != self.run.tri.nodes {
            return Err(Error::Study("temporal errors need the run on the reference mesh".into()));
        }
        if self.run.dt * T::lit(8.0) > run.dt * (T::one() + T::tol(1e-9)) {
            return Err(Error::Study(format!("reference step {} is not below dt/8 = {}", self.run.dt, run.dt / T::lit(8.0))));
        }
        self.measure(run, kind, None, |u| Ok(u.to_vec()))
    }

    fn measure(
        &self,
        run: &Trajectory<T>,
        kind: MeshKind,
        mu: Option<f64>,
        onto_reference: impl Fn(&[T]) -> Result<Vec<T>>,
    ) -> Result<ErrorRecord> {
        let mut integrated = T::zero();
        let mut last = None;
        for (k, (&t, u)) in run.times.iter().zip(&run.states).enumerate().skip(1) {
            let step = t - run.times[k - 1];
            let reference = self.snapshot(t)?;
            let e: Vec<T> = onto_reference(u)?.iter().zip(reference).map(|(a, b)| *a - *b).collect();
            let v = norm_v(&e, &self.norms);
            integrated += step * v * v;
            last = Some(e);
        }
        let e = last.ok_or_else(|| Error::Study("run has no time steps".into()))?;
        Ok(ErrorRecord {
            h: run.tri.target_h.as_f64(),
            dt: run.dt.as_f64(),
            mu,
            mesh_kind: kind,
            err_l2m: norm_l2_m(&e, &self.norms).as_f64(),
            err_v: integrated.sqrt().as_f64(),
            err_v_final: norm_v(&e, &self.norms).as_f64(),
            err_h1_curve: norm_h1_curve(&e, &self.norms).as_f64(),
            err_weighted: None,
            dofs: run.tri.num_nodes(),
            seconds: run.seconds,
        })
    }
}

/// Heat equation on the unit square with homogeneous Dirichlet data and
/// exact solution `e^{−t} sin(πx) sin(πy)`; returns the discrete
/// `L²` error of the nodal solution at `t_final`.
pub fn heat_on_square_error(m: usize, dt: f64, theta: f64, t_final: f64) -> Result<f64> {
    let tri = unit_square_mesh::<f64>(m);
    let exact = |t: f64, p: [f64; 2]| (-t).exp() * (PI * p[0]).sin() * (PI * p[1]).sin();
    let unit = ScalarField::Constant(1.0);
    let mass = assemble_bulk_mass(&tri, &unit)?;
    let stiff = assemble_bulk_stiffness(&tri, &unit)?;
    let on_boundary = |p: [f64; 2]| p.iter().any(|&c| c.abs() < 1e-12 || (c - 1.0).abs() < 1e-12);
    let free: Vec<usize> = (0..tri.num_nodes()).filter(|&n| !on_boundary(tri.nodes[n])).collect();
    let m_free = mass.submatrix(&free);
    let a_free = HybridOperator::from_sparse(stiff.submatrix(&free));
    let source = Source::new(move |t, p| (2.0 * PI * PI - 1.0) * exact(t, p));
    let u0: Vec<f64> = free.iter().map(|&n| exact(0.0, tri.nodes[n])).collect();
    let load = |t: f64| {
        let full = assemble_bulk_load(&tri, &source, t);
        free.iter().map(|&n| full[n]).collect::<Vec<_>>()
    };
    let scheme = ThetaScheme::new(theta, dt)?;
    let opts = RunOptions { solver: LinearSolver::Direct, stride: 0, stationary_tol: None };
    let state = run_transient(Pencil { mass: &m_free, a: &a_free }, &u0, load, t_final, scheme, opts)?;
    let e: Vec<f64> = free.iter().zip(&state.u).map(|(&n, &u)| u - exact(state.t, tri.nodes[n])).collect();
    Ok(m_free.quad_form(&e).max(0.0).sqrt())
}
