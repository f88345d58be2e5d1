use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use super::config::{MeshFamily, StudyConfig};
use crate::analysis::{eoc_fit, norm_v, prolongate, run_level, write_eoc_csv, ErrorRecord, MeshKind, Reference, StudyProblem};
use crate::assembly::{CoefficientField, NonlocalOptions, Source};
use crate::error::{Error, Result};
use crate::geometry::{snowflake, PrefractalCurve};
use crate::linalg::SolveOptions;
use crate::mesh::{build_graded_mesh, build_quasi_uniform_mesh, refine_graded, GradingParams, MeshOptions, Region, Triangulation};
use crate::scalar::Real;
use crate::time::LinearSolver;

/// Acceptance band of one measured order.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Verdict {
    pub fn new(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo, hi }
    }

    pub fn pass(&self) -> bool {
        self.value >= self.lo && self.value <= self.hi
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hi = if self.hi.is_finite() { format!("{}", self.hi) } else { "inf".into() };
        write!(f, "{} = {:.4} in [{}, {hi}]: {}", self.name, self.value, self.lo, if self.pass() { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Default)]
pub struct StudyReport {
    pub graded: Vec<ErrorRecord>,
    pub uniform: Vec<ErrorRecord>,
    /// Fixed-mesh runs with `θ = 1`.
    pub backward_euler: Vec<ErrorRecord>,
    /// Fixed-mesh runs with `θ = 1/2`.
    pub crank_nicolson: Vec<ErrorRecord>,
    /// Unknowns of each family's reference, in study order.
    pub reference_dofs: Vec<usize>,
    /// `|||u_ref(T) − u_{ref/2}(T)|||` per family when the self-consistency gate ran.
    pub gate: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::pass)
    }

    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let spatial: Vec<ErrorRecord> = self.graded.iter().chain(&self.uniform).cloned().collect();
        for (name, records) in [
            ("eoc_spatial.csv", &spatial),
            ("eoc_time_theta1.csv", &self.backward_euler),
            ("eoc_time_theta0.5.csv", &self.crank_nicolson),
        ] {
            if !records.is_empty() {
                write_eoc_csv(records, BufWriter::new(File::create(dir.join(name))?))?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = format!("convergence reference_dofs={:?}\n", self.reference_dofs);
        for g in &self.gate {
            s += &format!("self_consistency gap={g:.6e}\n");
        }
        for v in &self.verdicts {
            s += &format!("verdict {v}\n");
        }
        s
    }
}

fn kind_of(f: MeshFamily) -> MeshKind {
    match f {
        MeshFamily::Graded => MeshKind::Graded,
        MeshFamily::Uniform => MeshKind::Uniform,
    }
}

/// Unit coefficients with `b = 1`, the nonlocal term on the whole curve and
/// `f(t, x) = t (1 + x₁)`, started from rest.
pub fn study_problem<T: Real>(study: &StudyConfig, theta: T, solver: LinearSolver<T>) -> Result<StudyProblem<T>> {
    Ok(StudyProblem {
        curve: snowflake(study.level)?,
        coeffs: CoefficientField::unit(T::one()),
        nonlocal: NonlocalOptions::default(),
        source: Source::new(|t: T, p: [T; 2]| t * (T::one() + p[0])),
        t_final: T::lit(study.t_final),
        theta,
        solver,
    })
}

fn cg<T: Real>(study: &StudyConfig) -> LinearSolver<T> {
    LinearSolver::Cg(SolveOptions { tol: T::lit(study.solver_tol), max_iter: 50_000 })
}

/// Nested mesh family: successive grading refinements for `study.h`, or
/// the lattices of `study.uniform_h`.
pub fn mesh_family<T: Real>(curve: &PrefractalCurve<T>, study: &StudyConfig, kind: MeshFamily) -> Result<Vec<Triangulation<T>>> {
    let opts = MeshOptions::default();
    let mu = T::lit(study.mu);
    let sizes = match kind {
        MeshFamily::Graded => &study.h,
        MeshFamily::Uniform => &study.uniform_h,
    };
    let mut out: Vec<Triangulation<T>> = Vec::with_capacity(sizes.len());
    for &h in sizes {
        let h = T::lit(h);
        let tri = match (kind, out.last()) {
            (MeshFamily::Uniform, _) => build_quasi_uniform_mesh(curve, h, Region::Interior, &opts)?,
            (MeshFamily::Graded, None) => build_graded_mesh(curve, h, mu, Region::Interior, &opts)?,
            (MeshFamily::Graded, Some(prev)) => refine_graded(prev.clone(), curve, GradingParams::new(h, mu, opts.sigma_g)?, &opts)?,
        };
        out.push(tri);
    }
    Ok(out)
}

/// Reference mesh `factor` times finer than the finest mesh of the family,
/// graded or lattice like the family itself.
fn reference_mesh<T: Real>(
    curve: &PrefractalCurve<T>,
    study: &StudyConfig,
    kind: MeshFamily,
    finest: &Triangulation<T>,
    factor: f64,
) -> Result<Triangulation<T>> {
    let opts = MeshOptions::default();
    match kind {
        MeshFamily::Graded => {
            let h = T::lit(study.h[study.h.len() - 1] / factor);
            refine_graded(finest.clone(), curve, GradingParams::new(h, T::lit(study.mu), opts.sigma_g)?, &opts)
        }
        MeshFamily::Uniform => {
            let h = T::lit(study.uniform_h[study.uniform_h.len() - 1] / factor);
            build_quasi_uniform_mesh(curve, h, Region::Interior, &opts)
        }
    }
}

/// Runs one family against its own reference.
fn spatial<T: Real>(study: &StudyConfig, kind: MeshFamily) -> Result<(Vec<ErrorRecord>, usize, Option<f64>)> {
    let problem = study_problem(study, T::lit(study.theta), cg(study))?;
    let curve = &problem.curve;
    let meshes = mesh_family(curve, study, kind)?;
    let finest = meshes.last().expect("at least three sizes");
    let dt_min = T::lit(study.dt[study.dt.len() - 1]);
    let dt_ref = dt_min / T::from_usize_lossy(study.reference_dt_factor);
    let reference = Reference::compute(&problem, reference_mesh(curve, study, kind, finest, study.reference_h_factor)?, dt_ref, dt_min)?;

    let mut gate = None;
    if study.self_consistency {
        let finer = Reference::compute(
            &problem,
            reference_mesh(curve, study, kind, finest, 2.0 * study.reference_h_factor)?,
            dt_ref / T::lit(2.0),
            dt_min,
        )?;
        let t = problem.t_final;
        let coarse_on_fine = prolongate(&reference.run.tri, reference.snapshot(t)?, &finer.run.tri.nodes)?;
        let e: Vec<T> = coarse_on_fine.iter().zip(finer.snapshot(t)?).map(|(a, b)| *a - *b).collect();
        let gap = norm_v(&e, &finer.norms).as_f64();
        let size = norm_v(finer.snapshot(t)?, &finer.norms).as_f64();
        if !(gap <= 1e-2 * size) {
            return Err(Error::Study(format!("reference self-consistency gap {gap:e} exceeds 1% of |||u_ref(T)||| = {size:e}")));
        }
        gate = Some(gap);
    }

    let mu = (kind == MeshFamily::Graded).then_some(study.mu);
    let mut records = Vec::with_capacity(meshes.len());
    for (tri, &dt) in meshes.into_iter().zip(&study.dt) {
        let run = run_level(&problem, tri, T::lit(dt), 1)?;
        records.push(reference.errors(&run, kind_of(kind), mu)?);
    }
    Ok((records, reference.norms.dim(), gate))
}

/// Fixed lattice mesh, `Δt` refined as listed, reference at `Δt_min / factor`.
fn temporal<T: Real>(study: &StudyConfig, theta: f64) -> Result<Vec<ErrorRecord>> {
    let problem = study_problem(study, T::lit(theta), LinearSolver::Direct)?;
    let h = problem.curve.segment_length(0) / T::from_usize_lossy(study.temporal_m);
    let tri = build_quasi_uniform_mesh(&problem.curve, h, Region::Interior, &MeshOptions::default())?;
    let dt_min = T::lit(study.temporal_dt[study.temporal_dt.len() - 1]);
    let dt_ref = dt_min / T::from_usize_lossy(study.reference_dt_factor);
    let reference = Reference::compute(&problem, tri.clone(), dt_ref, dt_min)?;
    study
        .temporal_dt
        .iter()
        .map(|&dt| {
            let run = run_level(&problem, tri.clone(), T::lit(dt), 1)?;
            reference.time_errors(&run, MeshKind::Uniform)
        })
        .collect()
}

fn fit(records: &[ErrorRecord], by_dt: bool, err: impl Fn(&ErrorRecord) -> f64) -> Result<f64> {
    let p: Vec<f64> = records.iter().map(|r| if by_dt { r.dt } else { r.h }).collect();
    let e: Vec<f64> = records.iter().map(err).collect();
    eoc_fit(&p, &e)
}

/// Runs the spatial study of every requested family and the temporal study
/// for `θ = 1` and `θ = 1/2`, then grades the least-squares orders against
/// the acceptance bands.
pub fn run_convergence_study<T: Real>(study: &StudyConfig) -> Result<StudyReport> {
    let mut report = StudyReport::default();
    for &kind in &study.kinds {
        let (records, dofs, gate) = spatial::<T>(study, kind)?;
        report.reference_dofs.push(dofs);
        report.gate.extend(gate);
        match kind {
            MeshFamily::Graded => report.graded = records,
            MeshFamily::Uniform => report.uniform = records,
        }
    }
    report.backward_euler = temporal::<T>(study, 1.0)?;
    report.crank_nicolson = temporal::<T>(study, 0.5)?;
    report.verdicts = verdicts(&report)?;
    Ok(report)
}

pub fn verdicts(report: &StudyReport) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let mut graded_v = None;
    if !report.graded.is_empty() {
        let v = fit(&report.graded, false, |r| r.err_v)?;
        graded_v = Some(v);
        out.push(Verdict::new("graded EOC_V", v, 0.8, 1.3));
        out.push(Verdict::new("graded EOC_L2m", fit(&report.graded, false, |r| r.err_l2m)?, 1.7, 2.3));
    }
    if !report.uniform.is_empty() {
        let v = fit(&report.uniform, false, |r| r.err_v)?;
        out.push(Verdict::new("uniform EOC_V", v, 0.6, 0.95));
        if let Some(g) = graded_v {
            out.push(Verdict::new("graded minus uniform EOC_V", g - v, 0.1, f64::INFINITY));
        }
    }
    if !report.backward_euler.is_empty() {
        out.push(Verdict::new("temporal EOC theta=1", fit(&report.backward_euler, true, |r| r.err_l2m)?, 0.9, 1.1));
    }
    if !report.crank_nicolson.is_empty() {
        out.push(Verdict::new("temporal EOC theta=1/2", fit(&report.crank_nicolson, true, |r| r.err_l2m)?, 1.8, 2.2));
    }
    Ok(out)
}
