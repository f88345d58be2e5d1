use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::{ActiveMode, MeshFamily, ScenarioConfig};
use super::sectors::{Quadrant, SectorMap};
use crate::analysis::FluxEvaluator;
use crate::assembly::{apply_dirichlet, assemble_load, assemble_system, ActiveSet, CoefficientField, NonlocalOptions};
use crate::assembly::{ScalarField, Source};
use crate::error::Result;
use crate::geometry::{snowflake, PrefractalCurve};
use crate::linalg::{SolveOptions, DIRECT_LIMIT};
use crate::mesh::io::{write_vtk, PointField};
use crate::mesh::{build_graded_mesh, build_quasi_uniform_mesh, Region, Triangulation};
use crate::scalar::Real;
use crate::time::{run_transient, LinearSolver, Pencil, RunOptions, StepRecord, ThetaScheme};

/// Mesh, sectors and curve masks shared by the main and the control run.
#[derive(Debug, Clone)]
pub struct TransmissionSetup<T> {
    pub curve: PrefractalCurve<T>,
    pub tri: Triangulation<T>,
    pub sectors: SectorMap<T>,
    pub k: ScalarField<T>,
    /// Curve segments per quadrant, indexed by `Quadrant::index`.
    pub quadrant_masks: [Vec<bool>; 4],
    /// Segments carrying the nonlocal term.
    pub active: Vec<bool>,
}

impl<T: Real> TransmissionSetup<T> {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let curve = snowflake::<T>(config.geometry.level)?;
        let center = curve.centroid();
        let m = &config.mesh;
        let region = Region::WithOuterSquare {
            side: T::lit(config.geometry.square_side),
            center: config.geometry.center.map(|c| [T::lit(c[0]), T::lit(c[1])]),
            outer_h: T::lit(m.outer_h),
        };
        let h = m.target_h.map(T::lit).unwrap_or_else(|| curve.segment_length(0));
        let opts = m.options::<T>();
        let tri = match m.kind {
            MeshFamily::Uniform => build_quasi_uniform_mesh(&curve, h, region, &opts)?,
            MeshFamily::Graded => build_graded_mesh(&curve, h, T::lit(m.mu), region, &opts)?,
        };
        let c = &config.coefficients;
        let sectors = SectorMap::alternating(center, T::lit(c.k_low), T::lit(c.k_high))?;
        let k = sectors.conductivity(&tri)?;
        let quadrant_masks = Quadrant::ALL.map(|q| sectors.segment_mask(&curve, q));
        let nl = &config.nonlocal;
        let active = match nl.active {
            ActiveMode::UpperHalf => (0..curve.num_segments())
                .map(|s| {
                    let (a, b) = curve.segment_points(s);
                    (a[1] + b[1]) / T::lit(2.0) > center[1]
                })
                .collect(),
            ActiveMode::All => ActiveSet::All.segment_mask(&curve)?,
            ActiveMode::None => ActiveSet::None.segment_mask(&curve)?,
            ActiveMode::Arcs => {
                let iv: Vec<(T, T)> = nl.arcs.iter().map(|[a, b]| (T::lit(*a), T::lit(*b))).collect();
                ActiveSet::ArcIntervals(iv).segment_mask(&curve)
                    .map_err(|e| crate::Error::Config { path: "nonlocal.arcs".into(), message: e.to_string() })?
            }
        };
        Ok(Self { curve, tri, sectors, k, quadrant_masks, active })
    }
}

/// Heat outflow `−∫ k ∇u · ν ds` from the enclosed region, per quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxRow {
    pub t: f64,
    pub outflow: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct TransmissionRun<T> {
    pub nonlocal_active: bool,
    pub rows: Vec<FluxRow>,
    /// Final nodal temperature on the full mesh.
    pub u: Vec<T>,
    pub t: f64,
    pub steps: usize,
    pub stationary: bool,
    pub diagnostics: Vec<StepRecord>,
}

impl<T> TransmissionRun<T> {
    /// Time average of `|outflow|` over the stored rows.
    pub fn mean_abs_flux(&self, q: Quadrant) -> f64 {
        let i = q.index();
        match self.rows.as_slice() {
            [] => 0.0,
            [only] => only.outflow[i].abs(),
            rows => {
                let span = rows[rows.len() - 1].t - rows[0].t;
                let sum: f64 = rows.windows(2).map(|w| w[1].outflow[i].abs() * (w[1].t - w[0].t)).sum();
                sum / span
            }
        }
    }

    pub fn final_flux(&self, q: Quadrant) -> f64 {
        self.rows.last().map_or(0.0, |r| r.outflow[q.index()])
    }

    pub fn write_flux_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,north,east,south,west")?;
        for r in &self.rows {
            let [n, e, s, w] = r.outflow;
            writeln!(out, "{:.9e},{n:.12e},{e:.12e},{s:.12e},{w:.12e}", r.t)?;
        }
        Ok(())
    }
}

/// Runs the transmission problem with the nonlocal term on `active`.
pub fn simulate<T: Real>(setup: &TransmissionSetup<T>, config: &ScenarioConfig, active: &[bool]) -> Result<TransmissionRun<T>> {
    let c = &config.coefficients;
    let coeffs = CoefficientField {
        k: setup.k.clone(),
        rho_cp: ScalarField::Constant(T::lit(c.rho_cp())),
        rho_cp_s: T::lit(c.rho_cp_s()),
        k_s: T::lit(c.k_s),
        b: ScalarField::Constant(T::lit(c.b)),
        nonlocal_weight: T::lit(c.k_s),
    };
    let nonlocal = NonlocalOptions { active: ActiveSet::Segments(active.to_vec()), quadrature_order: config.nonlocal.quadrature_order };
    let tri = &setup.tri;
    let sys = assemble_system(tri, &setup.curve, &coeffs, &nonlocal)?;
    let cs = apply_dirichlet(&sys, &tri.outer_nodes(), T::zero())?;

    let s = &config.source;
    let centroid = setup.curve.centroid();
    let x0 = s.center.map(|p| [T::lit(p[0]), T::lit(p[1])]).unwrap_or(centroid);
    let (amp, var) = (T::lit(s.amplitude), T::lit(s.variance));
    let source = Source::new(move |_, p: [T; 2]| {
        let r2 = (p[0] - x0[0]) * (p[0] - x0[0]) + (p[1] - x0[1]) * (p[1] - x0[1]);
        amp * (-T::lit(0.5) * r2 / var).exp()
    });
    let load = cs.restrict_load(&assemble_load(tri, &source, T::zero()));

    let tc = &config.time;
    let solver = if cs.dim() <= DIRECT_LIMIT {
        LinearSolver::Direct
    } else {
        LinearSolver::Cg(SolveOptions { tol: T::lit(tc.solver_tol), max_iter: 50_000 })
    };
    let opts = RunOptions {
        solver,
        stride: config.output.stride,
        stationary_tol: tc.stationary.then(|| T::lit(tc.stationary_tol)),
    };
    let scheme = ThetaScheme::new(T::lit(tc.theta), T::lit(tc.dt))?;
    let u0 = cs.restrict(&vec![T::lit(config.initial.value); cs.full_dim]);
    let state = run_transient(Pencil { mass: &cs.mass, a: &cs.a }, &u0, |_| load.clone(), T::lit(tc.t_final), scheme, opts)?;

    let flux = FluxEvaluator::new(tri, &setup.k);
    let mut rows = Vec::with_capacity(state.trajectory.len() + 1);
    let mut push = |t: T, free: &[T]| -> Result<()> {
        let u = cs.expand(free);
        let mut outflow = [0.0; 4];
        for q in Quadrant::ALL {
            outflow[q.index()] = -flux.flux(&u, &setup.quadrant_masks[q.index()])?.as_f64();
        }
        rows.push(FluxRow { t: t.as_f64(), outflow });
        Ok(())
    };
    for (t, u) in &state.trajectory {
        push(*t, u)?;
    }
    if state.trajectory.last().is_none_or(|(t, _)| *t != state.t) {
        push(state.t, &state.u)?;
    }
    Ok(TransmissionRun {
        nonlocal_active: active.iter().any(|&a| a),
        rows,
        u: cs.expand(&state.u),
        t: state.t.as_f64(),
        steps: state.steps,
        stationary: state.stationary,
        diagnostics: state.diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct TransmissionReport<T> {
    pub setup: TransmissionSetup<T>,
    pub main: TransmissionRun<T>,
    /// Same problem with the nonlocal term off on the whole curve.
    pub control: Option<TransmissionRun<T>>,
    pub warnings: Vec<String>,
}

/// Main run with the configured active set and, if requested, the control
/// run without the nonlocal term.
pub fn run_transmission<T: Real>(config: &ScenarioConfig) -> Result<TransmissionReport<T>> {
    let setup = TransmissionSetup::<T>::new(config)?;
    let main = simulate(&setup, config, &setup.active)?;
    let control = if config.output.control {
        Some(simulate(&setup, config, &vec![false; setup.curve.num_segments()])?)
    } else {
        None
    };
    let mut warnings = Vec::new();
    if config.time.stationary {
        for run in std::iter::once(&main).chain(&control) {
            if !run.stationary {
                warnings.push(format!(
                    "{} run did not reach the stationarity tolerance {} by t = {}",
                    if run.nonlocal_active { "main" } else { "control" },
                    config.time.stationary_tol,
                    run.t
                ));
            }
        }
    }
    Ok(TransmissionReport { setup, main, control, warnings })
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

impl<T: Real> TransmissionReport<T> {
    /// North beats south in the main run.
    pub fn north_exceeds_south(&self) -> bool {
        self.main.mean_abs_flux(Quadrant::North) > self.main.mean_abs_flux(Quadrant::South)
    }

    /// Relative north/south gap of the control run.
    pub fn control_gap(&self) -> Option<f64> {
        self.control.as_ref().map(|c| relative_gap(c.mean_abs_flux(Quadrant::North), c.mean_abs_flux(Quadrant::South)))
    }

    pub fn summary(&self, config: &ScenarioConfig) -> String {
        let mut s = String::new();
        let t = &config.time;
        let _ = writeln!(s, "transmission level={} nodes={} triangles={}", config.geometry.level, self.setup.tri.num_nodes(), self.setup.tri.num_triangles());
        let _ = writeln!(s, "mesh kind={:?} h={} outer_h={}", config.mesh.kind, self.setup.tri.target_h, config.mesh.outer_h);
        let _ = writeln!(s, "time theta={} dt={} t_final={} stationary_tol={}", t.theta, t.dt, t.t_final, t.stationary_tol);
        let active = self.setup.active.iter().filter(|&&a| a).count();
        let _ = writeln!(s, "nonlocal active segments={active}/{}", self.setup.active.len());
        for (name, run) in std::iter::once(("main", &self.main)).chain(self.control.as_ref().map(|c| ("control", c))) {
            let _ = writeln!(s, "{name} steps={} t={} stationary={}", run.steps, run.t, run.stationary);
            for q in Quadrant::ALL {
                let _ = writeln!(s, "{name} {q} mean_abs_flux={:.9e} final_flux={:.9e}", run.mean_abs_flux(q), run.final_flux(q));
            }
        }
        let _ = writeln!(s, "verdict north_exceeds_south={}", if self.north_exceeds_south() { "PASS" } else { "FAIL" });
        if let Some(gap) = self.control_gap() {
            let _ = writeln!(s, "verdict control_symmetry gap={gap:.3e} {}", if gap <= 0.01 { "PASS" } else { "FAIL" });
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning {w}");
        }
        s
    }

    /// Flux CSVs, diagnostics and the final fields under `dir`.
    pub fn write_outputs(&self, config: &ScenarioConfig, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        self.main.write_flux_csv(create("flux.csv")?)?;
        write_diagnostics(&self.main.diagnostics, create("diagnostics.csv")?)?;
        if let Some(c) = &self.control {
            c.write_flux_csv(create("flux_control.csv")?)?;
        }
        if config.output.vtk {
            let mut fields = vec![PointField { name: "temperature", values: &self.main.u }];
            if let Some(c) = &self.control {
                fields.push(PointField { name: "temperature_control", values: &c.u });
            }
            write_vtk(&self.setup.tri, &fields, "venttsel transmission", create("field.vtk")?)?;
        }
        Ok(())
    }
}

fn write_diagnostics<W: Write>(records: &[StepRecord], mut out: W) -> Result<()> {
    writeln!(out, "step,t,Mnorm,energy,lin_iters,lin_residual")?;
    for r in records {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e},{},{:.6e}", r.step, r.t, r.m_norm, r.energy, r.lin_iters, r.lin_residual)?;
    }
    Ok(())
}
