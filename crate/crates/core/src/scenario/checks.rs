use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use crate::analysis::{nonlocal_oracle_matrix, spectral_bounds, ORACLE_MAX_EDGES};
use crate::assembly::{assemble_load, assemble_nonlocal_block, assemble_system, BoundaryMesh, CoefficientField, NonlocalOptions, Source};
use crate::error::Result;
use crate::geometry::{is_simple, snowflake, PrefractalCurve};
use crate::linalg::{self, LinearOperator, SolveOptions};
use crate::mesh::{boundary_trace_map, build_graded_mesh, build_quasi_uniform_mesh, check_grading, GradingParams, MeshOptions, Region};
use crate::mesh::Triangulation;
use crate::time::{LinearSolver, Pencil, ThetaScheme, ThetaStepper};

/// One measured invariant: `pass` records whether `value` met `limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub quantity: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl CheckOutcome {
    fn at_most(module: &'static str, quantity: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { module, quantity: quantity.into(), value, limit, pass: value <= limit }
    }

    fn at_least(module: &'static str, quantity: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { module, quantity: quantity.into(), value, limit, pass: value >= limit }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {:.6e} (limit {:.3e}) {}", self.module, self.quantity, self.value, self.limit, if self.pass { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.pass)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "module,quantity,value,limit,pass")?;
        for o in &self.outcomes {
            writeln!(out, "{},{},{:.9e},{:.9e},{}", o.module, o.quantity, o.value, o.limit, o.pass)?;
        }
        Ok(())
    }
}

fn lattice(level: i64, m: usize) -> Result<(PrefractalCurve<f64>, Triangulation<f64>)> {
    let curve = snowflake::<f64>(level)?;
    let h = curve.segment_length(0) / m as f64;
    let tri = build_quasi_uniform_mesh(&curve, h, Region::Interior, &MeshOptions::default())?;
    Ok((curve, tri))
}

/// Segment count, uniform lengths, angle classes and simplicity of the
/// snowflake at each level.
pub fn check_geometry(levels: impl IntoIterator<Item = i64>) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for n in levels {
        let c = snowflake::<f64>(n)?;
        let want = 3 * 4usize.pow(n as u32);
        let segs = c.num_segments();
        out.push(CheckOutcome { module: "geometry", quantity: format!("level {n} segments"), value: segs as f64, limit: want as f64, pass: segs == want });
        let len = 3f64.powi(-(n as i32));
        let dev = (0..segs).map(|k| (c.segment_length(k) - len).abs() / len).fold(0.0, f64::max);
        out.push(CheckOutcome::at_most("geometry", format!("level {n} segment length deviation"), dev, 1e-14));
        let angle_dev = c
            .angles
            .iter()
            .map(|&a| (a - PI / 3.0).abs().min((a - 4.0 * PI / 3.0).abs()))
            .fold(0.0, f64::max);
        out.push(CheckOutcome::at_most("geometry", format!("level {n} angle deviation"), angle_dev, 1e-12));
        let simple = is_simple(&c);
        out.push(CheckOutcome { module: "geometry", quantity: format!("level {n} simple"), value: f64::from(u8::from(simple)), limit: 1.0, pass: simple });
    }
    Ok(out)
}

/// Assembled nonlocal block against the adaptive oracle, plus symmetry,
/// constants in the kernel and semidefiniteness, on traces with at most
/// `ORACLE_MAX_EDGES` edges.
pub fn check_nonlocal(cases: &[(i64, usize)]) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for &(level, m) in cases {
        let (curve, tri) = lattice(level, m)?;
        let trace = boundary_trace_map(&tri, &curve)?;
        let bm = BoundaryMesh::from_triangulation(&tri, &trace);
        let tag = format!("level {level} m={m} ({} edges)", bm.edges.len());
        if bm.edges.len() > ORACLE_MAX_EDGES {
            out.push(CheckOutcome::at_most("fem-assembly", format!("{tag} edge count"), bm.edges.len() as f64, ORACLE_MAX_EDGES as f64));
            continue;
        }
        let active = vec![true; bm.edges.len()];
        let oracle = nonlocal_oracle_matrix(&bm, &active)?;
        let (block, dofs) = assemble_nonlocal_block(&bm, &active, 6)?;
        let mut worst = 0.0f64;
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                let (x, y) = (block[(a, b)], oracle[(i, j)]);
                worst = worst.max((x - y).abs() / y.abs().max(f64::MIN_POSITIVE));
            }
        }
        out.push(CheckOutcome::at_most("fem-assembly", format!("{tag} max relative deviation from oracle"), worst, 1e-6));
        out.push(CheckOutcome::at_most("fem-assembly", format!("{tag} asymmetry"), block.max_asymmetry(), 0.0));
        let scale = block.max_abs();
        let ones = vec![1.0; block.rows];
        let row = block.apply(&ones).iter().fold(0.0f64, |a, b| a.max(b.abs())) / scale;
        out.push(CheckOutcome::at_most("fem-assembly", format!("{tag} |Θ·1| / max|Θ|"), row, 1e-10));
        let dm = DMatrix::from_fn(block.rows, block.cols, |i, j| block[(i, j)]);
        let min_eig = SymmetricEigen::new(dm).eigenvalues.min();
        out.push(CheckOutcome::at_least("fem-assembly", format!("{tag} min eigenvalue"), min_eig, -1e-10));
    }
    Ok(out)
}

/// `‖u^{l+1}‖_{L²(Ω,m)} ≤ ‖u^l‖_{L²(Ω,m)}` for `f = 0` from random states.
pub fn check_contraction(config: &ScenarioConfig, seed: u64) -> Result<Vec<CheckOutcome>> {
    let ch = &config.checks;
    let (curve, tri) = lattice(ch.level, 2)?;
    let coeffs = CoefficientField::unit(config.coefficients.b);
    let sys = assemble_system(&tri, &curve, &coeffs, &NonlocalOptions::default())?;
    let n = sys.dim();
    let zero = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &dt in &ch.dts {
        let stepper = ThetaStepper::new(Pencil { mass: &sys.mass, a: &sys.a }, ThetaScheme::new(config.time.theta, dt)?, LinearSolver::Direct)?;
        let (mut violations, mut worst) = (0usize, f64::NEG_INFINITY);
        for _ in 0..ch.samples {
            let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut norm = sys.mass.quad_form(&u).sqrt();
            for _ in 0..ch.steps {
                let (next, _) = stepper.step(&u, &zero, &zero)?;
                let next_norm = sys.mass.quad_form(&next).sqrt();
                let growth = (next_norm - norm) / norm.max(f64::MIN_POSITIVE);
                worst = worst.max(growth);
                if growth > 1e-12 {
                    violations += 1;
                }
                u = next;
                norm = next_norm;
            }
        }
        out.push(CheckOutcome::at_most("time-integrator", format!("dt={dt} contraction violations"), violations as f64, 0.0));
        out.push(CheckOutcome::at_most("time-integrator", format!("dt={dt} max relative growth"), worst, 1e-12));
    }
    Ok(out)
}

/// Per-step energy identity of the Crank–Nicolson scheme,
/// `½(‖u⁺‖²_M − ‖u‖²_M) + Δt a(ū, ū) = Δt (F̄, ū)`, compared with the bound
/// `‖ū‖ ‖r‖ ≤ tol ‖b‖ ‖ū‖` implied by the solver residual `r`.
pub fn check_energy_balance(config: &ScenarioConfig) -> Result<Vec<CheckOutcome>> {
    let ch = &config.checks;
    let (curve, tri) = lattice(ch.level, 2)?;
    let sys = assemble_system(&tri, &curve, &CoefficientField::unit(config.coefficients.b.max(0.0)), &NonlocalOptions::default())?;
    let n = sys.dim();
    let source = Source::new(|t: f64, p: [f64; 2]| (1.0 + p[0]) * (2.0 * PI * t).cos());
    let tol = 1e-10;
    let dt = 0.01;
    let stepper = ThetaStepper::new(
        Pencil { mass: &sys.mass, a: &sys.a },
        ThetaScheme::crank_nicolson(dt)?,
        LinearSolver::Cg(SolveOptions { tol, max_iter: 10_000 }),
    )?;
    let mut u: Vec<f64> = (0..n).map(|i| tri.nodes[i][1].sin()).collect();
    let mut f = assemble_load(&tri, &source, 0.0);
    let mut worst = 0.0f64;
    for l in 0..ch.energy_steps {
        let f_next = assemble_load(&tri, &source, (l + 1) as f64 * dt);
        let (next, _) = stepper.step(&u, &f, &f_next)?;
        let mu = sys.mass.apply(&u);
        let au = LinearOperator::apply(&sys.a, &u);
        let b: Vec<f64> = (0..n).map(|i| mu[i] - 0.5 * dt * au[i] + 0.5 * dt * (f[i] + f_next[i])).collect();
        let bar: Vec<f64> = next.iter().zip(&u).map(|(a, b)| 0.5 * (a + b)).collect();
        let fbar: Vec<f64> = f.iter().zip(&f_next).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = 0.5 * (sys.mass.quad_form(&next) - sys.mass.quad_form(&u)) + dt * sys.a.quad_form(&bar);
        let rhs = dt * linalg::dot(&fbar, &bar);
        let bound = tol * linalg::norm2(&b) * linalg::norm2(&bar);
        worst = worst.max((lhs - rhs).abs() / bound);
        u = next;
        f = f_next;
    }
    Ok(vec![CheckOutcome::at_most(
        "time-integrator",
        format!("{} steps energy defect / (solver tol ‖b‖ ‖ū‖)", ch.energy_steps),
        worst,
        10.0,
    )])
}

/// `c₁`, `c₂` and the coercivity constant at levels 1 and 2 on two lattice
/// sizes each: positive, and within a factor two across the refinement.
pub fn check_spectral(levels: &[i64], b: f64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for &level in levels {
        let mut rows = Vec::new();
        for m in [1usize, 2] {
            let (curve, tri) = lattice(level, m)?;
            let s = spectral_bounds(&tri, &curve, b)?;
            for (name, v) in [("c1", s.c1), ("c2", s.c2), ("coercivity", s.coercivity), ("friedrichs", s.friedrichs)] {
                out.push(CheckOutcome::at_least("analysis-harness", format!("level {level} m={m} {name}"), v, f64::MIN_POSITIVE));
            }
            rows.push(s);
        }
        for (name, a, c) in [
            ("c1", rows[0].c1, rows[1].c1),
            ("c2", rows[0].c2, rows[1].c2),
            ("coercivity", rows[0].coercivity, rows[1].coercivity),
        ] {
            let ratio = (a / c).max(c / a);
            out.push(CheckOutcome::at_most("analysis-harness", format!("level {level} {name} refinement ratio"), ratio, 2.0));
        }
    }
    Ok(out)
}

/// Graded meshes meet both grading conditions and the mesh invariants.
pub fn check_meshes(level: i64) -> Result<Vec<CheckOutcome>> {
    let curve = snowflake::<f64>(level)?;
    let opts = MeshOptions::default();
    let h = curve.segment_length(0);
    let tri = build_graded_mesh(&curve, h, 0.3, Region::Interior, &opts)?;
    let report = check_grading(&tri, &curve, GradingParams::new(h, 0.3, opts.sigma_g)?);
    let valid = tri.validate().is_ok();
    Ok(vec![
        CheckOutcome::at_most("graded-mesh", format!("level {level} grading failures"), report.failures() as f64, 0.0),
        CheckOutcome { module: "graded-mesh", quantity: format!("level {level} mesh valid"), value: f64::from(u8::from(valid)), limit: 1.0, pass: valid },
        CheckOutcome::at_most("graded-mesh", format!("level {level} shape ratio"), tri.max_shape_ratio(), opts.kappa),
    ])
}

/// `load(save(config)) = config`.
pub fn check_round_trip(config: &ScenarioConfig) -> Result<Vec<CheckOutcome>> {
    let back = ScenarioConfig::from_toml_str(&config.to_toml_string()?)?;
    let same = &back == config;
    Ok(vec![CheckOutcome { module: "venttsel-cli", quantity: "config round trip".into(), value: f64::from(u8::from(same)), limit: 1.0, pass: same }])
}

/// The invariant suite of every module on small instances.
pub fn run_property_checks(config: &ScenarioConfig, seed: u64) -> Result<CheckReport> {
    config.validate()?;
    let mut outcomes = check_geometry(0..=4)?;
    outcomes.extend(check_meshes(config.checks.level)?);
    outcomes.extend(check_nonlocal(&[(1, 4), (2, 1)])?);
    outcomes.extend(check_contraction(config, seed)?);
    outcomes.extend(check_energy_balance(config)?);
    outcomes.extend(check_spectral(&[1, 2], 1.0)?);
    outcomes.extend(check_round_trip(config)?);
    Ok(CheckReport { outcomes })
}
