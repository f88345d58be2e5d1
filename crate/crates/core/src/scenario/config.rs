use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::MeshOptions;
use crate::scalar::Real;

/// Full description of the transmission experiment and of the study and
/// check drivers. Every section and field is optional in the text form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub coefficients: CoefficientConfig,
    pub source: SourceConfig,
    pub nonlocal: NonlocalConfig,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    pub mesh: MeshConfig,
    pub output: OutputConfig,
    pub study: StudyConfig,
    pub checks: CheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub level: i64,
    /// Side of the outer square.
    pub square_side: f64,
    /// Square center; the snowflake centroid when absent.
    pub center: Option<[f64; 2]>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { level: 3, square_side: 4.0, center: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientConfig {
    pub rho: f64,
    pub rho_s: f64,
    pub c_p: f64,
    pub c_p_s: f64,
    pub k_s: f64,
    pub k_low: f64,
    pub k_high: f64,
    pub b: f64,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { rho: 8000.0, rho_s: 21000.0, c_p: 450.0, c_p_s: 150.0, k_s: 1e6, k_low: 1.0, k_high: 1000.0, b: 0.0 }
    }
}

/// `amplitude · exp(−|x − center|² / (2 variance))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub amplitude: f64,
    /// Defaults to the snowflake centroid.
    pub center: Option<[f64; 2]>,
    pub variance: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { amplitude: 1e5, center: None, variance: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActiveMode {
    /// Segments in the open half-plane above the snowflake centroid.
    UpperHalf,
    All,
    None,
    /// The arc-length intervals in `arcs`.
    Arcs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlocalConfig {
    pub active: ActiveMode,
    pub arcs: Vec<[f64; 2]>,
    pub quadrature_order: usize,
}

impl Default for NonlocalConfig {
    fn default() -> Self {
        Self { active: ActiveMode::UpperHalf, arcs: Vec::new(), quadrature_order: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Constant initial temperature.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    pub theta: f64,
    /// Stop once the relative state change per step drops below `stationary_tol`.
    pub stationary: bool,
    pub stationary_tol: f64,
    /// Relative tolerance of the conjugate gradient solves.
    pub solver_tol: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_final: 1e10, dt: 1e6, theta: 1.0, stationary: true, stationary_tol: 1e-8, solver_tol: 1e-11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Graded,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub kind: MeshFamily,
    /// Defaults to the segment length `3^{-n}`.
    pub target_h: Option<f64>,
    pub mu: f64,
    /// Element size in the outer square.
    pub outer_h: f64,
    pub kappa: f64,
    pub sigma_g: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { kind: MeshFamily::Uniform, target_h: None, mu: 0.3, outer_h: 0.2, kappa: 8.0, sigma_g: 1.0 }
    }
}

impl MeshConfig {
    pub fn options<T: Real>(&self) -> MeshOptions<T> {
        MeshOptions { kappa: T::lit(self.kappa), sigma_g: T::lit(self.sigma_g), ..MeshOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub vtk: bool,
    /// Flux rows are written every `stride` steps.
    pub stride: usize,
    /// Also run with the nonlocal term switched off everywhere.
    pub control: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { vtk: true, stride: 1, control: true }
    }
}

/// Convergence study on the snowflake domain with unit coefficients and
/// source `f(t, x) = t (1 + x₁)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub level: i64,
    pub mu: f64,
    pub theta: f64,
    pub t_final: f64,
    /// Grading parameter `h` of the graded family.
    pub h: Vec<f64>,
    /// Lattice sizes of the quasi-uniform family.
    pub uniform_h: Vec<f64>,
    /// One step per mesh size, shared by both families.
    pub dt: Vec<f64>,
    pub kinds: Vec<MeshFamily>,
    /// Spatial refinement factor of the reference.
    pub reference_h_factor: f64,
    /// Temporal refinement factor of the reference.
    pub reference_dt_factor: usize,
    /// Lattice factor of the fixed mesh of the temporal study.
    pub temporal_m: usize,
    pub temporal_dt: Vec<f64>,
    /// Compare the reference against one twice as fine before using it.
    pub self_consistency: bool,
    pub solver_tol: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let t = 0.25;
        Self {
            level: 2,
            mu: 0.3,
            theta: 0.5,
            t_final: t,
            h: vec![4.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0, 1.0 / 18.0],
            uniform_h: vec![1.0 / 9.0, 1.0 / 18.0, 1.0 / 36.0, 1.0 / 72.0],
            dt: vec![t / 4.0, t / 8.0, t / 16.0, t / 32.0],
            kinds: vec![MeshFamily::Graded, MeshFamily::Uniform],
            reference_h_factor: 4.0,
            reference_dt_factor: 8,
            temporal_m: 2,
            temporal_dt: vec![t / 4.0, t / 8.0, t / 16.0, t / 32.0],
            self_consistency: false,
            solver_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub level: i64,
    pub samples: usize,
    pub dts: Vec<f64>,
    pub steps: usize,
    pub energy_steps: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { level: 1, samples: 200, dts: vec![0.1, 1.0, 10.0], steps: 5, energy_steps: 100, seed: 7 }
    }
}

fn violation(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violation(path, format!("must be positive and finite, got {v}")))
    }
}

fn theta_range(path: &str, v: f64) -> Result<()> {
    if (0.5..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(violation(path, format!("θ must lie in [1/2, 1], got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(0..=8).contains(&g.level) {
            return Err(violation("geometry.level", format!("must lie in 0..=8, got {}", g.level)));
        }
        positive("geometry.square_side", g.square_side)?;
        let c = &self.coefficients;
        for (name, v) in [
            ("coefficients.rho", c.rho),
            ("coefficients.rho_s", c.rho_s),
            ("coefficients.c_p", c.c_p),
            ("coefficients.c_p_s", c.c_p_s),
            ("coefficients.k_s", c.k_s),
            ("coefficients.k_low", c.k_low),
            ("coefficients.k_high", c.k_high),
        ] {
            positive(name, v)?;
        }
        if !(c.b >= 0.0 && c.b.is_finite()) {
            return Err(violation("coefficients.b", format!("must be nonnegative, got {}", c.b)));
        }
        if !self.source.amplitude.is_finite() {
            return Err(violation("source.amplitude", "must be finite"));
        }
        positive("source.variance", self.source.variance)?;
        let nl = &self.nonlocal;
        if nl.quadrature_order == 0 {
            return Err(violation("nonlocal.quadrature_order", "must be positive"));
        }
        if nl.active == ActiveMode::Arcs && nl.arcs.is_empty() {
            return Err(violation("nonlocal.arcs", "mode `arcs` needs at least one interval"));
        }
        for (i, [s0, s1]) in nl.arcs.iter().enumerate() {
            if !(s0 < s1 && *s0 >= 0.0) {
                return Err(violation(&format!("nonlocal.arcs[{i}]"), format!("needs 0 ≤ start < end, got [{s0}, {s1}]")));
            }
        }
        if !self.initial.value.is_finite() {
            return Err(violation("initial.value", "must be finite"));
        }
        let t = &self.time;
        positive("time.t_final", t.t_final)?;
        positive("time.dt", t.dt)?;
        theta_range("time.theta", t.theta)?;
        positive("time.stationary_tol", t.stationary_tol)?;
        positive("time.solver_tol", t.solver_tol)?;
        let m = &self.mesh;
        if let Some(h) = m.target_h {
            positive("mesh.target_h", h)?;
        }
        if !(m.mu > 0.0 && m.mu < 1.0) {
            return Err(violation("mesh.mu", format!("grading exponent must lie in (0, 1), got {}", m.mu)));
        }
        positive("mesh.outer_h", m.outer_h)?;
        positive("mesh.kappa", m.kappa)?;
        positive("mesh.sigma_g", m.sigma_g)?;
        if self.output.stride == 0 {
            return Err(violation("output.stride", "must be positive"));
        }
        self.study.validate()?;
        let ch = &self.checks;
        if !(0..=4).contains(&ch.level) {
            return Err(violation("checks.level", format!("must lie in 0..=4, got {}", ch.level)));
        }
        for (i, &dt) in ch.dts.iter().enumerate() {
            positive(&format!("checks.dts[{i}]"), dt)?;
        }
        if ch.steps == 0 || ch.energy_steps == 0 {
            return Err(violation("checks.steps", "step counts must be positive"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| violation("", e.to_string()))?;
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            violation(if path == "." { "" } else { &path }, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| violation("", e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

impl CoefficientConfig {
    pub fn rho_cp(&self) -> f64 {
        self.rho * self.c_p
    }

    pub fn rho_cp_s(&self) -> f64 {
        self.rho_s * self.c_p_s
    }
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if !(0..=5).contains(&self.level) {
            return Err(violation("study.level", format!("must lie in 0..=5, got {}", self.level)));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(violation("study.mu", format!("grading exponent must lie in (0, 1), got {}", self.mu)));
        }
        theta_range("study.theta", self.theta)?;
        positive("study.t_final", self.t_final)?;
        if self.h.len() < 3 {
            return Err(violation("study.h", format!("needs at least 3 mesh sizes, got {}", self.h.len())));
        }
        if self.uniform_h.len() != self.h.len() {
            return Err(violation("study.uniform_h", format!("needs as many sizes as study.h ({}), got {}", self.h.len(), self.uniform_h.len())));
        }
        if self.dt.len() != self.h.len() {
            return Err(violation("study.dt", format!("needs one step per mesh size ({}), got {}", self.h.len(), self.dt.len())));
        }
        for (name, list) in [
            ("study.h", &self.h),
            ("study.uniform_h", &self.uniform_h),
            ("study.dt", &self.dt),
            ("study.temporal_dt", &self.temporal_dt),
        ] {
            for (i, &v) in list.iter().enumerate() {
                positive(&format!("{name}[{i}]"), v)?;
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(violation(name, "must be strictly decreasing"));
            }
        }
        if self.reference_h_factor < 4.0 {
            return Err(violation("study.reference_h_factor", "reference must be at least 4 times finer"));
        }
        if self.reference_dt_factor < 8 {
            return Err(violation("study.reference_dt_factor", "reference must be at least 8 times finer in time"));
        }
        if self.temporal_m == 0 {
            return Err(violation("study.temporal_m", "must be positive"));
        }
        positive("study.solver_tol", self.solver_tol)?;
        Ok(())
    }
}

/// Reads, fills defaults and validates a TOML scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    ScenarioConfig::from_toml_str(&text)
}
