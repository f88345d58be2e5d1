//! The transmission experiment across the prefractal interface and the
//! drivers behind the command-line front end.

mod checks;
mod config;
mod convergence;
mod sectors;
mod transmission;

pub use config::{
    load_config, ActiveMode, CheckConfig, CoefficientConfig, GeometryConfig, InitialConfig, MeshConfig, MeshFamily,
    NonlocalConfig, OutputConfig, ScenarioConfig, SourceConfig, StudyConfig, TimeConfig,
};
pub use sectors::{Quadrant, SectorMap};
pub use transmission::{relative_gap, run_transmission, simulate, FluxRow, TransmissionReport, TransmissionRun, TransmissionSetup};
pub use convergence::{mesh_family, run_convergence_study, study_problem, verdicts, StudyReport, Verdict};
pub use checks::{check_contraction, check_energy_balance, check_geometry, check_meshes, check_nonlocal, check_round_trip, check_spectral, run_property_checks, CheckOutcome, CheckReport};
