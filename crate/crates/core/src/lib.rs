//! Heat transfer with nonlocal Venttsel' boundary dynamics on Koch
//! prefractal domains, discretized with P1 finite elements and the θ-method.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod scalar;
pub mod scenario;
pub mod time;

pub use error::{Error, Result};
pub use scalar::{Point, Real};

pub type Curve = geometry::PrefractalCurve<f64>;
pub type Mesh = mesh::Triangulation<f64>;
