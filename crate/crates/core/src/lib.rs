//! Supercloseness of Galerkin projections onto Lagrange finite element spaces
//! built over two meshes that differ on a small region.

pub mod clip;
pub mod config;
pub mod error;
pub mod forms;
pub mod function;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod projection;
pub mod quadrature;
pub mod report;
pub mod space;
pub mod study;
pub mod theory;

pub use error::{Error, Result};
pub use forms::BilinearFormSpec;
pub use function::FunctionSpec;
pub use mesh::{Mesh, MeshPair};
pub use norms::NormSpec;
pub use space::{FeFunction, FeSpace};
pub use study::{StudyConfig, StudyResult, StudyRow};
pub use theory::{Delta, RateInputs};
