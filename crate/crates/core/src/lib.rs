//! Constructs a smooth bi-Carleman kernel for a matrix operator with a
//! designated null sequence, and verifies its properties numerically.

pub mod assignment;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod splitting;
pub mod verify;
pub mod wavelet;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use kernel::{KernelModel, Orientation};
pub use linalg::{ComplexMatrix, ComplexVector, SchmidtSystem, C64};
pub use pipeline::Pipeline;
pub use splitting::OperatorEnvironment;
pub use verify::{run_all, VerificationReport};
