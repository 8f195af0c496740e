//! Elliptic solid-on-solid partition functions: theta functions, the dynamical
//! R-matrix and monodromy oracle, functional equations, determinant formulas
//! and a verification harness tying them together.

pub mod detrep;
pub mod error;
pub mod funceq;
pub mod harness;
pub mod model;
pub mod monodromy;
pub mod numerics;
pub mod report;
pub mod theta;

pub use error::{Error, Result};
pub use harness::{run_suite, SamplePolicy, SuiteConfig, SuiteLevel, SuiteResult};
pub use model::{ModelParams, ProductOrder, SpectralConfig};
pub use numerics::{DenseMatrix, Scalar};
pub use report::Report;
pub use theta::ThetaContext;
