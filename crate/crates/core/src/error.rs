//! Error types shared across the solver modules.

use thiserror::Error;

use crate::sparse::CgReport;

/// Errors from grid/field construction, finite-difference operators and `.fld` I/O.
#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("intensity must be strictly positive everywhere")]
    NonPositiveIntensity,
    #[error("slice index {index} out of range (stack has {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("stack has {got} slices, need at least {need}")]
    TooFewSlices { got: usize, need: usize },
    #[error("non-uniform z spacing: {0}")]
    NonUniformZ(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed field file {path}: {reason}")]
    Malformed { path: String, reason: String },
}

/// Errors from the sparse kernel.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: matrix is {n}, vector is {len}")]
    DimensionMismatch { n: usize, len: usize },
    #[error("matrix entries must be finite")]
    NonFiniteEntry,
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("zero or negative diagonal entry at row {row}")]
    ZeroDiagonal { row: usize },
    #[error("NaN detected during iteration {iteration}")]
    NanDetected { iteration: usize },
}

/// Errors from the TIE solves.
#[derive(Debug, Error)]
pub enum TieError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("wavenumber k must be positive, got {0}")]
    NonPositiveWavenumber(f64),
    #[error("boundary data has {got} values, grid boundary has {need} nodes")]
    BoundaryLengthMismatch { got: usize, need: usize },
    #[error(
        "conjugate gradient did not converge: {} iterations, relative residual {:e}",
        report.iterations,
        report.final_residual_rel
    )]
    NotConverged { report: CgReport },
}

/// Errors from the characteristic-curve machinery.
#[derive(Debug, Error)]
pub enum TpeError {
    #[error("point ({x}, {y}, {z}) outside interpolation domain")]
    InterpolationOutOfDomain { x: f64, y: f64, z: f64 },
    #[error("invalid integration setup: {0}")]
    InvalidIntegration(String),
    #[error("wavenumber k must be positive, got {0}")]
    NonPositiveWavenumber(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Errors from the viscosity march.
#[derive(Debug, Error)]
pub enum MarchError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Tpe(#[from] TpeError),
    #[error("invalid march setup: {0}")]
    InvalidSetup(String),
    #[error("transformed variable is not positive: {0}")]
    NonPositivePsi(String),
    #[error("step {step} rejected ({detail}); reduce dz")]
    StepRejected { step: usize, detail: String },
    #[error(
        "conjugate gradient did not converge at step {}: relative residual {:e}",
        step,
        report.final_residual_rel
    )]
    NotConverged { step: usize, report: CgReport },
}
