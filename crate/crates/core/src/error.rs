//! Error types shared across the crate.

use thiserror::Error;

/// Problems with a configuration file or with programmatically constructed
/// problem data.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("line {line}: duplicate key `{key}` in section [{section}]")]
    DuplicateKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { section: String, line: usize },
    #[error("missing section [{section}]")]
    MissingSection { section: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("line {line}: key `{section}.{key}`: {message}")]
    BadValue {
        section: String,
        key: String,
        line: usize,
        message: String,
    },
    #[error("key `{section}.{key}`: {message}")]
    Invalid {
        section: String,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Geometry construction failures.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("void {void}: sampled boundary is not star-shaped around its center (angle ordering breaks at sample {sample})")]
    NotStarShaped { void: usize, sample: usize },
    #[error("void {void}: sampled boundary radius {radius} is not positive")]
    NonPositiveRadius { void: usize, radius: f64 },
    #[error(
        "void {void}: expanded inverted-boundary control radius {radius} is not positive \
         (shell offset exceeds the outer boundary)"
    )]
    ShellExceedsBoundary { void: usize, radius: f64 },
}

/// Finite element solve failures.
#[derive(Debug, Error)]
pub enum FemError {
    #[error("stiffness matrix is not positive definite (pivot {pivot} at dof {dof})")]
    NotPositiveDefinite { dof: usize, pivot: f64 },
    #[error(
        "conjugate gradient stalled after {iterations} iterations: \
         relative residual {residual:e} above tolerance {tolerance:e}"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("load case {case}: residual {residual:e} exceeds {tolerance:e} * |f|")]
    ResidualCheck {
        case: usize,
        residual: f64,
        tolerance: f64,
    },
}

/// Failures during an optimization run.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("geometry failure at iteration {iteration}: {source}\noffending design: {design:?}")]
    Geometry {
        iteration: usize,
        source: GeometryError,
        design: Vec<f64>,
    },
    #[error("FEM failure at iteration {iteration}: {source}\noffending design: {design:?}")]
    Fem {
        iteration: usize,
        source: FemError,
        design: Vec<f64>,
    },
    #[error("non-finite {quantity} at iteration {iteration}\noffending design: {design:?}")]
    NonFinite {
        iteration: usize,
        quantity: String,
        design: Vec<f64>,
    },
}

impl RunError {
    pub fn iteration(&self) -> usize {
        match self {
            RunError::Geometry { iteration, .. }
            | RunError::Fem { iteration, .. }
            | RunError::NonFinite { iteration, .. } => *iteration,
        }
    }
}
