use std::path::PathBuf;

/// Errors raised by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("initial data at ({x:.6}, {y:.6}, {z:.6}) is not symmetric trace-free (asym {asym:.3e}, trace {trace:.3e})")]
    InitialData {
        x: f64,
        y: f64,
        z: f64,
        asym: f64,
        trace: f64,
    },

    /// The quadratization radicand `2(F_B(Q) + A0)` was not positive.
    #[error("radicand {radicand:.6e} <= 0 at node {node:?}; increase A0")]
    QuadratizationShift {
        radicand: f64,
        node: Option<[isize; 3]>,
    },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("operator is not positive definite: <p, A p> = {curvature:.3e} at iteration {iteration}")]
    NotPositiveDefinite { curvature: f64, iteration: usize },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("structure drift at step {step}: trace {trace_drift:.3e}, asymmetry {sym_drift:.3e} exceed {tolerance:.1e}")]
    Integrity {
        step: usize,
        trace_drift: f64,
        sym_drift: f64,
        tolerance: f64,
    },

    #[error("dense assembly refused: {interior} interior nodes per axis exceeds {limit}")]
    GridTooLarge { interior: usize, limit: usize },

    #[error("singular matrix in direct solve")]
    Singular,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a node location to a quadratization-shift error.
    pub fn at_node(self, idx: [isize; 3]) -> Self {
        match self {
            Error::QuadratizationShift { radicand, .. } => Error::QuadratizationShift {
                radicand,
                node: Some(idx),
            },
            e => e,
        }
    }

    /// Wraps `self` with the index of the step it occurred in.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ (Error::Step { .. } | Error::Integrity { .. }) => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }
}
