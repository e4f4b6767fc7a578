use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A state or parameter outside the physical domain of a closure.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("vacuum generated by Riemann data (u_R - u_L = {du:.6e} >= critical {critical:.6e})")]
    Vacuum { du: f64, critical: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("degenerate eigensystem: {0}")]
    Degenerate(String),

    #[error("time step {dt:.6e} violates the advective CFL limit (courant number {courant:.4})")]
    Cfl { dt: f64, courant: f64 },

    #[error("level set has no sign change")]
    NoInterface,

    #[error("degenerate level-set gradient at cell ({i}, {j})")]
    DegenerateGradient { i: usize, j: usize },

    #[error("interface fit: {0}")]
    Fit(String),

    #[error("cell ({i}, {j}) at t = {t:.9e} [{mode}]: {source}")]
    Cell {
        i: usize,
        j: usize,
        t: f64,
        mode: String,
        #[source]
        source: Box<Error>,
    },

    #[error("interface at ({i}, {j}) [{axis}]: {source}")]
    Face {
        i: usize,
        j: usize,
        axis: char,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step} at t = {t:.9e}: {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Strips context wrappers and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Cell { source, .. } | Error::Face { source, .. } | Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_scenario_error(&self) -> bool {
        matches!(self.root(), Error::Scenario(_) | Error::Parse { .. })
    }

    pub fn is_io_error(&self) -> bool {
        matches!(self.root(), Error::Io { .. })
    }
}
