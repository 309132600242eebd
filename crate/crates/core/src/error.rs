use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point dimension {found} does not match ambient dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported manifold: {0}")]
    Unsupported(String),

    #[error(
        "candidate pool of {pool} points cannot certify an epsilon-net at epsilon = {epsilon}; \
         at least {required} candidates are required"
    )]
    PoolTooSmall {
        epsilon: f64,
        pool: usize,
        required: usize,
    },

    #[error("coverage check failed: max probe-to-net distance {max_gap} exceeds epsilon = {epsilon}")]
    CoverageFailed { epsilon: f64, max_gap: f64 },

    #[error("vertex {vertex} received no Monte Carlo samples out of {mc_points}; raise mc_points")]
    EmptyCell { vertex: usize, mc_points: usize },

    #[error("vertex {vertex} is isolated (zero degree)")]
    IsolatedVertex { vertex: usize },

    #[error("graph is disconnected: component sizes {component_sizes:?}")]
    Disconnected { component_sizes: Vec<usize> },

    #[error("tensor is not Hermitian: asymmetry {asymmetry:e} exceeds 1e-10")]
    NonHermitian { asymmetry: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("eigensolver did not converge after {iterations} iterations (matrix size {size}, norm {norm:e})")]
    NoConvergence {
        size: usize,
        iterations: usize,
        norm: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Wraps the error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PoolTooSmall { .. } | Error::CoverageFailed { .. } => 2,
            Error::Disconnected { .. } | Error::IsolatedVertex { .. } => 3,
            Error::Io { .. } => 4,
            Error::Parse { .. } => 5,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 6,
        }
    }
}
