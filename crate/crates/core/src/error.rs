use thiserror::Error;

pub type Result<T> = std::result::Result<T, GridError>;

/// Coarse error class used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    InputData,
    Numerical,
}

impl std::fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorCategory::Config => "config",
            ErrorCategory::InputData => "input-data",
            ErrorCategory::Numerical => "numerical",
        })
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("injections are unbalanced: sum of P = {sum:e}")]
    Unbalanced { sum: f64 },

    #[error("line {line} is degenerate: R = X = 0")]
    DegenerateLine { line: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("maximally loaded line is ambiguous: lines {lines:?} tie")]
    AmbiguousMaxLoad { lines: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (mismatch {mismatch:e})")]
    NonConvergence { iterations: usize, mismatch: f64 },

    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("at X = {x_ohms} ohm: {source}")]
    SweepPoint {
        x_ohms: f64,
        #[source]
        source: Box<GridError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GridError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            GridError::Config(_) | GridError::UnknownName { .. } | GridError::InvalidArgument(_) => {
                ErrorCategory::Config
            }
            GridError::Singular(_)
            | GridError::Residual { .. }
            | GridError::NonConvergence { .. }
            | GridError::SingularJacobian { .. }
            | GridError::AmbiguousMaxLoad { .. } => ErrorCategory::Numerical,
            GridError::SweepPoint { source, .. } => source.category(),
            _ => ErrorCategory::InputData,
        }
    }
}
