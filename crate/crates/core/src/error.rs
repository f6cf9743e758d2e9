use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, IaError>;

#[derive(Debug, Error)]
pub enum IaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{attempts} consecutive rank-deficient channel draws (p={p}, seed={seed}); RNG looks broken")]
    DegenerateRng { p: usize, seed: u64, attempts: usize },

    #[error("change of basis degenerate at receiver {receiver}: {reason}")]
    DegenerateBasisChange { receiver: usize, reason: String },

    #[error("forbidden entry of H[{receiver}][{transmitter}] at ({row},{col}) has relative magnitude {magnitude:e}")]
    PatternViolation {
        receiver: usize,
        transmitter: usize,
        row: usize,
        col: usize,
        magnitude: f64,
    },

    #[error("support basis is not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("pin {pin} infeasible for chain {chain}: relative residual {residual:e}")]
    PinInfeasible {
        chain: usize,
        pin: usize,
        residual: f64,
    },

    #[error("precoder assembly exhausted all {} attempts: {}", .attempts.len(), .attempts.join("; "))]
    AssemblyExhausted { attempts: Vec<String> },

    #[error("receiver {receiver}: interference complement has {available} dimensions, {required} required")]
    FilterDimension {
        receiver: usize,
        available: usize,
        required: usize,
    },

    #[error("receiver {receiver}: filtered noise covariance is singular")]
    SingularNoise { receiver: usize },

    #[error("{degenerate} of {attempted} draws were degenerate (more than 1%); first failing seeds: {seeds:?}")]
    TooManyDegenerate {
        degenerate: usize,
        attempted: usize,
        seeds: Vec<u64>,
    },

    #[error("draw seed {seed}: {source}")]
    Draw {
        seed: u64,
        #[source]
        source: Box<IaError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl IaError {
    /// Errors that mean "this channel realization is unusable"; callers redraw.
    pub fn is_degenerate_draw(&self) -> bool {
        match self {
            IaError::DegenerateBasisChange { .. }
            | IaError::PatternViolation { .. }
            | IaError::PinInfeasible { .. }
            | IaError::AssemblyExhausted { .. }
            | IaError::FilterDimension { .. }
            | IaError::SingularNoise { .. } => true,
            IaError::Draw { source, .. } => source.is_degenerate_draw(),
            _ => false,
        }
    }

    /// Short machine-readable error kind, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            IaError::InvalidArgument(_) => "invalid_argument",
            IaError::DegenerateRng { .. } => "degenerate_rng",
            IaError::DegenerateBasisChange { .. } => "degenerate_basis_change",
            IaError::PatternViolation { .. } => "pattern_violation",
            IaError::NotOrthonormal { .. } => "not_orthonormal",
            IaError::PinInfeasible { .. } => "pin_infeasible",
            IaError::AssemblyExhausted { .. } => "assembly_exhausted",
            IaError::FilterDimension { .. } => "filter_dimension",
            IaError::SingularNoise { .. } => "singular_noise",
            IaError::TooManyDegenerate { .. } => "too_many_degenerate",
            IaError::Draw { .. } => "draw_failure",
            IaError::Io { .. } => "io",
            IaError::Output { .. } => "output",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            IaError::Draw { seed, .. } => Some(*seed),
            IaError::DegenerateRng { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}
