use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("payload size mismatch: expected {expected} bytes, found {found}")]
    PayloadSizeMismatch { expected: usize, found: usize },

    #[error("tissue id {0} has no entry in the tissue table")]
    UnknownTissue(u16),

    #[error("invalid conductivity samples: {0}")]
    InvalidSamples(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("shape exceeds grid bounds: {0}")]
    ShapeOutOfBounds(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {family} '{name}' (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },

    #[error("evaluation point {point:?} lies within {distance:e} m of coil segment {segment}")]
    SingularPoint {
        point: [f64; 3],
        segment: usize,
        distance: f64,
    },

    #[error("coarse lattice has {points} point(s) along axis {axis}, but interpolation along it is required")]
    InsufficientLattice { axis: usize, points: usize },

    #[error("malformed field sample file: {0}")]
    MalformedSamples(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gauging stalled with {undetermined} undetermined edge(s)")]
    GaugingStall { undetermined: usize },

    #[error("incompatible fluxes: relative residual {residual:e} exceeds {tol:e} (worst face {worst_face})")]
    IncompatibleFlux {
        worst_face: usize,
        residual: f64,
        tol: f64,
    },

    #[error("empty system: no conductive nodes")]
    EmptySystem,

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed matrix market file: {0}")]
    MatrixMarket(String),

    #[error("step '{step}' failed: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the pipeline step that failed, if this error came from one.
    pub fn step(&self) -> Option<&'static str> {
        match self {
            Error::Step { step, .. } => Some(step),
            _ => None,
        }
    }
}
