use thiserror::Error;

/// Broad class of a failure, shared by the CLI exit codes and the service's
/// machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Reference,
    InsufficientData,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Reference => 3,
            ErrorKind::InsufficientData => 4,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Reference => "reference",
            ErrorKind::InsufficientData => "insufficient_data",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("mode registry error: {0}")]
    Registry(String),
    #[error("photon number {photons} exceeds the supported maximum of {max}")]
    TooManyPhotons { photons: usize, max: usize },
    #[error("impossible outcome: post-selection probability {probability:e} is below threshold")]
    ImpossibleOutcome { probability: f64 },
    #[error("invalid frequencies: {0}")]
    InvalidFrequencies(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("photon reaches unterminated port {0}")]
    DanglingPath(String),
    #[error("unknown scene {0:?}")]
    UnknownScene(String),
    #[error("unknown component {0:?}")]
    UnknownComponent(String),
    #[error("component {component:?} has no parameter {param:?}")]
    UnknownParam { component: String, param: String },
    #[error("invalid value for {param}: {message}")]
    InvalidValue { param: String, message: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("configuration error: {0}")]
    Configuration(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownScene(_) | Error::UnknownComponent(_) | Error::UnknownParam { .. } => {
                ErrorKind::Reference
            }
            Error::InsufficientData(_) => ErrorKind::InsufficientData,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
