use std::path::PathBuf;

/// Errors raised by domain construction, the discrete operators and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("EmptyDomain: no grid node lies strictly inside the shape")]
    EmptyDomain,
    #[error("BadMaskFile: {path}: {reason}")]
    BadMaskFile { path: PathBuf, reason: String },
    #[error("CenterTooShallow: depth {depth} at the cone center is below R - h = {min_depth}")]
    CenterTooShallow { depth: f64, min_depth: f64 },
    #[error(
        "CollarTooThin: collar covers {collar} but the kernel truncation radius is {truncation}"
    )]
    CollarTooThin { collar: f64, truncation: f64 },
    #[error("TruncationTooShort: truncation radius {truncation} is below the interior diameter {diameter}")]
    TruncationTooShort { truncation: f64, diameter: f64 },
    #[error("DomainMismatch: grid functions live on different domains")]
    DomainMismatch,
    #[error("NotInterior: node {0} is not an interior node")]
    NotInterior(usize),
    #[error("ZeroFunction: the function vanishes identically")]
    ZeroFunction,
    #[error("Overflow: {0} exceeds the representable range")]
    Overflow(&'static str),
    #[error(
        "NotProjectable: [u]_(alpha,p)^p >= mu |u|_inf^p, no multiple of u lies on the Nehari set"
    )]
    NotProjectable,
    #[error("WrongCase: {0}")]
    WrongCase(&'static str),
    #[error("MuBelowThreshold: mu = {mu:e} is below the first eigenvalue estimate {lambda:e}")]
    MuBelowThreshold { mu: f64, lambda: f64 },
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("QEqualsOne: the exponent ratio Q must differ from 1")]
    QEqualsOne,
    #[error("LambdaTooSmall: Lambda * R^alpha = {0} must exceed 1")]
    LambdaTooSmall(f64),
    #[error("DegenerateInput: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for configuration problems that are detectable before any computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::QEqualsOne
                | Error::LambdaTooSmall(_)
                | Error::EmptyDomain
                | Error::BadMaskFile { .. }
                | Error::CollarTooThin { .. }
                | Error::TruncationTooShort { .. }
                | Error::WrongCase(_)
                | Error::Parse(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
