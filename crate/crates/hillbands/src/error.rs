use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lambda = {re}{im:+}i lies outside the analyticity domain: {reason}")]
    Domain { re: f64, im: f64, reason: String },

    #[error("integration failed after {steps} steps at x = {x}")]
    Integration { x: f64, steps: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero suspected on the contour after {retries} dilations")]
    BoundaryZero { retries: usize },

    #[error("winding number {value} is not close to an integer")]
    Precision { value: f64 },

    #[error("subdivision exceeded depth {0}")]
    Depth(usize),

    #[error("count mismatch during subdivision: parent {parent}, children {children}")]
    CountMismatch { parent: i64, children: i64 },

    #[error("{0} is a spectral point")]
    SpectralPoint(String),

    #[error("band ordering violated: {0}")]
    Structure(String),

    #[error("region not supported: {0}")]
    UnsupportedRegion(String),

    #[error("multipliers collide near a ramification: gap {gap:e}")]
    NearRamification { gap: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(re: f64, im: f64, reason: impl Into<String>) -> Self {
        Error::Domain {
            re,
            im,
            reason: reason.into(),
        }
    }

    /// Wraps the error with a short annotation, e.g. the region being searched.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
