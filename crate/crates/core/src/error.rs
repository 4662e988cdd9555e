use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("packet width {width} is not resolvable on spacing {spacing} (need width >= 2 * spacing)")]
    Resolution { width: f64, spacing: f64 },

    #[error("packet tail reaches the periodic boundary: relative amplitude {tail:e} exceeds {tolerance:e}")]
    Boundary { tail: f64, tolerance: f64 },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve passes through the excluded region around ({cx}, {cy}) (radius {radius})")]
    ExcludedRegion { cx: f64, cy: f64, radius: f64 },

    #[error("quadrature did not converge after {levels} refinement levels (last change {change:e})")]
    NonConvergence { levels: usize, change: f64 },

    #[error("operator ill-defined: translated curve crosses a flux core where the state has support")]
    Topology,

    #[error("wave function reaches an excluded core: mass fraction {fraction:e}")]
    CoreCollision { fraction: f64 },

    #[error("packets overlap: overlap {overlap:e} exceeds tolerance {tolerance:e}")]
    Overlap { overlap: f64, tolerance: f64 },

    #[error("gauge kind does not match the potential basis")]
    KindMismatch,

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NonConvergence { .. }
                | Error::CoreCollision { .. }
                | Error::Topology
                | Error::ExcludedRegion { .. }
                | Error::Overlap { .. }
                | Error::Boundary { .. }
                | Error::Resolution { .. }
        )
    }
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error beneath any context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
