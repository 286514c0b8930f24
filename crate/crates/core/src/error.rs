use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical modules and the command line front end.
///
/// Every variant maps to a stable machine-readable code via [`Error::code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("curve is not embedded: estimated radius {radius:e}")]
    NotEmbedded { radius: f64 },

    #[error("no admissible reference direction, best clearance {clearance:e}")]
    NoAdmissibleDirection { clearance: f64 },

    #[error("point at distance {dist:e} from the curve is treated as on-curve")]
    Singular { dist: f64 },

    #[error("point outside the tube: nearest parameter {param}, distance {dist:e}, radius {radius:e}")]
    OutsideTube { param: f64, dist: f64, radius: f64 },

    #[error("non-positive area element at s = {param}, theta = {theta}")]
    NonPositiveArea { param: f64, theta: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e}")]
    Quadrature { estimate: f64 },

    #[error("time step underflow at t = {time} after {halvings} halvings")]
    StepUnderflow { time: f64, halvings: u32 },

    #[error("ellipticity violated at sample {index}: coefficient {value:e}")]
    Ellipticity { index: usize, value: f64 },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DegenerateCurve(_) => "degenerate-curve",
            Error::NotEmbedded { .. } => "not-embedded",
            Error::NoAdmissibleDirection { .. } => "no-admissible-direction",
            Error::Singular { .. } => "singular-point",
            Error::OutsideTube { .. } => "outside-tube",
            Error::NonPositiveArea { .. } => "non-positive-area",
            Error::Quadrature { .. } => "quadrature-failure",
            Error::StepUnderflow { .. } => "step-underflow",
            Error::Ellipticity { .. } => "ellipticity",
            Error::Io { .. } => "io-failure",
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
