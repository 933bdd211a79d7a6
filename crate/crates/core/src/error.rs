use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("orbital evaluation supports d = 1 only (got d = {0})")]
    UnsupportedDimension(u32),
    #[error("L^p norm of the envelope diverges: p*m_perp = {product} <= 2d = {two_d}")]
    DivergentNorm { product: f64, two_d: f64 },
    #[error("quadrature did not converge: n vs 2n disagreement {discrepancy:.3e} > {tolerance:.1e}")]
    Accuracy { discrepancy: f64, tolerance: f64 },
    #[error("lambda = {0} lies on a Landau level")]
    Pole(Complex64),
    #[error("shift {0} is numerically in the spectrum: singular solve")]
    NearSpectrum(Complex64),
    #[error("z = {0} is on the branch cut [0, inf) of the square root")]
    Branch(Complex64),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigenvalue iteration failed to converge after {0} sweeps")]
    EigenFailure(usize),
    #[error("a zero of f lies on or too close to the contour near {0}")]
    ZeroOnBoundary(Complex64),
    #[error("winding number is not close to an integer (raw {0:.4})")]
    NonIntegerWinding(f64),
    #[error("maximum subdivision depth {0} exceeded")]
    MaxDepth(usize),
    #[error("normalization point maps to a zero of f")]
    BadNormalizationPoint,
    #[error("point {0} is outside the open unit disk")]
    OutsideDisk(Complex64),
    #[error("Schwarz-Christoffel parameter solve failed: {0}")]
    BisectionFailure(String),
    #[error("rectangle too short for an admissible lambda_0: need im_max >= {needed}, have {have}")]
    RectangleTooShort { needed: f64, have: f64 },
    #[error("gamma = {gamma} must exceed d + 3/2 = {bound}")]
    GammaTooSmall { gamma: f64, bound: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
