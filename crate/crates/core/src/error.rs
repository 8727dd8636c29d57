use core::fmt;

/// Failure modes of the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Design points are unsorted, duplicated, outside `[0, 1]` or not finite.
    InvalidDesign(&'static str),
    /// Fewer observations than the method needs.
    InsufficientData { needed: usize, got: usize },
    /// Evaluation point outside the knot range.
    OutOfRange { x: f64, lo: f64, hi: f64 },
    /// Derivative order larger than the spline degree.
    DerivativeOrder { order: usize, max: usize },
    /// Scale is zero for the given data (e.g. all successive differences vanish).
    DegenerateScale,
    /// A scale argument was not strictly positive.
    InvalidScale(f64),
    /// Vector or matrix dimensions disagree.
    DimensionMismatch { expected: usize, got: usize },
    /// The penalized normal equations are not numerically positive definite.
    IllPosed,
    /// `edf / n >= 1`: the GCV denominator vanishes.
    DegenerateGcv { edf: f64, n: usize },
    /// Every candidate lambda failed during selection.
    SelectionFailed,
    /// An option or parameter is outside its admissible range.
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDesign(why) => write!(f, "invalid design: {why}"),
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need at least {needed} points, got {got}")
            }
            Error::OutOfRange { x, lo, hi } => {
                write!(f, "evaluation point {x} outside knot range [{lo}, {hi}]")
            }
            Error::DerivativeOrder { order, max } => {
                write!(f, "derivative order {order} exceeds maximum {max}")
            }
            Error::DegenerateScale => write!(f, "degenerate scale: data has zero spread"),
            Error::InvalidScale(s) => write!(f, "scale must be positive, got {s}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::IllPosed => write!(f, "penalized system is numerically singular"),
            Error::DegenerateGcv { edf, n } => {
                write!(f, "degenerate GCV: edf {edf} leaves no residual degrees of freedom (n = {n})")
            }
            Error::SelectionFailed => write!(f, "smoothing parameter selection failed at every candidate"),
            Error::InvalidParameter(why) => write!(f, "invalid parameter: {why}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
