use alloc::string::String;
use core::fmt;

use num_complex::Complex64;

/// Errors produced by the design and simulation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    Dimension { op: &'static str, detail: String },
    /// An iterative routine did not converge.
    NoConvergence { what: &'static str, iterations: usize },
    /// Overflow or a non-finite intermediate.
    Numerical(String),
    /// A linear or Sylvester equation has no unique solution.
    Unsolvable {
        reason: String,
        eigenvalue: Option<Complex64>,
    },
    /// σ(A₁+F₀C₁) collides with σ(A₂); the caller should move the sensor poles.
    SpectralOverlap { eigenvalue: Complex64, distance: f64 },
    /// A design step is infeasible (lost observability, singular transform, ...).
    Design(String),
    /// Caller-supplied data is malformed.
    Input(String),
    /// Simulation settings violate a stability bound.
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { op, detail } => write!(f, "{op}: dimension mismatch ({detail})"),
            Error::NoConvergence { what, iterations } => {
                write!(f, "{what} did not converge after {iterations} iterations")
            }
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Unsolvable { reason, eigenvalue } => match eigenvalue {
                Some(ev) => write!(
                    f,
                    "unsolvable: {reason} (nearly common eigenvalue {:.6}{:+.6}i)",
                    ev.re, ev.im
                ),
                None => write!(f, "unsolvable: {reason}"),
            },
            Error::SpectralOverlap { eigenvalue, distance } => write!(
                f,
                "spectral overlap: eigenvalue {:.6}{:+.6}i of A2 lies within {distance:.3e} of \
                 the sensor poles; shift the sensor poles and retry",
                eigenvalue.re, eigenvalue.im
            ),
            Error::Design(msg) => write!(f, "design failure: {msg}"),
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
