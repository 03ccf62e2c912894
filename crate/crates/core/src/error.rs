use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two sequences that must have equal length do not.
    LengthMismatch { expected: usize, found: usize },
    /// A cost matrix has the wrong shape for the measures it is paired with.
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    NegativeWeight { index: usize },
    NonFinite(&'static str),
    EmptyMeasure,
    ZeroMass,
    Unsorted,
    InvalidParameter(&'static str),
    /// Argument outside the domain of a conjugate entropy.
    Domain(&'static str),
    NoConvergence(&'static str),
    /// `f ⊕ g ≤ C` violated at ε = 0.
    InfeasibleDual { violation: f64 },
    UnbalancedMasses { left: f64, right: f64 },
    NonSubmodularCost,
    /// The optimal translation is not unique (both sides balanced).
    TranslationUndefined,
    Unsupported(&'static str),
    Singular,
    NotBracketed,
    NotEnoughData,
    EmptyStore,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "cost matrix is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Error::NegativeWeight { index } => write!(f, "negative weight at index {index}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::EmptyMeasure => f.write_str("measure has no atoms"),
            Error::ZeroMass => f.write_str("measure has zero total mass"),
            Error::Unsorted => f.write_str("support is not sorted"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::Domain(what) => write!(f, "argument outside domain: {what}"),
            Error::NoConvergence(what) => write!(f, "{what} did not converge"),
            Error::InfeasibleDual { violation } => {
                write!(f, "dual pair violates f+g <= C by {violation:e}")
            }
            Error::UnbalancedMasses { left, right } => {
                write!(f, "masses differ: {left} vs {right}")
            }
            Error::NonSubmodularCost => f.write_str("cost matrix is not submodular"),
            Error::TranslationUndefined => {
                f.write_str("optimal translation is not unique for balanced/balanced entropies")
            }
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::Singular => f.write_str("singular linear system"),
            Error::NotBracketed => f.write_str("maximizer is not bracketed by the interval"),
            Error::NotEnoughData => f.write_str("not enough data"),
            Error::EmptyStore => f.write_str("atom store is empty"),
        }
    }
}

impl core::error::Error for Error {}
