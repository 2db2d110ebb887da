use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the range the model is defined on.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: &'static str },
    /// An argument lies outside the function's domain.
    #[error("argument {value} outside domain of {what}")]
    Domain { what: &'static str, value: f64 },
    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },
    #[error("fixed point did not converge (last iterates {last}, {previous})")]
    NoConvergence { last: f64, previous: f64 },
    /// The success probability vanishes on a set of positive measure.
    #[error("mean peak age is infinite")]
    InfiniteMean,
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { field, reason }
    }

    /// True for errors raised by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::NoConvergence { .. })
    }
}
