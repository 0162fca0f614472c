use thiserror::Error;

use crate::integrator::IntegrateError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter lies outside the domain where the object is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite amplitude at mode {index}")]
    NonFinite { index: usize },

    #[error("truncation overflow: need at least {required} modes, have {available}")]
    TruncationOverflow { required: usize, available: usize },

    #[error("charges (Q={q}, E={e}, S={s}) are not realizable: discriminant {discriminant:e}")]
    NotRealizable {
        q: f64,
        e: f64,
        s: f64,
        discriminant: f64,
    },

    #[error("contour sampling too coarse: {samples} samples, need a power of two >= {required}")]
    InsufficientSampling { samples: usize, required: usize },

    #[error("energy reached the truncation boundary: tail fraction {fraction:e} at t = {t}")]
    TailOverflow { fraction: f64, t: f64 },

    #[error(transparent)]
    Integration(#[from] IntegrateError),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration(_) | Error::TailOverflow { .. } | Error::NonFinite { .. }
        )
    }
}
