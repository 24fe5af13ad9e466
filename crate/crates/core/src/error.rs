use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::eigensolve::EigenError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("F stayed above -1 up to coupling {last:e}")]
    BracketFailure { last: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the iterative eigensolver to meet its tolerance.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Error::Eigen(EigenError::NonConvergence { .. } | EigenError::ShiftFailure)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
