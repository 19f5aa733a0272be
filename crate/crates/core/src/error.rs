use crate::map::Side;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("matrix is singular (determinant is zero)")]
    SingularMatrix,
    #[error("{0:?} fixed point is degenerate: the matrix has eigenvalue 1")]
    DegenerateFixedPoint(Side),
    #[error("matrix has an eigenvalue equal to 1")]
    UnitEigenvalue,
    #[error("characteristic polynomial has a repeated root")]
    RepeatedEigenvalue,
    #[error("eigen-directions are parallel; plane is undefined")]
    DegeneratePlane,
    #[error("no two-dimensional {0} eigenspace available")]
    NoInvariantPlane(&'static str),
    #[error("side of the starting point cannot be resolved")]
    UnresolvableSide,
    #[error("spectral pattern does not match: {0}")]
    WrongSpectralType(String),
    #[error("starting point is not on the border x = 0 (x = {0})")]
    NotOnBorder(f64),
    #[error("eigen-direction is parallel to the border")]
    ParallelToBorder,
    #[error("{0:?} fixed point is virtual (outside its own region)")]
    InadmissibleFixedPoint(Side),
    #[error("iterate {index} lands on the {found:?} side, expected the {expected:?} side")]
    UnexpectedSide {
        index: usize,
        expected: Side,
        found: Side,
    },
    #[error("preimage is ambiguous or missing ({0} valid branches)")]
    AmbiguousPreimage(usize),
    #[error("non-finite value encountered")]
    OverflowDetected,
    #[error("orbit diverged at iteration {0}")]
    DivergentOrbit(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
