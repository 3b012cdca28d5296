use num_complex::Complex64;
use thiserror::Error;

use crate::taylor2d::MultiIndex;
use crate::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series expanded about different centres: {0:?} and {1:?}")]
    CenterMismatch(Point, Point),

    #[error("series order {available} is below the required order {required}")]
    InsufficientOrder { required: usize, available: usize },

    #[error("exponential needs a zero constant term, found {0}")]
    NonzeroConstant(Complex64),

    #[error("multiplicity {mu} is outside 1..={max} for target {target}")]
    MultiplicityOutOfRange {
        target: MultiIndex,
        mu: usize,
        max: usize,
    },

    #[error("operator order must be at least 2, got {0}")]
    OperatorOrder(usize),

    #[error("coefficient index ({k},{l}) exceeds operator order {order}")]
    CoefficientIndex { k: usize, l: usize, order: usize },

    #[error("leading coefficient alpha_(M,0) = {0} vanishes at the centre")]
    LeadingCoefficientVanishes(Complex64),

    #[error("principal symbol has no nondegenerate quadratic factorisation")]
    SymbolNotFactorable,

    #[error("the normalisation parameter kappa must be nonzero")]
    ZeroKappa,

    #[error("lambda_{0} is not a free value of the construction")]
    NotFree(MultiIndex),

    #[error("lambda_{0} of a lower level is unset")]
    LowerLevelUnset(MultiIndex),

    #[error("level {level} is out of range for q = {q}")]
    LevelOutOfRange { level: usize, q: usize },

    #[error("construction order q must be at least 1")]
    ZeroQ,

    #[error("basis size p must be at least 1")]
    EmptyBasis,

    #[error("angles must be pairwise distinct")]
    DuplicateAngles,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
