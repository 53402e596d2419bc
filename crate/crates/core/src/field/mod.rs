//! Exact towers of fields over `ℚ` or `𝔽_p`.

mod element;
mod expr;
mod random;
pub(crate) mod repr;
mod series;
mod square;
mod tower;

pub use element::FieldElement;
pub use expr::Expr;
pub use random::{random_base, random_element, random_nonzero};
pub use repr::{RatFn, Repr};
pub use series::{hensel_sqrt, LaurentSeries};
pub use square::{
    base_square_class, exact_sqrt, is_square, poly_monic_sqrt, quad_norm, square_class_decompose, squarefree_part,
    BaseClass, SquareClass, SquareClassDecomposition,
};
pub use tower::{BaseDescriptor, BaseField, FieldTower, LayerDescriptor, LayerKind, TowerDescriptor};

pub(crate) use element::series_coefficients;
pub(crate) use square::{completed_square_class, legendre_symbol};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero element where a nonzero one is required")]
    ZeroElement,
    #[error("characteristic {0} is not supported")]
    BadCharacteristic(u64),
    #[error("{0} is not an odd prime")]
    NotPrime(u64),
    #[error("invalid layer name {0:?}")]
    BadName(String),
    #[error("layer name {0:?} already used in this tower")]
    NameCollision(String),
    #[error("radicand {0} is a square")]
    SquareRadicand(String),
    #[error("elements of {left} and {right} cannot be combined")]
    TowerMismatch { left: String, right: String },
    #[error("{0} is not a Laurent or rational-function layer")]
    NotLaurentLayer(String),
    #[error("{0} is not a quadratic layer")]
    NotQuadraticLayer(String),
    #[error("unknown generator {0:?}")]
    UnknownName(String),
    #[error("unsupported layer: {0}")]
    UnsupportedLayer(String),
    #[error("specialization hits a pole in {0}")]
    SpecializationPole(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("residue is not a square")]
    ResidueNotSquare,
    #[error("odd valuation {0}")]
    OddValuation(i64),
    #[error("cannot be decided exactly: {0}")]
    NotDecidable(String),
}
