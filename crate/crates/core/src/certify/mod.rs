//! Cone certificates: construction from ε-splits, exact
//! verification, interpolation offsets and problem transforms.

mod certificate;
mod interp;
mod json;
mod lemma;
mod problem;
mod recipe;
mod sos;
mod transform;

use thiserror::Error;

use crate::polyring::PolyError;

pub use certificate::{verify_certificate, verify_numeric, Certificate, ConeKind, InvalidReason, Verdict, NUMERIC_TOLERANCE};
pub use interp::{interpolants, offset_polynomial, Offset, OffsetTerm};
pub use json::{certificate_from_json, certificate_to_json};
pub use lemma::{
    c_threshold, epsilon_certificate, lemma_order_bound, sc_polynomial, sc_sum_of_squares, sc_value,
    EpsilonCertificateFamily, EpsilonSplit,
};
pub use problem::Problem;
pub use recipe::{expand_cone_terms, CertificateRecipe};
pub use sos::SosExpression;
pub use transform::{gradient_problem, preordering_products, square_equalities, square_problem};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("polynomial in {got} variables where {expected} are expected")]
    VariableCount { expected: usize, got: usize },
    #[error("the exponent l must be at least 1")]
    ZeroExponent,
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(String),
    #[error("c = {c} is below the threshold {threshold}")]
    BelowThreshold { c: String, threshold: String },
    #[error("no exact square decomposition of s_c found for l = {ell}")]
    NoExactDecomposition { ell: u32 },
    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("point {point} is feasible but has objective below the given minimum")]
    FeasibleBelowMinimum { point: usize },
    #[error("empty tuple of polynomials")]
    EmptyTuple,
    #[error("inconsistent certificate data: {0}")]
    Recipe(String),
    #[error("certificate format: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Poly(#[from] PolyError),
}
