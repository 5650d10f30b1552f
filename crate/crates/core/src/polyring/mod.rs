//! Multivariate polynomial arithmetic over exact rationals and `f64`.
//!
//! Polynomials are stored sparsely as a map from [`Exponent`] to a nonzero
//! coefficient. Exponents are ordered graded-lexicographically (total degree
//! first, then `x1 > x2 > ... > xn`), and [`MonomialBasis`] lists them in
//! increasing order, so the degree-`t` basis reads
//! `1, x1, ..., xn, x1^2, x1*x2, ..., xn^t`.

mod basis;
mod exponent;
mod polynomial;
mod scalar;
mod text;

pub use basis::{basis, binomial, MonomialBasis};
pub use exponent::Exponent;
pub use polynomial::{Degree, FloatPoly, Polynomial, RatPoly};
pub use scalar::{rational_from_f64, Rational, Scalar};
pub use text::{parse_polynomial, parse_rational};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}
