use crate::polyring::{Degree, Polynomial, Scalar};

/// Weighted sum of squares `Σ wⱼ · bⱼ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SosExpression<T: Scalar> {
    n: usize,
    squares: Vec<(T, Polynomial<T>)>,
}

impl<T: Scalar> SosExpression<T> {
    pub fn new(n: usize) -> Self {
        SosExpression {
            n,
            squares: Vec::new(),
        }
    }

    pub fn from_squares(n: usize, squares: Vec<(T, Polynomial<T>)>) -> Self {
        SosExpression { n, squares }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, weight: T, base: Polynomial<T>) {
        self.squares.push((weight, base));
    }

    pub fn extend(&mut self, other: SosExpression<T>) {
        self.squares.extend(other.squares);
    }

    pub fn squares(&self) -> &[(T, Polynomial<T>)] {
        &self.squares
    }

    pub fn squares_mut(&mut self) -> &mut Vec<(T, Polynomial<T>)> {
        &mut self.squares
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    /// Multiplies every weight by `s`.
    pub fn scaled(&self, s: &T) -> Self {
        SosExpression {
            n: self.n,
            squares: self
                .squares
                .iter()
                .map(|(w, b)| (w.clone() * s.clone(), b.clone()))
                .collect(),
        }
    }

    pub fn expand(&self) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.n);
        for (w, b) in &self.squares {
            if !w.is_zero() {
                out = out + b.square().scale(w);
            }
        }
        out
    }

    /// Largest `2·deg bⱼ` over squares with nonzero weight.
    pub fn degree(&self) -> Degree {
        self.squares
            .iter()
            .filter(|(w, _)| !w.is_zero())
            .map(|(_, b)| b.degree() + b.degree())
            .max()
            .unwrap_or(Degree::NegInfinity)
    }

    pub fn to_float(&self) -> SosExpression<f64> {
        SosExpression {
            n: self.n,
            squares: self
                .squares
                .iter()
                .map(|(w, b)| (w.to_f64(), b.to_float()))
                .collect(),
        }
    }
}
