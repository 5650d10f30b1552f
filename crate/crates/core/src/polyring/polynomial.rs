use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{Exponent, PolyError, Rational, Scalar};

/// Sparse multivariate polynomial in `n` variables.
///
/// Zero coefficients are never stored, so two polynomials are equal exactly
/// when their term maps are equal.
#[derive(Clone, PartialEq)]
pub struct Polynomial<T> {
    n: usize,
    terms: BTreeMap<Exponent, T>,
}

pub type RatPoly = Polynomial<Rational>;
pub type FloatPoly = Polynomial<f64>;

/// Total degree, with `NegInfinity` for the zero polynomial so that
/// `deg(pq) = deg p + deg q` holds without exceptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(u32),
}

impl Degree {
    pub fn finite(self) -> Option<u32> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl Add for Degree {
    type Output = Degree;

    fn add(self, rhs: Degree) -> Degree {
        match (self, rhs) {
            (Degree::Finite(a), Degree::Finite(b)) => Degree::Finite(a + b),
            _ => Degree::NegInfinity,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => write!(f, "-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, T::one())
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self::monomial(Exponent::zero(n), c)
    }

    /// The variable `x_{i+1}` (zero-based index `i`).
    pub fn var(n: usize, i: usize) -> Self {
        assert!(i < n, "variable index {i} out of range for {n} variables");
        Self::monomial(Exponent::unit(n, i), T::one())
    }

    pub fn monomial(exp: Exponent, c: T) -> Self {
        let n = exp.n();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { n, terms }
    }

    /// Builds a polynomial from possibly repeated terms, summing duplicates.
    ///
    /// Panics if an exponent does not have `n` entries.
    pub fn from_terms<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, T)>,
    {
        let mut p = Self::zero(n);
        for (exp, c) in terms {
            assert_eq!(exp.n(), n, "exponent length does not match variable count");
            p.add_term(exp, c);
        }
        p
    }

    fn add_term(&mut self, exp: Exponent, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(v) => {
                let sum = v.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &T)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &Exponent) -> T {
        self.terms.get(exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coeff(&Exponent::zero(self.n))
    }

    pub fn degree(&self) -> Degree {
        match self.terms.keys().next_back() {
            Some(e) => Degree::Finite(e.total()),
            None => Degree::NegInfinity,
        }
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.degree().finite()
    }

    fn check_n(&self, other: &Self) -> Result<(), PolyError> {
        if self.n != other.n {
            return Err(PolyError::VariableCountMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_n(other)?;
        let mut acc: BTreeMap<Exponent, T> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.add(eb);
                let prod = ca.clone() * cb.clone();
                match acc.get_mut(&e) {
                    Some(v) => *v = v.clone() + prod,
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(Self {
            n: self.n,
            terms: acc,
        })
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero(self.n);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), c.clone() * s.clone()))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Self { n: self.n, terms }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut out = Self::one(self.n);
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Value at the point `u`.
    pub fn eval(&self, u: &[T]) -> Result<T, PolyError> {
        if u.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let mut powers: Vec<Vec<T>> = u.iter().map(|x| vec![T::one(), x.clone()]).collect();
        let mut value = T::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (i, &k) in e.entries().iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap().clone() * u[i].clone();
                    powers[i].push(next);
                }
                if k > 0 {
                    m = m * powers[i][k].clone();
                }
            }
            value = value + m;
        }
        Ok(value)
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.n, "variable index {i} out of range for {} variables", self.n);
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            let k = e.entries()[i];
            if k == 0 {
                continue;
            }
            let mut entries = e.entries().to_vec();
            entries[i] -= 1;
            out.add_term(Exponent::new(entries), c.clone() * T::from_i64(k as i64));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.n).map(|i| self.partial(i)).collect()
    }

    /// Replaces `x_{i+1}` by `q` and expands.
    pub fn substitute(&self, i: usize, q: &Self) -> Result<Self, PolyError> {
        if i >= self.n {
            return Err(PolyError::IndexOutOfRange { index: i, n: self.n });
        }
        self.check_n(q)?;
        let args: Vec<Self> = (0..self.n)
            .map(|j| if j == i { q.clone() } else { Self::var(self.n, j) })
            .collect();
        self.compose(&args)
    }

    /// Composition `p(q_1, …, q_n)`; all `q_j` must share one variable count,
    /// which becomes the variable count of the result.
    pub fn compose(&self, args: &[Self]) -> Result<Self, PolyError> {
        if args.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: args.len(),
            });
        }
        let m = match args.first() {
            Some(a) => a.n,
            None => {
                return Ok(self.clone());
            }
        };
        for a in args {
            if a.n != m {
                return Err(PolyError::VariableCountMismatch { left: m, right: a.n });
            }
        }
        let mut powers: Vec<Vec<Self>> = args.iter().map(|a| vec![Self::one(m), a.clone()]).collect();
        let mut out = Self::zero(m);
        for (e, c) in &self.terms {
            let mut term = Self::constant(m, c.clone());
            for (j, &k) in e.entries().iter().enumerate() {
                let k = k as usize;
                while powers[j].len() <= k {
                    let next = powers[j].last().unwrap() * &args[j];
                    powers[j].push(next);
                }
                if k > 0 {
                    term = &term * &powers[j][k];
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Largest coefficient magnitude (zero for the zero polynomial).
    pub fn max_abs_coeff(&self) -> T {
        let mut best = T::zero();
        for c in self.terms.values() {
            let a = c.abs_value();
            if a > best {
                best = a;
            }
        }
        best
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::from_terms(self.n, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    /// One-way conversion to binary floating point.
    pub fn to_float(&self) -> FloatPoly {
        self.map_coeffs(|c| c.to_f64())
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        self.checked_add(rhs).expect("polynomial addition")
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        self.checked_sub(rhs).expect("polynomial subtraction")
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        self.checked_mul(rhs).expect("polynomial multiplication")
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect();
        Polynomial { n: self.n, terms }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Scalar> $tr for Polynomial<T> {
            type Output = Polynomial<T>;

            fn $m(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$m(&rhs)
            }
        }

        impl<T: Scalar> $tr<&Polynomial<T>> for Polynomial<T> {
            type Output = Polynomial<T>;

            fn $m(self, rhs: &Polynomial<T>) -> Polynomial<T> {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<T: Scalar> Neg for Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    /// Prints in the text grammar accepted by [`parse_polynomial`](super::parse_polynomial),
    /// highest-order terms first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().rev().enumerate() {
            let negative = *c < T::zero();
            let mag = c.abs_value();
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if e.is_zero() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{e}")?;
            } else {
                write!(f, "{mag}*{e}")?;
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial(n={}, {})", self.n, self)
    }
}
