use std::cmp::Ordering;
use std::fmt;

/// Exponent vector `α` of the monomial `x^α = x1^α1 ⋯ xn^αn`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exponent {
    entries: Vec<u32>,
    total: u32,
}

impl Exponent {
    pub fn new(entries: Vec<u32>) -> Self {
        let total = entries.iter().sum();
        Self { entries, total }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            entries: vec![0; n],
            total: 0,
        }
    }

    /// The exponent of the variable `x_{i+1}` (zero-based `i`).
    pub fn unit(n: usize, i: usize) -> Self {
        let mut entries = vec![0; n];
        entries[i] = 1;
        Self { entries, total: 1 }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Total degree `|α|`.
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.total == 0
    }

    /// Exponent of the product `x^α · x^β`.
    pub fn add(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.n(), other.n());
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Exponent {
            entries,
            total: self.total + other.total,
        }
    }

    /// Exponent of `x^α / x^β`, if `x^β` divides `x^α`.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        debug_assert_eq!(self.n(), other.n());
        let mut entries = Vec::with_capacity(self.n());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            entries.push(a.checked_sub(*b)?);
        }
        Some(Exponent {
            entries,
            total: self.total - other.total,
        })
    }
}

impl Ord for Exponent {
    /// Graded lexicographic order with `x1 > x2 > ⋯`, listed increasingly:
    /// lower total degree first; within a degree, larger leading entries
    /// come first (`x1^2 < x1*x2 < x2^2`).
    fn cmp(&self, other: &Self) -> Ordering {
        self.total
            .cmp(&other.total)
            .then_with(|| other.entries.cmp(&self.entries))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries)
    }
}

impl fmt::Display for Exponent {
    /// Monomial text such as `x1^2*x3`; the zero exponent prints as `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.entries.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}
