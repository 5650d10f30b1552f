use crate::polyring::{RatPoly, Rational};

use super::CertifyError;

/// `min f(x)` subject to `h_i(x) = 0` and `g_j(x) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n: usize,
    f: RatPoly,
    h: Vec<RatPoly>,
    g: Vec<RatPoly>,
    /// Known polynomials whose squares sum to the matching equality.
    roots: Vec<Option<Vec<RatPoly>>>,
}

impl Problem {
    pub fn new(f: RatPoly, h: Vec<RatPoly>, g: Vec<RatPoly>) -> Result<Self, CertifyError> {
        let n = f.n();
        for p in h.iter().chain(&g) {
            if p.n() != n {
                return Err(CertifyError::VariableCount {
                    expected: n,
                    got: p.n(),
                });
            }
        }
        let roots = vec![None; h.len()];
        Ok(Problem { n, f, h, g, roots })
    }

    pub fn unconstrained(f: RatPoly) -> Self {
        Problem {
            n: f.n(),
            f,
            h: Vec::new(),
            g: Vec::new(),
            roots: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &RatPoly {
        &self.f
    }

    pub fn equalities(&self) -> &[RatPoly] {
        &self.h
    }

    pub fn inequalities(&self) -> &[RatPoly] {
        &self.g
    }

    pub fn with_equalities(&self, h: Vec<RatPoly>) -> Result<Self, CertifyError> {
        Problem::new(self.f.clone(), h, self.g.clone())
    }

    /// Records that `h_index = Σ r²` over `roots`, checked exactly.
    ///
    /// The moment relaxation uses this to drop directions that every
    /// feasible moment matrix annihilates; the relaxation itself is unchanged.
    pub fn with_square_roots(mut self, index: usize, roots: Vec<RatPoly>) -> Result<Self, CertifyError> {
        let Some(h) = self.h.get(index) else {
            return Err(CertifyError::Format(format!("no equality with index {index}")));
        };
        let mut sum = RatPoly::zero(self.n);
        for r in &roots {
            sum = sum.checked_add(&r.square())?;
        }
        if &sum != h {
            return Err(CertifyError::Format(format!(
                "squares of the given roots do not sum to equality {index}"
            )));
        }
        self.roots[index] = Some(roots);
        Ok(self)
    }

    /// The roots recorded by [`Problem::with_square_roots`], if any.
    pub fn square_roots(&self, index: usize) -> Option<&[RatPoly]> {
        self.roots.get(index)?.as_deref()
    }

    /// Whether `u` satisfies every constraint exactly.
    pub fn is_feasible(&self, u: &[Rational]) -> Result<bool, CertifyError> {
        for h in &self.h {
            if !num_traits::Zero::is_zero(&h.eval(u)?) {
                return Ok(false);
            }
        }
        for g in &self.g {
            if g.eval(u)? < num_traits::Zero::zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest total degree among the objective and all constraints.
    pub fn max_degree(&self) -> u32 {
        std::iter::once(&self.f)
            .chain(&self.h)
            .chain(&self.g)
            .filter_map(|p| p.total_degree())
            .max()
            .unwrap_or(0)
    }
}
