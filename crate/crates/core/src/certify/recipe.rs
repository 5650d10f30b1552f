use num_traits::Zero;

use crate::polyring::{RatPoly, Rational};

use super::certificate::{Certificate, ConeKind};
use super::lemma::{c_threshold, epsilon_certificate};
use super::problem::Problem;
use super::sos::SosExpression;
use super::CertifyError;

/// Cone members keyed by subset, expanded as `Σ_J σ_J · Π_{j∈J} g_j`.
pub fn expand_cone_terms(g: &[RatPoly], n: usize, terms: &[(Vec<usize>, SosExpression<Rational>)]) -> RatPoly {
    let mut out = RatPoly::zero(n);
    for (subset, sos) in terms {
        let mut t = sos.expand();
        for &j in subset {
            t = &t * &g[j];
        }
        out = out + t;
    }
    out
}

fn merge_into(
    out: &mut Vec<(Vec<usize>, SosExpression<Rational>)>,
    subset: &[usize],
    sos: SosExpression<Rational>,
) {
    match out.iter_mut().find(|(k, _)| k.as_slice() == subset) {
        Some((_, s)) => s.extend(sos),
        None => out.push((subset.to_vec(), sos)),
    }
}

/// The data from which the ε-family of certificates for a problem is built.
///
/// With `p = f − f_min − a`, the witness states
/// `p^{2ℓ} + q = Σᵢ ψᵢ hᵢ`, where `q` and `a` are cone members.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRecipe {
    pub f_min: Rational,
    pub p: RatPoly,
    pub ell: u32,
    pub c: Rational,
    pub ideal_witness: Vec<(usize, RatPoly)>,
    pub q: Vec<(Vec<usize>, SosExpression<Rational>)>,
    pub offset: Vec<(Vec<usize>, SosExpression<Rational>)>,
    pub order: u32,
    pub kind: ConeKind,
}

impl CertificateRecipe {
    /// Checks the witness identity and `p = f − f_min − a` exactly.
    pub fn check(&self, prob: &Problem) -> Result<(), CertifyError> {
        let n = prob.n();
        let g = prob.inequalities();
        let h = prob.equalities();
        if self.c < c_threshold(self.ell)? {
            return Err(CertifyError::BelowThreshold {
                c: self.c.to_string(),
                threshold: c_threshold(self.ell)?.to_string(),
            });
        }
        let a = expand_cone_terms(g, n, &self.offset);
        let expected_p = prob.objective() - &RatPoly::constant(n, self.f_min.clone()) - &a;
        if expected_p != self.p {
            return Err(CertifyError::Recipe(format!(
                "p differs from f - f_min - a by {}",
                &expected_p - &self.p
            )));
        }
        let lhs = &self.p.pow(2 * self.ell) + &expand_cone_terms(g, n, &self.q);
        let mut rhs = RatPoly::zero(n);
        for (i, psi) in &self.ideal_witness {
            let hi = h.get(*i).ok_or_else(|| CertifyError::Recipe(format!("no equality {}", i + 1)))?;
            rhs = rhs + psi * hi;
        }
        if lhs != rhs {
            return Err(CertifyError::Recipe(format!(
                "p^(2l) + q differs from the ideal witness by {}",
                &lhs - &rhs
            )));
        }
        Ok(())
    }

    /// The certificate with `γ = f_min − ε`.
    pub fn certificate(&self, epsilon: &Rational) -> Result<Certificate<Rational>, CertifyError> {
        let n = self.p.n();
        let split = epsilon_certificate(&self.p, &RatPoly::zero(n), self.ell, &self.c, epsilon)?;
        let sc = split
            .sc_squares
            .ok_or(CertifyError::NoExactDecomposition { ell: self.ell })?;
        let coeff = split.q_coefficient;
        let ideal_part = self
            .ideal_witness
            .iter()
            .map(|(i, psi)| (*i, psi.scale(&-coeff.clone())))
            .filter(|(_, phi)| !phi.is_zero())
            .collect();
        let mut cone_part = Vec::new();
        merge_into(&mut cone_part, &[], sc);
        for (subset, sos) in &self.q {
            merge_into(&mut cone_part, subset, sos.scaled(&coeff));
        }
        for (subset, sos) in &self.offset {
            merge_into(&mut cone_part, subset, sos.clone());
        }
        for (_, sos) in cone_part.iter_mut() {
            sos.squares_mut().retain(|(w, b)| !w.is_zero() && !b.is_zero());
        }
        Ok(Certificate {
            gamma: &self.f_min - epsilon,
            ideal_part,
            cone_part,
            order: self.order,
            kind: self.kind,
        })
    }
}
