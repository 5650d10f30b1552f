use lasserre_sdp::{solve, LmiBlock, SdpProblem, SolveOptions};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::polyring::{Exponent, RatPoly, Rational};

use super::sos::SosExpression;
use super::CertifyError;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn rat_pow(r: &Rational, e: i32) -> Rational {
    if e >= 0 {
        num_traits::pow(r.clone(), e as usize)
    } else {
        num_traits::pow(r.recip(), (-e) as usize)
    }
}

/// `c₀ = (1/(2ℓ))·(1 − 1/(2ℓ))^{2ℓ−1}`, the least `c` with `s_c ≥ 0` on ℝ.
pub fn c_threshold(ell: u32) -> Result<Rational, CertifyError> {
    if ell < 1 {
        return Err(CertifyError::ZeroExponent);
    }
    let two_l = 2 * ell as i64;
    Ok(rat(1, two_l) * rat_pow(&rat(two_l - 1, two_l), (two_l - 1) as i32))
}

/// Univariate `s_c(t) = 1 + t + c·t^{2ℓ}` (one variable).
pub fn sc_polynomial(ell: u32, c: &Rational) -> RatPoly {
    RatPoly::from_terms(
        1,
        [
            (Exponent::new(vec![0]), Rational::one()),
            (Exponent::new(vec![1]), Rational::one()),
            (Exponent::new(vec![2 * ell]), c.clone()),
        ],
    )
}

fn univariate(coeffs: &[Rational]) -> RatPoly {
    RatPoly::from_terms(
        1,
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (Exponent::new(vec![i as u32]), c.clone())),
    )
}

/// Divides by `(t − root)` and returns the quotient, leaving the remainder out.
fn deflate(coeffs: &[Rational], root: &Rational) -> (Vec<Rational>, Rational) {
    let d = coeffs.len() - 1;
    let mut q = vec![Rational::zero(); d];
    let mut carry = Rational::zero();
    for i in (0..=d).rev() {
        let v = &coeffs[i] + &carry * root;
        if i == 0 {
            return (q, v);
        }
        q[i - 1] = v.clone();
        carry = v;
    }
    unreachable!()
}

/// Exact `LDLᵀ` of a symmetric rational matrix; `None` unless it is
/// positive semidefinite with consistent zero pivots.
fn ldl(g: &[Vec<Rational>]) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
    let m = g.len();
    let mut a: Vec<Vec<Rational>> = g.to_vec();
    let mut l = vec![vec![Rational::zero(); m]; m];
    let mut d = vec![Rational::zero(); m];
    for k in 0..m {
        d[k] = a[k][k].clone();
        l[k][k] = Rational::one();
        if d[k].is_negative() {
            return None;
        }
        if d[k].is_zero() {
            if (k + 1..m).any(|i| !a[i][k].is_zero()) {
                return None;
            }
            continue;
        }
        for i in k + 1..m {
            l[i][k] = &a[i][k] / &d[k];
        }
        for i in k + 1..m {
            for j in k + 1..m {
                let t = &l[i][k] * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    Some((l, d))
}

/// A rational Gram matrix of `coeffs` near the analytic centre, found by
/// maximizing the least eigenvalue numerically, rounding, and restoring
/// the anti-diagonal sums exactly on the central cells.
fn interior_gram(coeffs: &[Rational]) -> Option<Vec<Vec<Rational>>> {
    let deg = coeffs.len() - 1;
    let m = deg / 2 + 1;
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let scale = coeffs.iter().map(|c| c.abs()).max()?;
    if scale.is_zero() {
        return None;
    }
    let target: Vec<f64> = coeffs.iter().map(|c| (c / &scale).to_f64().unwrap_or(0.0)).collect();
    let lambda = cells.len();
    let mut p = SdpProblem::new(cells.len() + 1);
    p.set_objective_coeff(lambda, -1.0);
    for (s, &t) in target.iter().enumerate() {
        let row: Vec<(usize, f64)> = cells
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| i + j == s)
            .map(|(v, &(i, j))| (v, if i == j { 1.0 } else { 2.0 }))
            .collect();
        p.add_equality(row, t).ok()?;
    }
    let mut block = LmiBlock::new(m);
    for (v, &(i, j)) in cells.iter().enumerate() {
        block.push_entry(v, i, j, 1.0);
    }
    for i in 0..m {
        block.push_entry(lambda, i, i, -1.0);
    }
    p.add_block(block).ok()?;
    let mut cap = LmiBlock::new(1);
    cap.constant_mut().push(0, 0, 1.0);
    cap.push_entry(lambda, 0, 0, -1.0);
    p.add_block(cap).ok()?;
    let sol = solve(&p, &SolveOptions::default());
    if sol.y.get(lambda).is_none_or(|&l| l <= 0.0) {
        return None;
    }
    let grid = BigInt::from(1u64 << 40);
    let mut g = vec![vec![Rational::zero(); m]; m];
    for (v, &(i, j)) in cells.iter().enumerate() {
        let r = Rational::new(BigInt::from((sol.y[v] * (1u64 << 40) as f64).round() as i64), grid.clone());
        g[i][j] = r.clone();
        g[j][i] = r;
    }
    for s in 0..=deg {
        let mut sum = Rational::zero();
        for i in 0..m {
            if let Some(j) = s.checked_sub(i).filter(|&j| j < m) {
                sum += &g[i][j];
            }
        }
        let deficit = &coeffs[s] / &scale - sum;
        if s % 2 == 0 {
            g[s / 2][s / 2] += deficit;
        } else {
            let half = deficit / Rational::from_integer(2.into());
            g[s / 2][s / 2 + 1] += &half;
            g[s / 2 + 1][s / 2] += half;
        }
    }
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v *= &scale;
        }
    }
    Some(g)
}

/// Weighted squares of a univariate polynomial of even degree, from the
/// Gram matrix that spreads each coefficient evenly over its anti-diagonal.
fn univariate_sos(coeffs: &[Rational]) -> Option<Vec<(Rational, Vec<Rational>)>> {
    let deg = coeffs.len() - 1;
    if deg % 2 == 1 {
        return None;
    }
    let m = deg / 2 + 1;
    let mut g = vec![vec![Rational::zero(); m]; m];
    for s in 0..=deg {
        let cells: Vec<(usize, usize)> = (0..m)
            .filter_map(|i| s.checked_sub(i).filter(|&j| j < m).map(|j| (i, j)))
            .collect();
        let share = &coeffs[s] / Rational::from_integer((cells.len() as i64).into());
        for (i, j) in cells {
            g[i][j] = share.clone();
        }
    }
    let (l, d) = ldl(&g).or_else(|| ldl(&interior_gram(coeffs)?))?;
    Some(
        (0..m)
            .filter(|&k| !d[k].is_zero())
            .map(|k| (d[k].clone(), (0..m).map(|i| l[i][k].clone()).collect()))
            .collect(),
    )
}

/// Exact weighted-square decomposition of `s_c` for `c ≥ c₀`.
///
/// `s_{c₀}` has the double root `ξ = −2ℓ/(2ℓ−1)`, so
/// `s_c = (t−ξ)²·r(t) + (c − c₀)·(t^ℓ)²` with `r` positive.
pub fn sc_sum_of_squares(ell: u32, c: &Rational) -> Result<SosExpression<Rational>, CertifyError> {
    let c0 = c_threshold(ell)?;
    if c < &c0 {
        return Err(CertifyError::BelowThreshold {
            c: c.to_string(),
            threshold: c0.to_string(),
        });
    }
    let two_l = 2 * ell as usize;
    let mut coeffs = vec![Rational::zero(); two_l + 1];
    coeffs[0] = Rational::one();
    coeffs[1] = Rational::one();
    coeffs[two_l] = c0.clone();
    let xi = rat(-(two_l as i64), two_l as i64 - 1);
    let (q1, r1) = deflate(&coeffs, &xi);
    let (r, r2) = deflate(&q1, &xi);
    debug_assert!(r1.is_zero() && r2.is_zero());
    let parts = univariate_sos(&r).ok_or(CertifyError::NoExactDecomposition { ell })?;
    let linear = univariate(&[-xi.clone(), Rational::one()]);
    let mut out = SosExpression::new(1);
    for (w, b) in parts {
        out.push(w, &univariate(&b) * &linear);
    }
    if c > &c0 {
        out.push(c - &c0, RatPoly::monomial(Exponent::new(vec![ell]), Rational::one()));
    }
    Ok(out)
}

/// The two halves `φ_ε` and `θ_ε` of `p + ε = φ_ε + θ_ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSplit {
    pub epsilon: Rational,
    /// `−c·ε^{1−2ℓ}·(p^{2ℓ} + q)`.
    pub phi: RatPoly,
    /// `ε·s_c(p/ε)`.
    pub sc_part: RatPoly,
    /// `c·ε^{1−2ℓ}`.
    pub q_coefficient: Rational,
    pub q: RatPoly,
    /// `ε·s_c(p/ε)` written as weighted squares, when `c ≥ c₀` and an exact
    /// decomposition of `s_c` was found.
    pub sc_squares: Option<SosExpression<Rational>>,
}

impl EpsilonSplit {
    pub fn theta(&self) -> RatPoly {
        &self.sc_part + &self.q.scale(&self.q_coefficient)
    }
}

/// `φ_ε, θ_ε` with `p + ε = φ_ε + θ_ε` for the given `ε > 0`.
pub fn epsilon_certificate(
    p: &RatPoly,
    q: &RatPoly,
    ell: u32,
    c: &Rational,
    epsilon: &Rational,
) -> Result<EpsilonSplit, CertifyError> {
    if ell < 1 {
        return Err(CertifyError::ZeroExponent);
    }
    if !epsilon.is_positive() {
        return Err(CertifyError::NonPositiveEpsilon(epsilon.to_string()));
    }
    if p.n() != q.n() {
        return Err(CertifyError::VariableCount {
            expected: p.n(),
            got: q.n(),
        });
    }
    let n = p.n();
    let coeff = c * rat_pow(epsilon, 1 - 2 * ell as i32);
    let phi = (&p.pow(2 * ell) + q).scale(&(-coeff.clone()));
    let arg = p.scale(&epsilon.recip());
    let sc_part = sc_polynomial(ell, c).compose(std::slice::from_ref(&arg))?.scale(epsilon);
    let sc_squares = if c >= &c_threshold(ell)? {
        sc_sum_of_squares(ell, c).ok().map(|s| {
            let mut out = SosExpression::new(n);
            for (w, b) in s.squares() {
                let base = b.compose(std::slice::from_ref(&arg)).expect("univariate base");
                out.push(w * epsilon, base);
            }
            out
        })
    } else {
        None
    };
    Ok(EpsilonSplit {
        epsilon: epsilon.clone(),
        phi,
        sc_part,
        q_coefficient: coeff,
        q: q.clone(),
        sc_squares,
    })
}

/// The family `ε ↦ (φ_ε, θ_ε)` for fixed `p, q, ℓ, c`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonCertificateFamily {
    pub p: RatPoly,
    pub q: RatPoly,
    pub ell: u32,
    pub c: Rational,
}

impl EpsilonCertificateFamily {
    pub fn new(p: RatPoly, q: RatPoly, ell: u32, c: Rational) -> Self {
        EpsilonCertificateFamily { p, q, ell, c }
    }

    pub fn at(&self, epsilon: &Rational) -> Result<EpsilonSplit, CertifyError> {
        epsilon_certificate(&self.p, &self.q, self.ell, &self.c, epsilon)
    }

    /// Whether `p + ε = φ_ε + θ_ε` holds exactly.
    pub fn holds_at(&self, epsilon: &Rational) -> Result<bool, CertifyError> {
        let s = self.at(epsilon)?;
        let lhs = &self.p + &RatPoly::constant(self.p.n(), epsilon.clone());
        Ok(lhs == &s.phi + &s.theta())
    }
}

/// `N = max(ℓ·⌈deg p / 2⌉, N₁, N₂)`, an order at which the ε-certificate
/// lives once `p^{2ℓ} + q ∈ ⟨h⟩_{2N₁}` and `q ∈ Q_{N₂}(g)`.
pub fn lemma_order_bound(p: &RatPoly, ell: u32, n1: u32, n2: u32) -> u32 {
    let d = p.total_degree().unwrap_or(0);
    (ell * d.div_ceil(2)).max(n1).max(n2)
}

/// Value of `s_c` at a rational point, for quick checks.
pub fn sc_value(ell: u32, c: &Rational, t: &Rational) -> Rational {
    Rational::one() + t + c * num_traits::pow(t.clone(), 2 * ell as usize)
}
