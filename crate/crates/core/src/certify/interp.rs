use num_traits::{One, Signed, Zero};

use crate::polyring::{basis, binomial, RatPoly, Rational};

use super::sos::SosExpression;
use super::CertifyError;

fn monomial_value(exp: &[u32], u: &[Rational]) -> Rational {
    let mut v = Rational::one();
    for (x, &e) in u.iter().zip(exp) {
        if e > 0 {
            v *= num_traits::pow(x.clone(), e as usize);
        }
    }
    v
}

/// Exact polynomials `φᵢ` with `φᵢ(u_j) = δᵢⱼ`.
///
/// The monomials are taken from the basis of the least degree `t` with
/// `binomial(n+t, n) ≥ D`, raising `t` while the evaluation matrix is rank
/// deficient; pivot columns are chosen left to right in basis order.
pub fn interpolants(points: &[Vec<Rational>]) -> Result<Vec<RatPoly>, CertifyError> {
    let d = points.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let n = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(CertifyError::VariableCount {
            expected: n,
            got: p.len(),
        });
    }
    for i in 0..d {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(CertifyError::DuplicatePoint { first: j, second: i });
            }
        }
    }
    let mut t = 0u32;
    while binomial(n + t as usize, n) < d {
        t += 1;
    }
    loop {
        let b = basis(n, t);
        let v: Vec<Vec<Rational>> = points
            .iter()
            .map(|u| b.iter().map(|e| monomial_value(e.entries(), u)).collect())
            .collect();
        if let Some(pivots) = pivot_columns(&v) {
            let square: Vec<Vec<Rational>> = v
                .iter()
                .map(|row| pivots.iter().map(|&c| row[c].clone()).collect())
                .collect();
            let inv = invert(&square).expect("pivot columns are independent");
            return Ok((0..d)
                .map(|i| {
                    RatPoly::from_terms(
                        n,
                        pivots
                            .iter()
                            .enumerate()
                            .map(|(k, &c)| (b.get(c).clone(), inv[k][i].clone())),
                    )
                })
                .collect());
        }
        t += 1;
    }
}

/// Indices of `rows.len()` independent columns, or `None` if the rank is lower.
fn pivot_columns(rows: &[Vec<Rational>]) -> Option<Vec<usize>> {
    let m = rows.len();
    let cols = rows[0].len();
    let mut a = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let pivot = a[r][c].clone();
        for i in r + 1..m {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &pivot;
                for k in c..cols {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (pivots.len() == m).then_some(pivots)
}

/// Gauss-Jordan inverse over the rationals.
fn invert(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        let inv = m[c][c].recip();
        for v in m[c].iter_mut() {
            *v *= &inv;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in 0..2 * n {
                    let t = &f * &m[c][k];
                    m[i][k] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// One summand `aᵢ = wᵢ · g_{jᵢ} · φᵢ²` of the offset polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetTerm {
    /// Zero-based index of the multiplying `g_j`, or `None` for `aᵢ = wᵢφᵢ²`.
    pub multiplier: Option<usize>,
    pub weight: Rational,
    pub base: RatPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Offset {
    pub terms: Vec<OffsetTerm>,
    /// `a = Σ aᵢ`.
    pub a: RatPoly,
    /// `f − f_min − a`, which vanishes on every input point.
    pub hat_f: RatPoly,
}

impl Offset {
    /// The terms grouped as cone members, keyed by subset.
    pub fn cone_terms(&self) -> Vec<(Vec<usize>, SosExpression<Rational>)> {
        let n = self.a.n();
        let mut out: Vec<(Vec<usize>, SosExpression<Rational>)> = Vec::new();
        for t in &self.terms {
            if t.weight.is_zero() {
                continue;
            }
            let key: Vec<usize> = t.multiplier.into_iter().collect();
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, s)) => s.push(t.weight.clone(), t.base.clone()),
                None => out.push((key, SosExpression::from_squares(n, vec![(t.weight.clone(), t.base.clone())]))),
            }
        }
        out
    }
}

/// Builds `a` and `ĥf = f − f_min − a` on a finite point set.
///
/// Points below the minimum must violate some `g_j`; the first violated
/// index is used.
pub fn offset_polynomial(
    points: &[Vec<Rational>],
    f: &RatPoly,
    f_min: &Rational,
    g: &[RatPoly],
) -> Result<Offset, CertifyError> {
    let n = f.n();
    let phis = interpolants(points)?;
    let mut terms = Vec::with_capacity(points.len());
    let mut a = RatPoly::zero(n);
    for (i, (u, phi)) in points.iter().zip(phis).enumerate() {
        let v = f.eval(u)? - f_min;
        let term = if !v.is_negative() {
            OffsetTerm {
                multiplier: None,
                weight: v,
                base: phi,
            }
        } else {
            let mut found = None;
            for (j, gj) in g.iter().enumerate() {
                let gv = gj.eval(u)?;
                if gv.is_negative() {
                    found = Some((j, gv));
                    break;
                }
            }
            let (j, gv) = found.ok_or(CertifyError::FeasibleBelowMinimum { point: i })?;
            OffsetTerm {
                multiplier: Some(j),
                weight: v / gv,
                base: phi,
            }
        };
        let mut ai = term.base.square().scale(&term.weight);
        if let Some(j) = term.multiplier {
            ai = &ai * &g[j];
        }
        a = a + ai;
        terms.push(term);
    }
    let hat_f = f - &RatPoly::constant(n, f_min.clone()) - &a;
    Ok(Offset { terms, a, hat_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::parse_polynomial;

    fn r(v: i64) -> Rational {
        Rational::from_integer(v.into())
    }

    #[test]
    fn single_point_gives_one() {
        let phi = interpolants(&[vec![r(1), r(1)]]).unwrap();
        assert_eq!(phi, vec![RatPoly::one(2)]);
    }

    #[test]
    fn lagrange_on_three_points() {
        let pts = vec![vec![r(0)], vec![r(1)], vec![r(2)]];
        let phi = interpolants(&pts).unwrap();
        assert_eq!(phi[0], parse_polynomial("1/2*x1^2 - 3/2*x1 + 1", 1).unwrap());
        assert_eq!(phi[1], parse_polynomial("-x1^2 + 2*x1", 1).unwrap());
        assert_eq!(phi[2], parse_polynomial("1/2*x1^2 - 1/2*x1", 1).unwrap());
    }

    #[test]
    fn corners_of_square() {
        let pts: Vec<Vec<Rational>> = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            .iter()
            .map(|&(a, b)| vec![r(a), r(b)])
            .collect();
        let phi = interpolants(&pts).unwrap();
        assert_eq!(phi[0], parse_polynomial("1/4*x1*x2 + 1/4*x1 + 1/4*x2 + 1/4", 2).unwrap());
        for (i, p) in phi.iter().enumerate() {
            for (j, u) in pts.iter().enumerate() {
                assert_eq!(p.eval(u).unwrap(), r((i == j) as i64));
            }
        }
    }

    #[test]
    fn duplicates_are_rejected() {
        assert!(matches!(
            interpolants(&[vec![r(1)], vec![r(1)]]),
            Err(CertifyError::DuplicatePoint { .. })
        ));
    }

    #[test]
    fn feasible_point_below_minimum_is_an_error() {
        let f = parse_polynomial("x1", 1).unwrap();
        let g = vec![parse_polynomial("x1 + 5", 1).unwrap()];
        let err = offset_polynomial(&[vec![r(0)]], &f, &r(1), &g);
        assert!(matches!(err, Err(CertifyError::FeasibleBelowMinimum { point: 0 })));
    }

    #[test]
    fn single_feasible_point_at_minimum() {
        let f = parse_polynomial("x1^2 + x2", 2).unwrap();
        let off = offset_polynomial(&[vec![r(0), r(1)]], &f, &r(1), &[]).unwrap();
        assert!(off.a.is_zero());
        assert_eq!(off.hat_f, &f - &RatPoly::one(2));
    }
}
