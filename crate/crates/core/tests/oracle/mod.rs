//! Independent univariate checks over the rationals: squarefree
//! decomposition, Sturm counts and root isolation.

#![allow(dead_code)]

use lasserre::polyring::{RatPoly, Rational};
use num_traits::{One, Signed, Zero};

/// Dense coefficients, lowest degree first, without trailing zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Uni(pub Vec<Rational>);

impl Uni {
    pub fn from_poly(p: &RatPoly) -> Uni {
        assert_eq!(p.n(), 1);
        let deg = p.total_degree().unwrap_or(0) as usize;
        let mut c = vec![Rational::zero(); deg + 1];
        for (e, v) in p.terms() {
            c[e.entries()[0] as usize] = v.clone();
        }
        Uni(c).trim()
    }

    fn trim(mut self) -> Uni {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lead(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Uni {
        Uni(self
            .0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rational::from_integer((i as i64).into()))
            .collect())
        .trim()
    }

    fn monic(&self) -> Uni {
        let l = self.lead();
        Uni(self.0.iter().map(|c| c / &l).collect())
    }

    /// Quotient and remainder.
    fn div_rem(&self, d: &Uni) -> (Uni, Uni) {
        let mut r = self.0.clone();
        let dd = d.degree();
        if self.degree() < dd || self.is_zero() {
            return (Uni(Vec::new()), self.clone());
        }
        let mut q = vec![Rational::zero(); self.degree() - dd + 1];
        let l = d.lead();
        for i in (0..q.len()).rev() {
            let c = &r[i + dd] / &l;
            for (j, dj) in d.0.iter().enumerate() {
                r[i + j] = &r[i + j] - &c * dj;
            }
            q[i] = c;
        }
        r.truncate(dd);
        (Uni(q).trim(), Uni(r).trim())
    }

    fn gcd(&self, other: &Uni) -> Uni {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Yun's algorithm: factors `a_i` with `self = lead · Π a_i^i`.
    pub fn squarefree(&self) -> Vec<(usize, Uni)> {
        let mut out = Vec::new();
        let d = self.derivative();
        let g = self.gcd(&d);
        if g.is_zero() {
            return out;
        }
        let (mut b, _) = self.div_rem(&g);
        let (mut c, _) = d.div_rem(&g);
        let mut i = 1;
        loop {
            let dd = &c.sub(&b.derivative());
            if b.degree() == 0 {
                break;
            }
            let a = b.gcd(dd);
            b = b.div_rem(&a).0;
            c = dd.div_rem(&a).0;
            if a.degree() > 0 {
                out.push((i, a));
            }
            i += 1;
        }
        out
    }

    fn sub(&self, o: &Uni) -> Uni {
        let len = self.0.len().max(o.0.len());
        let z = Rational::zero();
        Uni((0..len)
            .map(|i| self.0.get(i).unwrap_or(&z) - o.0.get(i).unwrap_or(&z))
            .collect())
        .trim()
    }

    fn neg(&self) -> Uni {
        Uni(self.0.iter().map(|c| -c).collect())
    }

    fn sturm(&self) -> Vec<Uni> {
        let mut seq = vec![self.clone(), self.derivative()];
        while !seq.last().unwrap().is_zero() {
            let n = seq.len();
            let r = seq[n - 2].div_rem(&seq[n - 1]).1.neg();
            seq.push(r);
        }
        seq.pop();
        seq
    }

    fn sign_changes_at(seq: &[Uni], t: &Rational) -> usize {
        let signs: Vec<bool> = seq
            .iter()
            .map(|p| p.eval(t))
            .filter(|v| !v.is_zero())
            .map(|v| v.is_positive())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// `1 + Σ|c_i/lead|`, beyond which no root lies.
    fn cauchy_bound(&self) -> Rational {
        let l = self.lead().abs();
        Rational::one() + self.0.iter().map(|c| c.abs() / &l).fold(Rational::zero(), |a, b| a + b)
    }

    /// Distinct real roots of a squarefree polynomial.
    pub fn real_root_count(&self) -> usize {
        if self.degree() == 0 {
            return 0;
        }
        let seq = self.sturm();
        let b = self.cauchy_bound();
        Self::sign_changes_at(&seq, &(-b.clone())) - Self::sign_changes_at(&seq, &b)
    }

    /// Isolating intervals of width below `width` for the real roots of a
    /// squarefree polynomial.
    pub fn isolate(&self, width: &Rational) -> Vec<(Rational, Rational)> {
        let seq = self.sturm();
        let b = self.cauchy_bound();
        let count = |lo: &Rational, hi: &Rational| Self::sign_changes_at(&seq, lo) - Self::sign_changes_at(&seq, hi);
        let mut stack = vec![(-b.clone(), b)];
        let mut out = Vec::new();
        let two = Rational::from_integer(2.into());
        while let Some((lo, hi)) = stack.pop() {
            let c = count(&lo, &hi);
            if c == 0 {
                continue;
            }
            if c == 1 && &(&hi - &lo) < width {
                out.push((lo, hi));
                continue;
            }
            let mid = (&lo + &hi) / &two;
            if self.eval(&mid).is_zero() {
                let eps = width / Rational::from_integer(4.into());
                out.push((&mid - &eps, &mid + &eps));
                stack.push((lo, &mid - &eps));
                stack.push((&mid + &eps, hi));
            } else {
                stack.push((lo, mid.clone()));
                stack.push((mid, hi));
            }
        }
        out
    }
}

/// Whether `p ≥ 0` on all of ℝ, decided exactly: the leading coefficient is
/// positive and no real root has odd multiplicity.
pub fn nonnegative_on_reals(p: &Uni) -> bool {
    if p.is_zero() {
        return true;
    }
    if p.degree() == 0 {
        return p.lead().is_positive();
    }
    if p.degree() % 2 == 1 || !p.lead().is_positive() {
        return false;
    }
    p.squarefree()
        .iter()
        .filter(|(m, _)| m % 2 == 1)
        .all(|(_, a)| a.real_root_count() == 0)
}

/// A rational point where `p < 0`, found next to a real root of odd
/// multiplicity.
pub fn negative_witness(p: &Uni) -> Option<Rational> {
    let width = Rational::new(1.into(), 1_000_000.into());
    for (m, a) in p.squarefree() {
        if m % 2 == 0 {
            continue;
        }
        for (lo, hi) in a.isolate(&width) {
            for t in [lo, hi] {
                if p.eval(&t).is_negative() {
                    return Some(t);
                }
            }
        }
    }
    None
}
