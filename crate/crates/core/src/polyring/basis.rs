use std::collections::HashMap;

use super::Exponent;

/// `binomial(n, k)`, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

/// All exponents with `|α| ≤ t`, in increasing graded-lex order; this is the
/// index set of the monomial vector `[x]_t`.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    t: u32,
    list: Vec<Exponent>,
    index: HashMap<Exponent, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, t: u32) -> Self {
        let mut list = Vec::with_capacity(binomial(n + t as usize, n));
        let mut scratch = vec![0u32; n];
        for d in 0..=t {
            push_degree(&mut list, &mut scratch, 0, d);
        }
        let index = list.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        Self { n, t, list, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.list
    }

    pub fn get(&self, i: usize) -> &Exponent {
        &self.list[i]
    }

    pub fn index_of(&self, e: &Exponent) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Exponent> + '_ {
        self.list.iter()
    }

    /// The vector `[u]_t` of all basis monomials evaluated at `u`.
    pub fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        self.list
            .iter()
            .map(|e| {
                e.entries()
                    .iter()
                    .zip(u)
                    .map(|(&k, x)| x.powi(k as i32))
                    .product()
            })
            .collect()
    }
}

/// `basis(n, t)`: the monomial basis of degree `t` in `n` variables.
pub fn basis(n: usize, t: u32) -> MonomialBasis {
    MonomialBasis::new(n, t)
}

// Exponents of total degree `d` in positions `pos..`, leading entries descending.
fn push_degree(out: &mut Vec<Exponent>, scratch: &mut [u32], pos: usize, d: u32) {
    let n = scratch.len();
    if pos + 1 == n {
        scratch[pos] = d;
        out.push(Exponent::new(scratch.to_vec()));
        scratch[pos] = 0;
        return;
    }
    if n == 0 {
        if d == 0 {
            out.push(Exponent::new(Vec::new()));
        }
        return;
    }
    for first in (0..=d).rev() {
        scratch[pos] = first;
        push_degree(out, scratch, pos + 1, d - first);
    }
    scratch[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bases() {
        let b = basis(2, 1);
        let got: Vec<Vec<u32>> = b.iter().map(|e| e.entries().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert_eq!(basis(2, 3).len(), 10);
        assert_eq!(basis(2, 8).len(), 45);
    }

    #[test]
    fn sizes_and_strict_order() {
        for n in 1..=4 {
            for t in 0..=6 {
                let b = basis(n, t);
                assert_eq!(b.len(), binomial(n + t as usize, n));
                assert!(b.exponents().windows(2).all(|w| w[0] < w[1]));
                for (i, e) in b.iter().enumerate() {
                    assert_eq!(b.index_of(e), Some(i));
                    assert!(e.total() <= t);
                }
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(18, 2), 153);
    }
}
