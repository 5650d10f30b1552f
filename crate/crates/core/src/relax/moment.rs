use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;

use crate::polyring::{basis, Exponent, MonomialBasis, RatPoly, Rational};

use super::RelaxError;

/// `⌈deg g / 2⌉`, with the zero polynomial counted as degree 0.
pub fn half_degree(g: &RatPoly) -> u32 {
    g.total_degree().unwrap_or(0).div_ceil(2)
}

/// Truncated moment sequence `(y_α)_{|α| ≤ 2k}` in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    n: usize,
    k: u32,
    values: Vec<f64>,
}

impl MomentVector {
    /// Fails unless `values` has one entry per exponent of degree ≤ 2k.
    pub fn new(n: usize, k: u32, values: Vec<f64>) -> Result<Self, RelaxError> {
        let expected = crate::polyring::binomial(n + 2 * k as usize, n);
        if values.len() != expected {
            return Err(RelaxError::MomentLength {
                expected,
                got: values.len(),
            });
        }
        Ok(MomentVector { n, k, values })
    }

    /// `y_α = u^α`.
    pub fn from_point(u: &[f64], k: u32) -> Self {
        let values = basis(u.len(), 2 * k).evaluate(u);
        MomentVector {
            n: u.len(),
            k,
            values,
        }
    }

    /// `Σ wᵢ · (evaluation vector of uᵢ)`.
    pub fn from_atoms(points: &[Vec<f64>], weights: &[f64], k: u32) -> Self {
        let n = points[0].len();
        let mut values = vec![0.0; crate::polyring::binomial(n + 2 * k as usize, n)];
        for (u, w) in points.iter().zip(weights) {
            for (v, e) in values.iter_mut().zip(basis(n, 2 * k).evaluate(u)) {
                *v += w * e;
            }
        }
        MomentVector { n, k, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn y0(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, e: &Exponent) -> Option<f64> {
        basis(self.n, 2 * self.k)
            .index_of(e)
            .map(|i| self.values[i])
    }

    /// The leading part of degree ≤ 2t.
    pub fn truncate(&self, t: u32) -> MomentVector {
        let len = crate::polyring::binomial(self.n + 2 * t as usize, self.n);
        MomentVector {
            n: self.n,
            k: t.min(self.k),
            values: self.values[..len.min(self.values.len())].to_vec(),
        }
    }

    /// `⟨p, y⟩ = Σ p_α y_α`, or `None` if `p` has degree above 2k.
    pub fn riesz(&self, p: &RatPoly) -> Option<f64> {
        let b = basis(self.n, 2 * self.k);
        let mut acc = 0.0;
        for (e, c) in p.terms() {
            acc += c.to_f64()? * self.values[b.index_of(e)?];
        }
        Some(acc)
    }

    /// `M_t(y)` for `t ≤ k`.
    pub fn moment_matrix(&self, t: u32) -> DMatrix<f64> {
        localizing_map(&RatPoly::one(self.n), self.n, t)
            .expect("constant generator")
            .apply(self)
    }
}

/// The linear map `y ↦ L_g(y) = Σ_α A_α y_α` at order `k`; `A_α` are
/// stored by their upper-triangle entries.
#[derive(Debug, Clone)]
pub struct LocalizingMap {
    pub generator: RatPoly,
    pub k: u32,
    pub d: u32,
    rows: MonomialBasis,
    slices: BTreeMap<Exponent, Vec<(usize, usize, Rational)>>,
}

/// Localizing map of `g` at order `k` in `n` variables; requires `k ≥ ⌈deg g/2⌉`.
pub fn localizing_map(g: &RatPoly, n: usize, k: u32) -> Result<LocalizingMap, RelaxError> {
    let d = half_degree(g);
    if k < d {
        return Err(RelaxError::OrderTooSmall {
            order: k,
            needed: d,
            what: format!("generator {g}"),
        });
    }
    let rows = basis(n, k - d);
    let mut slices: BTreeMap<Exponent, Vec<(usize, usize, Rational)>> = BTreeMap::new();
    for r in 0..rows.len() {
        for c in r..rows.len() {
            let shift = rows.get(r).add(rows.get(c));
            for (e, v) in g.terms() {
                slices
                    .entry(e.add(&shift))
                    .or_default()
                    .push((r, c, v.clone()));
            }
        }
    }
    Ok(LocalizingMap {
        generator: g.clone(),
        k,
        d,
        rows,
        slices,
    })
}

impl LocalizingMap {
    pub fn side(&self) -> usize {
        self.rows.len()
    }

    pub fn row_basis(&self) -> &MonomialBasis {
        &self.rows
    }

    /// Nonzero slices `A_α`, as upper-triangle entries.
    pub fn slices(&self) -> impl Iterator<Item = (&Exponent, &[(usize, usize, Rational)])> + '_ {
        self.slices.iter().map(|(e, v)| (e, v.as_slice()))
    }

    /// `Σ_α A_α x^α` as a matrix of polynomials.
    pub fn symbolic(&self) -> Vec<Vec<RatPoly>> {
        let n = self.generator.n();
        let s = self.side();
        let mut m = vec![vec![RatPoly::zero(n); s]; s];
        for (e, entries) in &self.slices {
            for (r, c, v) in entries {
                let t = RatPoly::monomial(e.clone(), v.clone());
                m[*r][*c] = &m[*r][*c] + &t;
                if r != c {
                    m[*c][*r] = &m[*c][*r] + &t;
                }
            }
        }
        m
    }

    pub fn apply(&self, y: &MomentVector) -> DMatrix<f64> {
        let b = basis(y.n(), 2 * y.order());
        let s = self.side();
        let mut m = DMatrix::zeros(s, s);
        for (e, entries) in &self.slices {
            let yv = b.index_of(e).map(|i| y.values()[i]).unwrap_or(f64::NAN);
            for (r, c, v) in entries {
                let add = v.to_f64().unwrap_or(0.0) * yv;
                m[(*r, *c)] += add;
                if r != c {
                    m[(*c, *r)] += add;
                }
            }
        }
        m
    }
}
