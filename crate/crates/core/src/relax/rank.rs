use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::polyring::{basis, Exponent};

use super::moment::MomentVector;
use super::RelaxError;

/// Default relative threshold for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-6;

/// Number of singular values above `max(side, 10) · σ₁ · tol`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    let cut = m.nrows().max(10) as f64 * top * tol;
    sv.iter().filter(|&&s| s > cut).count()
}

/// Ranks of `M_0(y), …, M_k(y)`.
pub fn rank_profile(y: &MomentVector, tol: f64) -> Vec<usize> {
    (0..=y.order())
        .map(|t| numerical_rank(&y.moment_matrix(t), tol))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatTruncation {
    pub flat: bool,
    /// `(rank M_{k−d}(y), rank M_k(y))`.
    pub ranks: (usize, usize),
}

/// Compares the ranks of `M_{k−d}(y)` and `M_k(y)`; requires `k > d`.
pub fn flat_truncation(y: &MomentVector, k: u32, d: u32, tol: f64) -> Result<FlatTruncation, RelaxError> {
    if k <= d || k > y.order() {
        return Err(RelaxError::FlatOrder { k, d, max: y.order() });
    }
    let low = numerical_rank(&y.moment_matrix(k - d), tol);
    let high = numerical_rank(&y.moment_matrix(k), tol);
    Ok(FlatTruncation {
        flat: low == high,
        ranks: (low, high),
    })
}

/// Relative threshold for choosing pivot rows of the factor of `M_t`.
const PIVOT_TOLERANCE: f64 = 1e-6;

/// Atoms of a flat moment matrix `M_t(y)`.
///
/// Factor `M_t = V Vᵀ`, bring `V` to column echelon form with pivots on the
/// lowest monomials, build the multiplication matrices and diagonalize a
/// random combination of them through its real Schur form.
pub fn extract_minimizers(y: &MomentVector, t: u32, tol: f64, seed: u64) -> Result<Vec<Vec<f64>>, RelaxError> {
    let n = y.n();
    let m = y.moment_matrix(t);
    let r = numerical_rank(&m, tol);
    if r == 0 {
        return Err(RelaxError::Extraction("moment matrix is zero".into()));
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let s = eig.eigenvalues.len();
    let v = DMatrix::from_fn(s, r, |i, j| {
        let col = order[j];
        eig.eigenvectors[(i, col)] * eig.eigenvalues[col].max(0.0).sqrt()
    });

    let row_scale = (0..s).map(|i| v.row(i).norm()).fold(0.0, f64::max);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut pivots = Vec::with_capacity(r);
    for i in 0..s {
        if pivots.len() == r {
            break;
        }
        let mut res: DVector<f64> = v.row(i).transpose();
        for q in &ortho {
            let d = q.dot(&res);
            res.axpy(-d, q, 1.0);
        }
        let norm = res.norm();
        if norm > PIVOT_TOLERANCE * row_scale {
            ortho.push(res / norm);
            pivots.push(i);
        }
    }
    if pivots.len() < r {
        return Err(RelaxError::Extraction(format!(
            "found {} independent rows for rank {r}",
            pivots.len()
        )));
    }
    let vp = DMatrix::from_fn(r, r, |i, j| v[(pivots[i], j)]);
    let vp_inv = vp
        .try_inverse()
        .ok_or_else(|| RelaxError::Extraction("pivot block is singular".into()))?;
    let u = &v * vp_inv;

    let rows = basis(n, t);
    let mut mult = Vec::with_capacity(n);
    for var in 0..n {
        let unit = Exponent::unit(n, var);
        let mut ni = DMatrix::zeros(r, r);
        for (j, &p) in pivots.iter().enumerate() {
            let shifted = rows.get(p).add(&unit);
            let idx = rows.index_of(&shifted).ok_or_else(|| {
                RelaxError::Extraction(format!("x{}*{} exceeds degree {t}", var + 1, rows.get(p)))
            })?;
            for c in 0..r {
                ni[(j, c)] = u[(idx, c)];
            }
        }
        mult.push(ni);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut combo = DMatrix::zeros(r, r);
    for (w, ni) in weights.iter().zip(&mult) {
        combo += ni * *w;
    }
    let (q, _) = combo.schur().unpack();
    let mut points: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            let qj = q.column(j);
            mult.iter().map(|ni| (qj.transpose() * ni * qj)[(0, 0)]).collect()
        })
        .collect();
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(points)
}
