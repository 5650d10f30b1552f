use crate::polyring::RatPoly;

use super::problem::Problem;
use super::CertifyError;

/// `h^sq = h₁² + ⋯ + h_m²`, which has the same real zeros as the tuple.
pub fn square_equalities(h: &[RatPoly]) -> Result<RatPoly, CertifyError> {
    let first = h.first().ok_or(CertifyError::EmptyTuple)?;
    let mut out = RatPoly::zero(first.n());
    for p in h {
        out = out.checked_add(&p.square())?;
    }
    Ok(out)
}

/// The problem with its equalities replaced by the single `h^sq`.
/// A problem without equalities is returned unchanged.
pub fn square_problem(prob: &Problem) -> Result<Problem, CertifyError> {
    if prob.equalities().is_empty() {
        return Ok(prob.clone());
    }
    prob.with_equalities(vec![square_equalities(prob.equalities())?])?
        .with_square_roots(0, prob.equalities().to_vec())
}

/// `min f` subject to `∇f = 0`, or to `‖∇f‖² = 0` when `squared`.
pub fn gradient_problem(f: &RatPoly, squared: bool) -> Problem {
    let grad = f.gradient();
    if squared {
        let h = vec![square_equalities(&grad).expect("gradient has n ≥ 1 entries")];
        Problem::new(f.clone(), h, Vec::new())
            .and_then(|p| p.with_square_roots(0, grad))
            .expect("gradient shares the variable count")
    } else {
        Problem::new(f.clone(), grad, Vec::new()).expect("gradient shares the variable count")
    }
}

/// Every subset product `Π_{j∈J} g_j`, ordered by subset size and then
/// lexicographically; the empty subset (product 1) comes first.
pub fn preordering_products(g: &[RatPoly], n: usize) -> Vec<(Vec<usize>, RatPoly)> {
    let m = g.len();
    let mut subsets: Vec<Vec<usize>> = (0u64..(1u64 << m))
        .map(|mask| (0..m).filter(|&j| mask >> j & 1 == 1).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
        .into_iter()
        .map(|s| {
            let mut p = RatPoly::one(n);
            for &j in &s {
                p = &p * &g[j];
            }
            (s, p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::parse_polynomial;

    fn p(s: &str, n: usize) -> RatPoly {
        parse_polynomial(s, n).unwrap()
    }

    #[test]
    fn square_of_single_variable() {
        assert_eq!(square_equalities(&[p("x1", 1)]).unwrap(), p("x1^2", 1));
        assert!(square_equalities(&[]).is_err());
    }

    #[test]
    fn inconsistent_pair_squares_to_positive() {
        let h = [p("x1 - 1", 1), p("x1 + 1", 1)];
        assert_eq!(square_equalities(&h).unwrap(), p("2*x1^2 + 2", 1));
    }

    #[test]
    fn gradient_of_sum_of_squares() {
        let prob = gradient_problem(&p("x1^2 + x2^2", 2), false);
        assert_eq!(prob.equalities(), &[p("2*x1", 2), p("2*x2", 2)]);
        let sq = gradient_problem(&p("x1^2", 1), true);
        assert_eq!(sq.equalities(), &[p("4*x1^2", 1)]);
    }

    #[test]
    fn linear_objective_has_no_critical_point() {
        let prob = gradient_problem(&p("3*x1 - x2", 2), true);
        assert_eq!(prob.equalities(), &[p("10", 2)]);
    }

    #[test]
    fn products_in_order() {
        let g = [p("x1", 2), p("x2", 2), p("x1 + x2", 2)];
        let prods = preordering_products(&g, 2);
        let keys: Vec<Vec<usize>> = prods.iter().map(|(k, _)| k.clone()).collect();
        assert_eq!(
            keys,
            vec![
                vec![],
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 1, 2]
            ]
        );
        assert_eq!(prods[7].1, p("x1^2*x2 + x1*x2^2", 2));
        assert_eq!(preordering_products(&[], 3), vec![(vec![], RatPoly::one(3))]);
    }
}
