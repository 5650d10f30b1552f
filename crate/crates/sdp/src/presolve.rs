use crate::problem::SdpProblem;

const INDEPENDENCE_TOL: f64 = 1e-9;
const CONSISTENCY_TOL: f64 = 1e-7;

/// Equality rows after scaling and removal of linearly dependent rows.
#[derive(Debug, Clone)]
pub(crate) struct ReducedRows {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    /// Original index of every kept row.
    pub kept: Vec<usize>,
    /// Factor each kept row was multiplied by.
    pub scale: Vec<f64>,
}

/// Scales rows to unit max-norm and drops rows in the span of earlier ones
/// (pivoted modified Gram-Schmidt, two passes).
///
/// Returns `None` when a dependent row has a right-hand side that disagrees
/// with the combination of the kept rows.
pub(crate) fn reduce_rows(p: &SdpProblem) -> Option<ReducedRows> {
    let n = p.n_vars();
    let b_max = p
        .equalities()
        .iter()
        .zip(p.rhs())
        .map(|(row, b)| {
            let s = row.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
            if s > 0.0 {
                (b / s).abs()
            } else {
                0.0
            }
        })
        .fold(0.0f64, f64::max);

    let mut out = ReducedRows {
        rows: Vec::new(),
        rhs: Vec::new(),
        kept: Vec::new(),
        scale: Vec::new(),
    };
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut v = vec![0.0; n];

    for (r, (row, &b)) in p.equalities().iter().zip(p.rhs()).enumerate() {
        let amax = row.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
        if amax == 0.0 {
            if b.abs() > CONSISTENCY_TOL * (1.0 + b_max) {
                return None;
            }
            continue;
        }
        let s = 1.0 / amax;
        v.iter_mut().for_each(|x| *x = 0.0);
        for &(i, a) in row {
            v[i] = a * s;
        }
        let mut beta = b * s;
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for (q, bq) in &basis {
                let t: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                if t != 0.0 {
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= t * qi;
                    }
                    beta -= t * bq;
                }
            }
        }
        let nr = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nr > INDEPENDENCE_TOL * norm0 {
            let q: Vec<f64> = v.iter().map(|x| x / nr).collect();
            basis.push((q, beta / nr));
            out.rows.push(row.iter().map(|&(i, a)| (i, a * s)).collect());
            out.rhs.push(b * s);
            out.kept.push(r);
            out.scale.push(s);
        } else if beta.abs() > CONSISTENCY_TOL * (1.0 + b_max) {
            return None;
        }
    }
    Some(out)
}
