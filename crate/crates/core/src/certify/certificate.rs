use std::collections::BTreeMap;
use std::fmt;

use crate::polyring::{Degree, Polynomial, RatPoly, Scalar};

use super::problem::Problem;
use super::sos::SosExpression;

/// Which products of the `g_j` a certificate may multiply by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    /// `Q_k(g)`: only the empty product and single `g_j`.
    QuadraticModule,
    /// `Pr_k(g)`: every subset product.
    Preordering,
}

impl ConeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConeKind::QuadraticModule => "qmodule",
            ConeKind::Preordering => "preordering",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "qmodule" => Some(ConeKind::QuadraticModule),
            "preordering" => Some(ConeKind::Preordering),
            _ => None,
        }
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Claim `f − γ = Σᵢ φᵢhᵢ + Σ_J σ_J · Π_{j∈J} g_j` at order `k`.
///
/// Indices are zero-based here; the JSON form uses one-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T: Scalar> {
    pub gamma: T,
    pub ideal_part: Vec<(usize, Polynomial<T>)>,
    pub cone_part: Vec<(Vec<usize>, SosExpression<T>)>,
    pub order: u32,
    pub kind: ConeKind,
}

/// First failed condition of a rejected certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum InvalidReason {
    VariableCount { expected: usize, got: usize },
    EqualityIndex { index: usize, count: usize },
    InequalityIndex { index: usize, count: usize },
    UnsortedSubset { subset: Vec<usize> },
    ConeKind { subset: Vec<usize> },
    NegativeWeight { subset: Vec<usize>, position: usize, weight: String },
    IdealDegree { index: usize, degree: Degree, bound: u32 },
    ConeDegree { subset: Vec<usize>, degree: Degree, bound: u32 },
    IdentityMismatch { max_abs: String, terms: usize },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &[usize]| {
            let v: Vec<String> = s.iter().map(|j| (j + 1).to_string()).collect();
            format!("{{{}}}", v.join(","))
        };
        match self {
            InvalidReason::VariableCount { expected, got } => {
                write!(f, "variable count: polynomial in {got} variables, problem has {expected}")
            }
            InvalidReason::EqualityIndex { index, count } => {
                write!(f, "index: equality {} does not exist ({count} given)", index + 1)
            }
            InvalidReason::InequalityIndex { index, count } => {
                write!(f, "index: inequality {} does not exist ({count} given)", index + 1)
            }
            InvalidReason::UnsortedSubset { subset } => {
                write!(f, "index: subset {} is not strictly increasing", show(subset))
            }
            InvalidReason::ConeKind { subset } => {
                write!(f, "cone kind: subset {} needs the preordering", show(subset))
            }
            InvalidReason::NegativeWeight {
                subset,
                position,
                weight,
            } => write!(
                f,
                "nonneg weight: square {} of subset {} has weight {weight}",
                position + 1,
                show(subset)
            ),
            InvalidReason::IdealDegree {
                index,
                degree,
                bound,
            } => write!(
                f,
                "degree: phi_{} * h_{} has degree {degree} > {bound}",
                index + 1,
                index + 1
            ),
            InvalidReason::ConeDegree {
                subset,
                degree,
                bound,
            } => write!(
                f,
                "degree: cone term for subset {} has degree {degree} > {bound}",
                show(subset)
            ),
            InvalidReason::IdentityMismatch { max_abs, terms } => write!(
                f,
                "identity mismatch: residual has {terms} terms, max |coefficient| {max_abs}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Valid,
    /// Float certificate whose identity residual is within tolerance.
    NumericallyValid { residual: f64 },
    Invalid(InvalidReason),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn is_accepted(&self) -> bool {
        !matches!(self, Verdict::Invalid(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::NumericallyValid { residual } => {
                write!(f, "numerically valid (residual {residual:.3e})")
            }
            Verdict::Invalid(r) => write!(f, "invalid({r})"),
        }
    }
}

/// Tolerance on the identity residual's coefficient max-norm for float
/// certificates.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

fn subset_product<T: Scalar>(g: &[Polynomial<T>], n: usize, subset: &[usize]) -> Polynomial<T> {
    let mut p = Polynomial::one(n);
    for &j in subset {
        p = &p * &g[j];
    }
    p
}

/// Structural, cone-kind, weight and degree conditions, in that order.
fn check_structure<T: Scalar>(
    n: usize,
    h: &[Polynomial<T>],
    g: &[Polynomial<T>],
    cert: &Certificate<T>,
) -> Result<(), InvalidReason> {
    let polys = cert
        .ideal_part
        .iter()
        .map(|(_, p)| p.n())
        .chain(cert.cone_part.iter().flat_map(|(_, s)| {
            std::iter::once(s.n()).chain(s.squares().iter().map(|(_, b)| b.n()))
        }));
    for got in polys {
        if got != n {
            return Err(InvalidReason::VariableCount { expected: n, got });
        }
    }
    for (i, _) in &cert.ideal_part {
        if *i >= h.len() {
            return Err(InvalidReason::EqualityIndex {
                index: *i,
                count: h.len(),
            });
        }
    }
    for (subset, _) in &cert.cone_part {
        if let Some(&j) = subset.iter().find(|&&j| j >= g.len()) {
            return Err(InvalidReason::InequalityIndex {
                index: j,
                count: g.len(),
            });
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InvalidReason::UnsortedSubset {
                subset: subset.clone(),
            });
        }
    }
    if cert.kind == ConeKind::QuadraticModule {
        if let Some((subset, _)) = cert.cone_part.iter().find(|(s, _)| s.len() > 1) {
            return Err(InvalidReason::ConeKind {
                subset: subset.clone(),
            });
        }
    }
    for (subset, sos) in &cert.cone_part {
        for (pos, (w, _)) in sos.squares().iter().enumerate() {
            if *w < T::zero() {
                return Err(InvalidReason::NegativeWeight {
                    subset: subset.clone(),
                    position: pos,
                    weight: w.to_string(),
                });
            }
        }
    }
    let bound = 2 * cert.order;
    for (i, phi) in &cert.ideal_part {
        let d = phi.degree() + h[*i].degree();
        if d > Degree::Finite(bound) {
            return Err(InvalidReason::IdealDegree {
                index: *i,
                degree: d,
                bound,
            });
        }
    }
    for (subset, sos) in &cert.cone_part {
        let dg = subset
            .iter()
            .fold(Degree::Finite(0), |acc, &j| acc + g[j].degree());
        let d = sos.degree() + dg;
        if d > Degree::Finite(bound) {
            return Err(InvalidReason::ConeDegree {
                subset: subset.clone(),
                degree: d,
                bound,
            });
        }
    }
    Ok(())
}

/// `f − γ − Σ φᵢhᵢ − Σ σ_J Π g_J`.
fn identity_residual<T: Scalar>(
    f: &Polynomial<T>,
    h: &[Polynomial<T>],
    g: &[Polynomial<T>],
    cert: &Certificate<T>,
) -> Polynomial<T> {
    let n = f.n();
    let mut r = f - &Polynomial::constant(n, cert.gamma.clone());
    for (i, phi) in &cert.ideal_part {
        r = r - phi * &h[*i];
    }
    let mut products: BTreeMap<Vec<usize>, Polynomial<T>> = BTreeMap::new();
    for (subset, sos) in &cert.cone_part {
        let prod = products
            .entry(subset.clone())
            .or_insert_with(|| subset_product(g, n, subset));
        r = r - &sos.expand() * prod;
    }
    r
}

/// Exact check of a rational certificate against `prob`.
pub fn verify_certificate(prob: &Problem, cert: &Certificate<crate::polyring::Rational>) -> Verdict {
    if let Err(r) = check_structure(prob.n(), prob.equalities(), prob.inequalities(), cert) {
        return Verdict::Invalid(r);
    }
    let r = identity_residual(prob.objective(), prob.equalities(), prob.inequalities(), cert);
    if r.is_zero() {
        Verdict::Valid
    } else {
        Verdict::Invalid(InvalidReason::IdentityMismatch {
            max_abs: r.max_abs_coeff().to_string(),
            terms: r.len(),
        })
    }
}

/// Check of a float certificate; the identity may fail by `tol` in every
/// coefficient, and success is reported as numerically valid only.
pub fn verify_numeric(prob: &Problem, cert: &Certificate<f64>, tol: f64) -> Verdict {
    let h: Vec<_> = prob.equalities().iter().map(RatPoly::to_float).collect();
    let g: Vec<_> = prob.inequalities().iter().map(RatPoly::to_float).collect();
    if let Err(r) = check_structure(prob.n(), &h, &g, cert) {
        return Verdict::Invalid(r);
    }
    let r = identity_residual(&prob.objective().to_float(), &h, &g, cert);
    let max_abs = r.max_abs_coeff();
    if max_abs <= tol {
        Verdict::NumericallyValid { residual: max_abs }
    } else {
        Verdict::Invalid(InvalidReason::IdentityMismatch {
            max_abs: format!("{max_abs:e}"),
            terms: r.len(),
        })
    }
}
