use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::problem::SdpProblem;

/// Termination status of [`crate::solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    PrimalInfeasibleSuspect,
    DualInfeasibleSuspect,
    NumericalFailure,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIter => "max_iter",
            SdpStatus::PrimalInfeasibleSuspect => "primal_infeasible_suspect",
            SdpStatus::DualInfeasibleSuspect => "dual_infeasible_suspect",
            SdpStatus::NumericalFailure => "numerical_failure",
        }
    }

    pub fn is_optimal(self) -> bool {
        self == SdpStatus::Optimal
    }
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            max_iter: 200,
        }
    }
}

/// Relative KKT residuals of a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Primal vector.
    pub y: Vec<f64>,
    /// One dual matrix per block, in problem order.
    pub block_duals: Vec<DMatrix<f64>>,
    /// One multiplier per equality row, in problem order.
    pub eq_multipliers: Vec<f64>,
    pub status: SdpStatus,
    pub residuals: Residuals,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// All-zero pair with the given status, shaped for `p`.
    pub fn empty(p: &SdpProblem, status: SdpStatus) -> Self {
        let mut s = SdpSolution {
            y: vec![0.0; p.n_vars()],
            block_duals: p
                .blocks()
                .iter()
                .map(|b| DMatrix::zeros(b.side(), b.side()))
                .collect(),
            eq_multipliers: vec![0.0; p.equalities().len()],
            status,
            residuals: Residuals::default(),
            primal_objective: 0.0,
            dual_objective: 0.0,
            iterations: 0,
        };
        s.refresh(p);
        s
    }

    /// Recomputes objectives and residuals from the stored vectors.
    pub fn refresh(&mut self, p: &SdpProblem) {
        self.primal_objective = p.objective_value(&self.y);
        self.dual_objective = dual_objective(p, &self.block_duals, &self.eq_multipliers);
        self.residuals = residuals(p, self);
    }
}

fn inf_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// `bᵀz − Σⱼ ⟨F_{j0}, Xⱼ⟩`.
pub fn dual_objective(p: &SdpProblem, x: &[DMatrix<f64>], z: &[f64]) -> f64 {
    let mut d: f64 = p.rhs().iter().zip(z).map(|(b, z)| b * z).sum();
    for (block, xj) in p.blocks().iter().zip(x) {
        d -= block.constant().dot(xj);
    }
    d
}

/// `c − 𝒜*(X) − Aᵀz`.
pub fn dual_residual_vector(p: &SdpProblem, x: &[DMatrix<f64>], z: &[f64]) -> Vec<f64> {
    let mut r = p.objective().to_vec();
    for (block, xj) in p.blocks().iter().zip(x) {
        for (i, f) in block.coefficients() {
            r[*i] -= f.dot(xj);
        }
    }
    for (row, zr) in p.equalities().iter().zip(z) {
        for &(i, v) in row {
            r[i] -= v * zr;
        }
    }
    r
}

/// Relative residuals of `s` as a candidate solution of `p`.
///
/// The primal value also includes the worst negative eigenvalue of any
/// block `F(y)`, and the dual value the worst negative eigenvalue of any
/// dual matrix, each relative to the block data scale.
pub fn residuals(p: &SdpProblem, s: &SdpSolution) -> Residuals {
    let b_norm = inf_norm(p.rhs().iter().copied());
    let mut primal = inf_norm(p.equality_residual(&s.y)) / (1.0 + b_norm);
    for block in p.blocks() {
        let lam = min_eigenvalue(&block.value(&s.y));
        if lam < 0.0 {
            primal = primal.max(-lam / (1.0 + block.constant().max_abs()));
        }
    }
    let c_norm = inf_norm(p.objective().iter().copied());
    let mut dual = inf_norm(dual_residual_vector(p, &s.block_duals, &s.eq_multipliers)) / (1.0 + c_norm);
    for xj in &s.block_duals {
        let lam = min_eigenvalue(xj);
        if lam < 0.0 {
            dual = dual.max(-lam / (1.0 + c_norm));
        }
    }
    let pobj = p.objective_value(&s.y);
    let dobj = dual_objective(p, &s.block_duals, &s.eq_multipliers);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
    Residuals { primal, dual, gap }
}
