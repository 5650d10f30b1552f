use nalgebra::DMatrix;

use crate::SdpError;

/// Symmetric matrix stored as its upper triangle.
///
/// `push(r, c, v)` adds `v` to both `(r, c)` and `(c, r)`; off-diagonal
/// entries therefore describe a symmetric pair, not a single cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    side: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(side: usize) -> Self {
        SparseSym {
            side,
            entries: Vec::new(),
        }
    }

    /// Builds from a dense matrix, symmetrizing as `(F + Fᵀ)/2`.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SdpError> {
        if m.nrows() != m.ncols() {
            return Err(SdpError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let mut out = SparseSym::new(m.nrows());
        for c in 0..m.ncols() {
            for r in 0..=c {
                let v = 0.5 * (m[(r, c)] + m[(c, r)]);
                if v != 0.0 {
                    out.entries.push((r, c, v));
                }
            }
        }
        Ok(out)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        assert!(r < self.side && c < self.side, "entry outside matrix");
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.entries.push((r, c, v));
    }

    /// Sorts entries, merges duplicates and drops zeros.
    pub fn compress(&mut self) {
        self.entries.sort_by_key(|a| (a.1, a.0));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        self.entries = merged;
    }

    /// Upper-triangle entries `(row, col, value)` with `row <= col`.
    pub fn upper(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.2 == 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.side, self.side);
        self.add_to(&mut m, 1.0);
        m
    }

    pub fn add_to(&self, m: &mut DMatrix<f64>, scale: f64) {
        for &(r, c, v) in &self.entries {
            m[(r, c)] += scale * v;
            if r != c {
                m[(c, r)] += scale * v;
            }
        }
    }

    /// Trace inner product `⟨F, X⟩` with a symmetric dense matrix.
    pub fn dot(&self, x: &DMatrix<f64>) -> f64 {
        let mut s = 0.0;
        for &(r, c, v) in &self.entries {
            if r == c {
                s += v * x[(r, c)];
            } else {
                s += v * (x[(r, c)] + x[(c, r)]);
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }
}

/// One linear matrix inequality `F₀ + Σᵢ yᵢFᵢ ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    side: usize,
    constant: SparseSym,
    coefficients: Vec<(usize, SparseSym)>,
}

impl LmiBlock {
    pub fn new(side: usize) -> Self {
        LmiBlock {
            side,
            constant: SparseSym::new(side),
            coefficients: Vec::new(),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn constant(&self) -> &SparseSym {
        &self.constant
    }

    pub fn constant_mut(&mut self) -> &mut SparseSym {
        &mut self.constant
    }

    pub fn set_constant(&mut self, f0: SparseSym) -> Result<(), SdpError> {
        if f0.side() != self.side {
            return Err(SdpError::BlockSide {
                expected: self.side,
                got: f0.side(),
            });
        }
        self.constant = f0;
        Ok(())
    }

    pub fn add_coefficient(&mut self, var: usize, f: SparseSym) -> Result<(), SdpError> {
        if f.side() != self.side {
            return Err(SdpError::BlockSide {
                expected: self.side,
                got: f.side(),
            });
        }
        self.coefficients.push((var, f));
        Ok(())
    }

    /// Adds `v` at the symmetric position `(r, c)` of the coefficient of `var`.
    pub fn push_entry(&mut self, var: usize, r: usize, c: usize, v: f64) {
        match self.coefficients.iter_mut().rev().find(|(i, _)| *i == var) {
            Some((_, f)) => f.push(r, c, v),
            None => {
                let mut f = SparseSym::new(self.side);
                f.push(r, c, v);
                self.coefficients.push((var, f));
            }
        }
    }

    pub fn coefficients(&self) -> &[(usize, SparseSym)] {
        &self.coefficients
    }

    /// Merges repeated variables and drops empty coefficient matrices.
    pub fn compress(&mut self) {
        self.constant.compress();
        self.coefficients.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, SparseSym)> = Vec::with_capacity(self.coefficients.len());
        for (i, f) in self.coefficients.drain(..) {
            match merged.last_mut() {
                Some((j, g)) if *j == i => g.entries.extend(f.entries),
                _ => merged.push((i, f)),
            }
        }
        for (_, f) in merged.iter_mut() {
            f.compress();
        }
        merged.retain(|(_, f)| !f.entries.is_empty());
        self.coefficients = merged;
    }

    /// Evaluates `F₀ + Σ yᵢFᵢ`.
    pub fn value(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense();
        for (i, f) in &self.coefficients {
            if y[*i] != 0.0 {
                f.add_to(&mut m, y[*i]);
            }
        }
        m
    }
}

/// `min cᵀy` subject to `Ay = b` and a list of LMI blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    n_vars: usize,
    c: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    blocks: Vec<LmiBlock>,
}

impl SdpProblem {
    pub fn new(n_vars: usize) -> Self {
        SdpProblem {
            n_vars,
            c: vec![0.0; n_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn set_objective(&mut self, c: Vec<f64>) -> Result<(), SdpError> {
        if c.len() != self.n_vars {
            return Err(SdpError::Dimension {
                what: "objective",
                expected: self.n_vars,
                got: c.len(),
            });
        }
        self.c = c;
        Ok(())
    }

    pub fn set_objective_coeff(&mut self, var: usize, v: f64) {
        self.c[var] = v;
    }

    /// Appends the row `Σ aᵢ yᵢ = rhs`; repeated indices are summed.
    pub fn add_equality(&mut self, row: Vec<(usize, f64)>, rhs: f64) -> Result<(), SdpError> {
        if let Some(&(i, _)) = row.iter().find(|(i, _)| *i >= self.n_vars) {
            return Err(SdpError::VariableIndex {
                index: i,
                n: self.n_vars,
            });
        }
        let mut row = row;
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (i, v) in row {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(merged);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn add_block(&mut self, mut block: LmiBlock) -> Result<(), SdpError> {
        if let Some((i, _)) = block.coefficients.iter().find(|(i, _)| *i >= self.n_vars) {
            return Err(SdpError::VariableIndex {
                index: *i,
                n: self.n_vars,
            });
        }
        block.compress();
        self.blocks.push(block);
        Ok(())
    }

    pub fn equalities(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.c.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `Ay - b` for a candidate vector.
    pub fn equality_residual(&self, y: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| row.iter().map(|&(i, v)| v * y[i]).sum::<f64>() - b)
            .collect()
    }
}
