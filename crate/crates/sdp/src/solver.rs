use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::presolve::{reduce_rows, ReducedRows};
use crate::problem::SdpProblem;
use crate::solution::{SdpSolution, SdpStatus, SolveOptions};

const STEP_FRACTION_BASE: f64 = 0.9;
const STEP_FRACTION_GAIN: f64 = 0.09;
const DIVERGENCE: f64 = 1e8;
const STALL_STEP: f64 = 1e-7;
const STALL_LIMIT: usize = 4;
const NO_PROGRESS_LIMIT: usize = 30;
const REFINE_STEPS: usize = 3;

/// Symmetric matrix given by all of its nonzero cells, both triangles.
type Cells = Vec<(usize, usize, f64)>;

fn full_cells(upper: &[(usize, usize, f64)]) -> Cells {
    let mut out = Vec::with_capacity(2 * upper.len());
    for &(r, c, v) in upper {
        out.push((r, c, v));
        if r != c {
            out.push((c, r, v));
        }
    }
    out
}

/// `Σ F[p][q]·K[q][p]`, i.e. `tr(F K)`.
fn trace_with(f: &Cells, k: &DMatrix<f64>) -> f64 {
    f.iter().map(|&(p, q, v)| v * k[(q, p)]).sum()
}

fn add_cells(m: &mut DMatrix<f64>, f: &Cells, scale: f64) {
    for &(p, q, v) in f {
        m[(p, q)] += scale * v;
    }
}

/// Dense `L · F · R` for sparse symmetric `F`.
fn sandwich(left: &DMatrix<f64>, f: &Cells, right: &DMatrix<f64>) -> DMatrix<f64> {
    let n = left.nrows();
    let mut cols: Vec<usize> = f.iter().map(|e| e.1).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut pos = vec![usize::MAX; right.nrows()];
    for (k, &q) in cols.iter().enumerate() {
        pos[q] = k;
    }
    let mut lf = DMatrix::zeros(n, cols.len());
    for &(p, q, v) in f {
        let k = pos[q];
        let mut dst = lf.column_mut(k);
        dst.axpy(v, &left.column(p), 1.0);
    }
    let mut rr = DMatrix::zeros(cols.len(), right.ncols());
    for (k, &q) in cols.iter().enumerate() {
        rr.row_mut(k).copy_from(&right.row(q));
    }
    lf * rr
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for c in 0..n {
        for r in 0..c {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Cholesky with diagonal regularization retries.
/// Factorization of a Schur complement: Cholesky when it succeeds, LU with
/// partial pivoting when rounding has made the matrix numerically indefinite.
enum SchurFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl SchurFactor {
    fn new(m: &DMatrix<f64>) -> Option<SchurFactor> {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(SchurFactor::Cholesky(c));
        }
        let lu = LU::new(m.clone());
        if lu.is_invertible() {
            log::debug!("Schur complement factored by LU");
            return Some(SchurFactor::Lu(lu));
        }
        None
    }

    fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SchurFactor::Cholesky(c) => c.solve(b),
            SchurFactor::Lu(lu) => lu.solve(b).unwrap_or_else(|| DMatrix::zeros(b.nrows(), b.ncols())),
        }
    }

    fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SchurFactor::Cholesky(c) => c.solve(b),
            SchurFactor::Lu(lu) => lu.solve(b).unwrap_or_else(|| DVector::zeros(b.nrows())),
        }
    }
}

/// Largest `α` with `Z + αΔZ ⪰ 0`, infinite when unbounded.
fn max_step(z: &DMatrix<f64>, dz: &DMatrix<f64>) -> f64 {
    if z.nrows() == 0 {
        return f64::INFINITY;
    }
    let l = match Cholesky::new(z.clone()) {
        Some(c) => c.l(),
        None => return 0.0,
    };
    let a = match l.solve_lower_triangular(dz) {
        Some(a) => a,
        None => return 0.0,
    };
    let mut w = match l.solve_lower_triangular(&a.transpose()) {
        Some(w) => w,
        None => return 0.0,
    };
    symmetrize(&mut w);
    let lam = w
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

struct GramCell {
    var: usize,
    r: usize,
    c: usize,
    scale: f64,
}

impl GramCell {
    fn weight(&self) -> f64 {
        if self.r == self.c {
            1.0
        } else {
            2.0
        }
    }
}

enum BlockKind {
    Ordinary { vars: Vec<(usize, Cells)> },
    Gram { cells: Vec<GramCell>, rows: Vec<(usize, Cells)> },
}

struct Block {
    side: usize,
    f0: DMatrix<f64>,
    kind: BlockKind,
}

struct Component {
    vars: Vec<usize>,
    blocks: Vec<usize>,
    a: DMatrix<f64>,
}

struct Model {
    n: usize,
    m: usize,
    c: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    blocks: Vec<Block>,
    comps: Vec<Component>,
    local: Vec<usize>,
    free: Vec<usize>,
    /// Variables that appear nowhere; they stay at zero.
    orphans: Vec<usize>,
    a_free: DMatrix<f64>,
    cone_dim: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl Model {
    fn build(p: &SdpProblem, red: ReducedRows) -> Model {
        let n = p.n_vars();
        let m = red.rows.len();
        let mut appear: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, blk) in p.blocks().iter().enumerate() {
            for (i, _) in blk.coefficients() {
                appear[*i].push(j);
            }
        }

        let mut is_gram = vec![false; p.blocks().len()];
        for (j, blk) in p.blocks().iter().enumerate() {
            let side = blk.side();
            if !blk.constant().is_empty() || blk.coefficients().is_empty() {
                continue;
            }
            let mut covered = vec![false; side * side];
            let mut ok = true;
            for (i, f) in blk.coefficients() {
                if appear[*i].len() != 1 || f.upper().len() != 1 {
                    ok = false;
                    break;
                }
                let (r, c, _) = f.upper()[0];
                if covered[r * side + c] {
                    ok = false;
                    break;
                }
                covered[r * side + c] = true;
            }
            if ok && blk.coefficients().len() == side * (side + 1) / 2 {
                is_gram[j] = true;
            }
        }

        let mut var_gram: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut blocks = Vec::with_capacity(p.blocks().len());
        for (j, blk) in p.blocks().iter().enumerate() {
            let side = blk.side();
            let f0 = blk.constant().to_dense();
            let kind = if is_gram[j] {
                let cells: Vec<GramCell> = blk
                    .coefficients()
                    .iter()
                    .enumerate()
                    .map(|(k, (i, f))| {
                        var_gram[*i] = Some((j, k));
                        let (r, c, v) = f.upper()[0];
                        GramCell {
                            var: *i,
                            r,
                            c,
                            scale: v,
                        }
                    })
                    .collect();
                BlockKind::Gram {
                    cells,
                    rows: Vec::new(),
                }
            } else {
                BlockKind::Ordinary {
                    vars: blk
                        .coefficients()
                        .iter()
                        .map(|(i, f)| (*i, full_cells(f.upper())))
                        .collect(),
                }
            };
            blocks.push(Block { side, f0, kind });
        }

        // Row restrictions B_r to each variable block.
        let mut gram_rows: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>> =
            vec![Vec::new(); blocks.len()];
        for (r, row) in red.rows.iter().enumerate() {
            for &(i, a) in row {
                if let Some((j, k)) = var_gram[i] {
                    let cell = match &blocks[j].kind {
                        BlockKind::Gram { cells, .. } => &cells[k],
                        BlockKind::Ordinary { .. } => unreachable!(),
                    };
                    let v = a / (cell.scale * cell.weight());
                    let list = &mut gram_rows[j];
                    match list.last_mut() {
                        Some((rr, e)) if *rr == r => e.push((cell.r, cell.c, v)),
                        _ => list.push((r, vec![(cell.r, cell.c, v)])),
                    }
                }
            }
        }
        for (blk, gr) in blocks.iter_mut().zip(gram_rows) {
            if let BlockKind::Gram { rows, .. } = &mut blk.kind {
                *rows = gr.into_iter().map(|(r, e)| (r, full_cells(&e))).collect();
            }
        }

        // Connected components of ordinary variables.
        let mut parent: Vec<usize> = (0..n).collect();
        for blk in &blocks {
            if let BlockKind::Ordinary { vars } = &blk.kind {
                for w in vars.windows(2) {
                    let a = find(&mut parent, w[0].0);
                    let b = find(&mut parent, w[1].0);
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut comp_of_root = vec![usize::MAX; n];
        let mut comps: Vec<Component> = Vec::new();
        let mut local = vec![usize::MAX; n];
        let mut touched = vec![false; n];
        for row in &red.rows {
            for &(i, _) in row {
                touched[i] = true;
            }
        }
        let mut free = Vec::new();
        let mut orphans = Vec::new();
        for i in 0..n {
            if appear[i].is_empty() {
                if touched[i] {
                    free.push(i);
                } else {
                    orphans.push(i);
                }
                continue;
            }
            if var_gram[i].is_some() {
                continue;
            }
            let root = find(&mut parent, i);
            if comp_of_root[root] == usize::MAX {
                comp_of_root[root] = comps.len();
                comps.push(Component {
                    vars: Vec::new(),
                    blocks: Vec::new(),
                    a: DMatrix::zeros(0, 0),
                });
            }
            let comp = &mut comps[comp_of_root[root]];
            local[i] = comp.vars.len();
            comp.vars.push(i);
        }
        for (j, blk) in blocks.iter().enumerate() {
            if let BlockKind::Ordinary { vars } = &blk.kind {
                if let Some((i, _)) = vars.first() {
                    let root = find(&mut parent, *i);
                    comps[comp_of_root[root]].blocks.push(j);
                }
            }
        }
        let mut comp_index = vec![usize::MAX; n];
        for (ci, comp) in comps.iter().enumerate() {
            for &i in &comp.vars {
                comp_index[i] = ci;
            }
        }
        let mut free_index = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            free_index[i] = k;
        }
        for comp in comps.iter_mut() {
            comp.a = DMatrix::zeros(m, comp.vars.len());
        }
        let mut a_free = DMatrix::zeros(m, free.len());
        for (r, row) in red.rows.iter().enumerate() {
            for &(i, a) in row {
                if comp_index[i] != usize::MAX {
                    comps[comp_index[i]].a[(r, local[i])] += a;
                } else if free_index[i] != usize::MAX {
                    a_free[(r, free_index[i])] += a;
                }
            }
        }

        let cone_dim = blocks.iter().map(|b| b.side).sum();
        Model {
            n,
            m,
            c: p.objective().to_vec(),
            rows: red.rows,
            b: red.rhs,
            blocks,
            comps,
            local,
            free,
            orphans,
            a_free,
            cone_dim,
        }
    }

    fn block_value(&self, j: usize, y: &[f64]) -> DMatrix<f64> {
        let blk = &self.blocks[j];
        let mut v = blk.f0.clone();
        match &blk.kind {
            BlockKind::Ordinary { vars } => {
                for (i, f) in vars {
                    if y[*i] != 0.0 {
                        add_cells(&mut v, f, y[*i]);
                    }
                }
            }
            BlockKind::Gram { cells, .. } => {
                for cell in cells {
                    let x = cell.scale * y[cell.var];
                    v[(cell.r, cell.c)] += x;
                    if cell.r != cell.c {
                        v[(cell.c, cell.r)] += x;
                    }
                }
            }
        }
        v
    }

    /// `𝒜*(X)` accumulated into `out`.
    fn adjoint(&self, x: &[DMatrix<f64>], out: &mut [f64]) {
        for (blk, xj) in self.blocks.iter().zip(x) {
            match &blk.kind {
                BlockKind::Ordinary { vars } => {
                    for (i, f) in vars {
                        out[*i] += trace_with(f, xj);
                    }
                }
                BlockKind::Gram { cells, .. } => {
                    for cell in cells {
                        out[cell.var] += cell.scale * cell.weight() * xj[(cell.r, cell.c)];
                    }
                }
            }
        }
    }

    fn primal_residual(&self, y: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.b)
            .map(|(row, b)| b - row.iter().map(|&(i, a)| a * y[i]).sum::<f64>())
            .collect()
    }

    fn dual_residual(&self, x: &[DMatrix<f64>], z: &[f64]) -> Vec<f64> {
        let mut at = vec![0.0; self.n];
        self.adjoint(x, &mut at);
        for (row, zr) in self.rows.iter().zip(z) {
            for &(i, a) in row {
                at[i] += a * zr;
            }
        }
        self.c.iter().zip(at).map(|(c, a)| c - a).collect()
    }
}

struct Iterate {
    y: Vec<f64>,
    z: Vec<f64>,
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
}

struct Direction {
    dy: Vec<f64>,
    dz: Vec<f64>,
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
}

/// Per-iteration factorizations shared by the predictor and corrector.
struct Factor {
    s_inv: Vec<Option<DMatrix<f64>>>,
    x_inv: Vec<Option<DMatrix<f64>>>,
    comps: Vec<(SchurFactor, DMatrix<f64>)>,
    p: Option<SchurFactor>,
    free: Option<(DMatrix<f64>, SchurFactor)>,
}

struct Residual {
    rp: Vec<f64>,
    rd: Vec<f64>,
    rb: Vec<DMatrix<f64>>,
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let c = Cholesky::new(m.clone())?;
    let mut inv = c.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

impl Model {
    fn factor(&self, it: &Iterate) -> Option<Factor> {
        let nb = self.blocks.len();
        let mut s_inv = vec![None; nb];
        let mut x_inv = vec![None; nb];
        let mut p = DMatrix::zeros(self.m, self.m);

        for (j, blk) in self.blocks.iter().enumerate() {
            match &blk.kind {
                BlockKind::Ordinary { .. } => s_inv[j] = Some(inverse_spd(&it.s[j])?),
                BlockKind::Gram { rows, .. } => {
                    let xi = inverse_spd(&it.x[j])?;
                    let s = &it.s[j];
                    for (a, (ra, ba)) in rows.iter().enumerate() {
                        let k = sandwich(s, ba, &xi);
                        for (rb, bb) in rows.iter().skip(a) {
                            let v = trace_with(bb, &k);
                            p[(*rb, *ra)] += v;
                            if rb != ra {
                                p[(*ra, *rb)] += v;
                            }
                        }
                    }
                    x_inv[j] = Some(xi);
                }
            }
        }

        let mut comps = Vec::with_capacity(self.comps.len());
        for comp in &self.comps {
            let nc = comp.vars.len();
            let mut mm = DMatrix::zeros(nc, nc);
            for &j in &comp.blocks {
                let vars = match &self.blocks[j].kind {
                    BlockKind::Ordinary { vars } => vars,
                    BlockKind::Gram { .. } => unreachable!(),
                };
                let si = s_inv[j].as_ref().unwrap();
                let x = &it.x[j];
                for (a, (ia, fa)) in vars.iter().enumerate() {
                    let g = sandwich(si, fa, x);
                    let la = self.local[*ia];
                    for (ib, fb) in vars.iter().skip(a) {
                        let lb = self.local[*ib];
                        let v = trace_with(fb, &g);
                        mm[(la, lb)] += v;
                        if la != lb {
                            mm[(lb, la)] += v;
                        }
                    }
                }
            }
            symmetrize(&mut mm);
            let chol = SchurFactor::new(&mm)?;
            let y = chol.solve_mat(&comp.a.transpose());
            p += &comp.a * &y;
            comps.push((chol, y));
        }

        let (p_chol, free) = if self.m > 0 {
            symmetrize(&mut p);
            let pc = SchurFactor::new(&p)?;
            let free = if self.free.is_empty() {
                None
            } else {
                let pa = pc.solve_mat(&self.a_free);
                let mut t = self.a_free.transpose() * &pa;
                symmetrize(&mut t);
                Some((pa, SchurFactor::new(&t)?))
            };
            (Some(pc), free)
        } else {
            (None, None)
        };
        Some(Factor {
            s_inv,
            x_inv,
            comps,
            p: p_chol,
            free,
        })
    }

    fn residual(&self, it: &Iterate) -> Residual {
        let rb = (0..self.blocks.len())
            .map(|j| self.block_value(j, &it.y) - &it.s[j])
            .collect();
        Residual {
            rp: self.primal_residual(&it.y),
            rd: self.dual_residual(&it.x, &it.z),
            rb,
        }
    }

    /// Complementarity targets: `μS⁻¹ − X` (minus the corrector term) on
    /// ordinary blocks and `μX⁻¹ − S` on Gram blocks.
    fn target(&self, it: &Iterate, fac: &Factor, mu: f64, corr: Option<&Direction>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(j, blk)| match &blk.kind {
                BlockKind::Ordinary { .. } => {
                    let si = fac.s_inv[j].as_ref().unwrap();
                    let mut c = si * mu - &it.x[j];
                    if let Some(d) = corr {
                        c -= sym(&(&d.dx[j] * &d.ds[j] * si));
                    }
                    c
                }
                BlockKind::Gram { .. } => {
                    let xi = fac.x_inv[j].as_ref().unwrap();
                    let mut c = xi * mu - &it.s[j];
                    if let Some(d) = corr {
                        c -= sym(&(&d.ds[j] * &d.dx[j] * xi));
                    }
                    c
                }
            })
            .collect()
    }

    /// Linear part `Σ dyᵢ F_i` of block `j`.
    fn block_linear(&self, j: usize, dy: &[f64]) -> DMatrix<f64> {
        let blk = &self.blocks[j];
        let mut v = DMatrix::zeros(blk.side, blk.side);
        match &blk.kind {
            BlockKind::Ordinary { vars } => {
                for (i, f) in vars {
                    if dy[*i] != 0.0 {
                        add_cells(&mut v, f, dy[*i]);
                    }
                }
            }
            BlockKind::Gram { cells, .. } => {
                for cell in cells {
                    let x = cell.scale * dy[cell.var];
                    v[(cell.r, cell.c)] += x;
                    if cell.r != cell.c {
                        v[(cell.c, cell.r)] += x;
                    }
                }
            }
        }
        v
    }

    /// Residuals of the Newton equations left by `d`.
    fn newton_error(&self, it: &Iterate, fac: &Factor, d: &Direction, res: &Residual, rc: &[DMatrix<f64>]) -> (Residual, Vec<DMatrix<f64>>) {
        let rp: Vec<f64> = self
            .rows
            .iter()
            .zip(&res.rp)
            .map(|(row, r)| r - row.iter().map(|&(i, a)| a * d.dy[i]).sum::<f64>())
            .collect();
        let mut at = vec![0.0; self.n];
        self.adjoint(&d.dx, &mut at);
        for (row, zr) in self.rows.iter().zip(&d.dz) {
            for &(i, a) in row {
                at[i] += a * zr;
            }
        }
        let rd: Vec<f64> = res.rd.iter().zip(at).map(|(r, a)| r - a).collect();
        let mut rb = Vec::with_capacity(self.blocks.len());
        let mut ec = Vec::with_capacity(self.blocks.len());
        for (j, blk) in self.blocks.iter().enumerate() {
            rb.push(&res.rb[j] + self.block_linear(j, &d.dy) - &d.ds[j]);
            let e = match &blk.kind {
                BlockKind::Ordinary { .. } => {
                    let si = fac.s_inv[j].as_ref().unwrap();
                    &rc[j] - &d.dx[j] - sym(&(&it.x[j] * &d.ds[j] * si))
                }
                BlockKind::Gram { .. } => {
                    let xi = fac.x_inv[j].as_ref().unwrap();
                    &rc[j] - &d.ds[j] - sym(&(&it.s[j] * &d.dx[j] * xi))
                }
            };
            ec.push(e);
        }
        (Residual { rp, rd, rb }, ec)
    }

    fn direction(
        &self,
        it: &Iterate,
        fac: &Factor,
        res: &Residual,
        mu: f64,
        corr: Option<&Direction>,
    ) -> Direction {
        let rc = self.target(it, fac, mu, corr);
        let mut d = self.newton(it, fac, res, &rc);
        let size = |r: &Residual, c: &[DMatrix<f64>]| {
            r.rp.iter()
                .chain(&r.rd)
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(r.rb.iter().chain(c).fold(0.0f64, |m, v| m.max(v.amax())))
        };
        let scale = size(res, &rc).max(f64::MIN_POSITIVE);
        let mut err = {
            let (e, ec) = self.newton_error(it, fac, &d, res, &rc);
            (size(&e, &ec), e, ec)
        };
        for _ in 0..REFINE_STEPS {
            if err.0 <= 1e-14 * scale {
                break;
            }
            let delta = self.newton(it, fac, &err.1, &err.2);
            let mut trial = Direction {
                dy: d.dy.iter().zip(&delta.dy).map(|(a, b)| a + b).collect(),
                dz: d.dz.iter().zip(&delta.dz).map(|(a, b)| a + b).collect(),
                dx: d.dx.iter().zip(&delta.dx).map(|(a, b)| a + b).collect(),
                ds: d.ds.iter().zip(&delta.ds).map(|(a, b)| a + b).collect(),
            };
            for m in trial.dx.iter_mut().chain(trial.ds.iter_mut()) {
                symmetrize(m);
            }
            let (e, ec) = self.newton_error(it, fac, &trial, res, &rc);
            let new = size(&e, &ec);
            if new >= err.0 {
                break;
            }
            d = trial;
            err = (new, e, ec);
        }
        d
    }

    /// Solves the Newton equations for the residuals `res` and the
    /// complementarity targets `rc`.
    fn newton(&self, it: &Iterate, fac: &Factor, res: &Residual, rc: &[DMatrix<f64>]) -> Direction {
        let nb = self.blocks.len();
        let mut rhs_u: Vec<DVector<f64>> = self
            .comps
            .iter()
            .map(|c| DVector::zeros(c.vars.len()))
            .collect();
        let mut e = DVector::zeros(self.m);
        let mut d_mats: Vec<Option<DMatrix<f64>>> = vec![None; nb];
        let mut comp_of_block = vec![usize::MAX; nb];
        for (ci, comp) in self.comps.iter().enumerate() {
            for &j in &comp.blocks {
                comp_of_block[j] = ci;
            }
        }

        for (j, blk) in self.blocks.iter().enumerate() {
            let x = &it.x[j];
            let s = &it.s[j];
            let r = &res.rb[j];
            match &blk.kind {
                BlockKind::Ordinary { vars } => {
                    let si = fac.s_inv[j].as_ref().unwrap();
                    let c = &rc[j];
                    let w = c - sym(&(x * r * si));
                    if comp_of_block[j] != usize::MAX {
                        let ru = &mut rhs_u[comp_of_block[j]];
                        for (i, f) in vars {
                            ru[self.local[*i]] += trace_with(f, &w);
                        }
                    }
                }
                BlockKind::Gram { cells, rows } => {
                    let xi = fac.x_inv[j].as_ref().unwrap();
                    let c = &rc[j];
                    let mut dm = DMatrix::zeros(blk.side, blk.side);
                    for cell in cells {
                        let v = res.rd[cell.var] / (cell.scale * cell.weight());
                        dm[(cell.r, cell.c)] = v;
                        dm[(cell.c, cell.r)] = v;
                    }
                    let em = c - r - s * &dm * xi;
                    for (row, bcells) in rows {
                        e[*row] += trace_with(bcells, &em);
                    }
                    d_mats[j] = Some(dm);
                }
            }
        }
        for (ci, comp) in self.comps.iter().enumerate() {
            for (k, &i) in comp.vars.iter().enumerate() {
                rhs_u[ci][k] -= res.rd[i];
            }
        }

        let mut f = DVector::from_vec(res.rp.clone()) - e;
        let mut minv_rhs: Vec<DVector<f64>> = Vec::with_capacity(self.comps.len());
        for (ci, comp) in self.comps.iter().enumerate() {
            let t = fac.comps[ci].0.solve_vec(&rhs_u[ci]);
            if self.m > 0 {
                f -= &comp.a * &t;
            }
            minv_rhs.push(t);
        }

        let mut dy = vec![0.0; self.n];
        let dz = match &fac.p {
            Some(pc) => match &fac.free {
                Some((pa, tc)) => {
                    let rdv = DVector::from_iterator(
                        self.free.len(),
                        self.free.iter().map(|&i| res.rd[i]),
                    );
                    let q = pc.solve_vec(&f);
                    let dyv = tc.solve_vec(&(self.a_free.transpose() * &q - rdv));
                    for (k, &i) in self.free.iter().enumerate() {
                        dy[i] = dyv[k];
                    }
                    q - pa * dyv
                }
                None => pc.solve_vec(&f),
            },
            None => DVector::zeros(0),
        };

        for (ci, comp) in self.comps.iter().enumerate() {
            let t = if self.m > 0 {
                &minv_rhs[ci] + &fac.comps[ci].1 * &dz
            } else {
                minv_rhs[ci].clone()
            };
            for (k, &i) in comp.vars.iter().enumerate() {
                dy[i] = t[k];
            }
        }

        let mut dx = Vec::with_capacity(nb);
        let mut ds = Vec::with_capacity(nb);
        for (j, blk) in self.blocks.iter().enumerate() {
            let x = &it.x[j];
            let s = &it.s[j];
            match &blk.kind {
                BlockKind::Ordinary { vars } => {
                    let si = fac.s_inv[j].as_ref().unwrap();
                    let mut dsj = res.rb[j].clone();
                    for (i, f) in vars {
                        if dy[*i] != 0.0 {
                            add_cells(&mut dsj, f, dy[*i]);
                        }
                    }
                    let dxj = &rc[j] - sym(&(x * &dsj * si));
                    dx.push(dxj);
                    ds.push(dsj);
                }
                BlockKind::Gram { cells, rows } => {
                    let xi = fac.x_inv[j].as_ref().unwrap();
                    let mut dxj = d_mats[j].take().unwrap();
                    for (row, bcells) in rows {
                        add_cells(&mut dxj, bcells, -dz[*row]);
                    }
                    let dsj = &rc[j] - sym(&(s * &dxj * xi));
                    for cell in cells {
                        dy[cell.var] = (dsj[(cell.r, cell.c)] - res.rb[j][(cell.r, cell.c)]) / cell.scale;
                    }
                    dx.push(dxj);
                    ds.push(dsj);
                }
            }
        }
        Direction {
            dy,
            dz: dz.iter().copied().collect(),
            dx,
            ds,
        }
    }

    fn step_lengths(&self, it: &Iterate, d: &Direction, fraction: f64) -> (f64, f64) {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for j in 0..self.blocks.len() {
            ap = ap.min(max_step(&it.s[j], &d.ds[j]));
            ad = ad.min(max_step(&it.x[j], &d.dx[j]));
        }
        (
            (fraction * ap).min(1.0),
            (fraction * ad).min(1.0),
        )
    }

    fn mu(&self, it: &Iterate) -> f64 {
        let s: f64 = it.x.iter().zip(&it.s).map(|(x, s)| inner(x, s)).sum();
        s / self.cone_dim.max(1) as f64
    }

    fn initial(&self) -> Iterate {
        let mut x = Vec::with_capacity(self.blocks.len());
        let mut s = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let side = blk.side as f64;
            let norms: Vec<(usize, f64)> = match &blk.kind {
                BlockKind::Ordinary { vars } => vars
                    .iter()
                    .map(|(i, f)| (*i, f.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()))
                    .collect(),
                BlockKind::Gram { cells, .. } => cells
                    .iter()
                    .map(|c| (c.var, c.scale.abs() * c.weight().sqrt()))
                    .collect(),
            };
            let mut xi = 10.0f64.max(side.sqrt());
            let mut eta = xi.max(blk.f0.norm());
            for &(i, nf) in &norms {
                xi = xi.max(side * (1.0 + self.c[i].abs()) / (1.0 + nf));
                eta = eta.max(nf);
            }
            x.push(DMatrix::identity(blk.side, blk.side) * xi);
            s.push(DMatrix::identity(blk.side, blk.side) * eta);
        }
        Iterate {
            y: vec![0.0; self.n],
            z: vec![0.0; self.m],
            x,
            s,
        }
    }
}

fn export(p: &SdpProblem, red: &ReducedRows, it: &Iterate, status: SdpStatus, iters: usize) -> SdpSolution {
    let mut z = vec![0.0; p.equalities().len()];
    for (k, &r) in red.kept.iter().enumerate() {
        z[r] = it.z[k] * red.scale[k];
    }
    let mut sol = SdpSolution {
        y: it.y.clone(),
        block_duals: it.x.clone(),
        eq_multipliers: z,
        status,
        residuals: Default::default(),
        primal_objective: 0.0,
        dual_objective: 0.0,
        iterations: iters,
    };
    sol.refresh(p);
    sol
}

fn meets(sol: &SdpSolution, opts: &SolveOptions) -> bool {
    let r = &sol.residuals;
    r.primal <= opts.tol_feas && r.dual <= opts.tol_feas && r.gap <= opts.tol_gap
}

/// Problems without any PSD block reduce to a least-squares question.
fn solve_linear(p: &SdpProblem, red: &ReducedRows, opts: &SolveOptions) -> SdpSolution {
    let n = p.n_vars();
    let m = red.rows.len();
    let mut a = DMatrix::zeros(m, n);
    for (r, row) in red.rows.iter().enumerate() {
        for &(i, v) in row {
            a[(r, i)] += v;
        }
    }
    let b = DVector::from_vec(red.rhs.clone());
    let c = DVector::from_vec(p.objective().to_vec());
    let (y, z) = if m == 0 || n == 0 {
        (DVector::zeros(n), DVector::zeros(m))
    } else {
        let svd = a.clone().svd(true, true);
        let y = svd.solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(n));
        let svd_t = a.transpose().svd(true, true);
        let z = svd_t.solve(&c, 1e-12).unwrap_or_else(|_| DVector::zeros(m));
        (y, z)
    };
    let it = Iterate {
        y: y.iter().copied().collect(),
        z: z.iter().copied().collect(),
        x: Vec::new(),
        s: Vec::new(),
    };
    let mut sol = export(p, red, &it, SdpStatus::Optimal, 0);
    if sol.residuals.dual > opts.tol_feas {
        sol.status = SdpStatus::DualInfeasibleSuspect;
    } else if sol.residuals.primal > opts.tol_feas {
        sol.status = SdpStatus::PrimalInfeasibleSuspect;
    }
    sol
}

/// Solves `min cᵀy` subject to `Ay = b`, `F_j(y) ⪰ 0` by an infeasible-start
/// primal-dual path-following method with Mehrotra predictor-corrector steps.
pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> SdpSolution {
    let red = match reduce_rows(p) {
        Some(r) => r,
        None => return SdpSolution::empty(p, SdpStatus::PrimalInfeasibleSuspect),
    };
    if p.blocks().iter().all(|b| b.side() == 0) {
        return solve_linear(p, &red, opts);
    }
    let model = Model::build(p, red.clone());

    if model.orphans.iter().any(|&i| model.c[i] != 0.0) {
        return SdpSolution::empty(p, SdpStatus::DualInfeasibleSuspect);
    }

    let f0_norm = model
        .blocks
        .iter()
        .fold(0.0f64, |m, b| m.max(b.f0.amax()));

    let mut it = model.initial();
    let mut best: Option<(f64, SdpSolution)> = None;
    let mut best_primal: Option<SdpSolution> = None;
    let mut stalls = 0;
    let mut last_progress = 0;
    let mut status = SdpStatus::MaxIter;

    for iter in 0..=opts.max_iter {
        let sol = export(p, &red, &it, SdpStatus::Optimal, iter);
        if !sol.primal_objective.is_finite() || !sol.dual_objective.is_finite() {
            status = SdpStatus::NumericalFailure;
            break;
        }
        let complementarity = model.mu(&it) * model.cone_dim as f64
            / (1.0 + sol.primal_objective.abs() + sol.dual_objective.abs());
        let merit = sol.residuals.max().max(complementarity);
        if meets(&sol, opts) && complementarity <= opts.tol_gap {
            return sol;
        }
        if sol.residuals.primal <= opts.tol_feas
            && p.blocks().iter().all(|b| Cholesky::new(b.value(&sol.y)).is_some())
            && best_primal.as_ref().is_none_or(|b: &SdpSolution| {
                sol.primal_objective < b.primal_objective - 1e-12 * (1.0 + b.primal_objective.abs())
            })
        {
            last_progress = iter;
            best_primal = Some(sol.clone());
        }
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            if best.as_ref().is_none_or(|(m, _)| merit < 0.9 * *m) {
                last_progress = iter;
            }
            best = Some((merit, sol.clone()));
        } else if iter > last_progress + NO_PROGRESS_LIMIT {
            log::debug!("no progress since iteration {last_progress}");
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        // Divergence ratios suggesting a Farkas certificate.
        let rd_now = model.dual_residual(&it.x, &it.z);
        let at_norm = model
            .c
            .iter()
            .zip(&rd_now)
            .fold(0.0f64, |m, (c, r)| m.max((c - r).abs()));
        if sol.dual_objective > DIVERGENCE * (1.0 + at_norm) {
            status = SdpStatus::PrimalInfeasibleSuspect;
            break;
        }
        let ay_norm = model
            .primal_residual(&it.y)
            .iter()
            .zip(&model.b)
            .fold(0.0f64, |m, (r, b)| m.max((b - r).abs()));
        if -sol.primal_objective > DIVERGENCE * (1.0 + ay_norm + f0_norm) {
            status = SdpStatus::DualInfeasibleSuspect;
            break;
        }

        let fac = match model.factor(&it) {
            Some(f) => f,
            None => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        let res = model.residual(&it);
        let mu = model.mu(&it);

        let pred = model.direction(&it, &fac, &res, 0.0, None);
        let (ap, ad) = model.step_lengths(&it, &pred, 1.0);
        let mu_aff: f64 = it
            .x
            .iter()
            .zip(&it.s)
            .zip(pred.dx.iter().zip(&pred.ds))
            .map(|((x, s), (dx, ds))| inner(&(x + dx * ad), &(s + ds * ap)))
            .sum::<f64>()
            / model.cone_dim.max(1) as f64;
        let short = ap.min(ad);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powf((3.0 * short * short).max(1.0));
        let fraction = STEP_FRACTION_BASE + STEP_FRACTION_GAIN * short;

        let dir = model.direction(&it, &fac, &res, sigma * mu, Some(&pred));
        let (ap, ad) = model.step_lengths(&it, &dir, fraction);
        if !dir.dy.iter().chain(&dir.dz).all(|v| v.is_finite()) {
            status = SdpStatus::NumericalFailure;
            break;
        }

        for (y, d) in it.y.iter_mut().zip(&dir.dy) {
            *y += ap * d;
        }
        for (z, d) in it.z.iter_mut().zip(&dir.dz) {
            *z += ad * d;
        }
        for j in 0..model.blocks.len() {
            it.s[j] += &dir.ds[j] * ap;
            it.x[j] += &dir.dx[j] * ad;
            symmetrize(&mut it.s[j]);
            symmetrize(&mut it.x[j]);
            let f = model.block_value(j, &it.y);
            if Cholesky::new(f.clone()).is_some() {
                it.s[j] = f;
            }
        }

        if ap < STALL_STEP && ad < STALL_STEP {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                log::debug!("stalled at iteration {iter}");
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let mut sol = best.map(|(_, s)| s).unwrap_or_else(|| export(p, &red, &it, status, 0));
    if matches!(status, SdpStatus::MaxIter | SdpStatus::NumericalFailure) {
        if let Some(bp) = best_primal {
            if sol.residuals.primal > opts.tol_feas || bp.primal_objective < sol.primal_objective {
                sol = bp;
            }
        }
    }
    sol.status = status;
    sol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_matches_dense_product() {
        let l = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 + 1.0);
        let r = DMatrix::from_fn(3, 3, |i, j| (i as f64) - (j as f64) * 0.5);
        let f = full_cells(&[(0, 1, 2.0), (2, 2, -1.0)]);
        let mut fd = DMatrix::zeros(3, 3);
        add_cells(&mut fd, &f, 1.0);
        let want = &l * &fd * &r;
        let got = sandwich(&l, &f, &r);
        assert!((want - got).amax() < 1e-12);
    }

    #[test]
    fn max_step_of_identity_direction() {
        let z = DMatrix::identity(2, 2) * 2.0;
        let dz = -DMatrix::identity(2, 2);
        assert!((max_step(&z, &dz) - 2.0).abs() < 1e-12);
        assert!(max_step(&z, &DMatrix::identity(2, 2)).is_infinite());
    }
}
