use std::collections::{BTreeMap, BTreeSet};

use lasserre_sdp::{solve, LmiBlock, SdpProblem, SdpSolution, SolveOptions, SparseSym};
use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{ToPrimitive, Zero};

use crate::certify::{preordering_products, Certificate, ConeKind, Problem, SosExpression};
use crate::polyring::{basis, FloatPoly, MonomialBasis, Polynomial, RatPoly, Rational};

use super::moment::{half_degree, localizing_map, LocalizingMap, MomentVector};
use super::RelaxError;

/// `p / max|coeff|` and the divisor; the zero polynomial is left alone.
fn normalize(p: &RatPoly) -> (RatPoly, f64) {
    let m = p.max_abs_coeff();
    if m.is_zero() {
        return (p.clone(), 1.0);
    }
    (p.scale(&m.recip()), m.to_f64().unwrap_or(1.0))
}

fn check_degree(what: &str, p: &RatPoly, k: u32) -> Result<(), RelaxError> {
    let d = p.total_degree().unwrap_or(0);
    if d > 2 * k {
        return Err(RelaxError::OrderTooSmall {
            order: k,
            needed: d.div_ceil(2),
            what: format!("{what} {p}"),
        });
    }
    Ok(())
}

/// Cone generators used at order `k`: the empty product first, then the
/// `g_j` (or all subset products for the preordering). Products whose
/// half degree exceeds `k` are dropped and listed separately.
pub fn cone_generators(
    prob: &Problem,
    k: u32,
    kind: ConeKind,
) -> Result<(Vec<(Vec<usize>, RatPoly)>, Vec<Vec<usize>>), RelaxError> {
    let g = prob.inequalities();
    for gj in g {
        if half_degree(gj) > k {
            return Err(RelaxError::OrderTooSmall {
                order: k,
                needed: half_degree(gj),
                what: format!("inequality {gj}"),
            });
        }
    }
    let all = match kind {
        ConeKind::QuadraticModule => std::iter::once((vec![], RatPoly::one(prob.n())))
            .chain(g.iter().enumerate().map(|(j, gj)| (vec![j], gj.clone())))
            .collect(),
        ConeKind::Preordering => preordering_products(g, prob.n()),
    };
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (subset, p) in all {
        if half_degree(&p) > k {
            skipped.push(subset);
        } else {
            kept.push((subset, p));
        }
    }
    Ok((kept, skipped))
}

fn check_problem(prob: &Problem, k: u32) -> Result<(), RelaxError> {
    check_degree("objective", prob.objective(), k)?;
    for h in prob.equalities() {
        check_degree("equality", h, k)?;
    }
    Ok(())
}

fn add_map_block(sdp: &mut SdpProblem, map: &LocalizingMap, moments: &MonomialBasis, scale: &Rational) {
    let mut block = LmiBlock::new(map.side());
    for (e, entries) in map.slices() {
        let idx = moments.index_of(e).expect("slice within degree 2k");
        for (r, c, v) in entries {
            let v = (v * scale).to_f64().unwrap_or(0.0);
            if idx == 0 {
                block.constant_mut().push(*r, *c, v);
            } else {
                block.push_entry(idx - 1, *r, *c, v);
            }
        }
    }
    sdp.add_block(block).expect("block dimensions are consistent");
}

/// The moment relaxation at order `k`, over `y_α` with `0 < |α| ≤ 2k`.
#[derive(Debug, Clone)]
pub struct MomentSdp {
    pub sdp: SdpProblem,
    pub n: usize,
    pub k: u32,
    pub kind: ConeKind,
    /// Subsets labelling the PSD blocks, the empty subset being `M_k(y)`.
    pub blocks: Vec<Vec<usize>>,
    pub skipped: Vec<Vec<usize>>,
    objective_scale: f64,
    objective_constant: f64,
    /// The same relaxation over the free moments only.
    reduced: SdpProblem,
    reduced_constant: f64,
    /// Gradient of `tr M_k(y)` in the free moments.
    trace_gradient: Vec<f64>,
    expansion: Vec<(f64, Vec<(usize, f64)>)>,
}

pub fn assemble_moment_sdp(prob: &Problem, k: u32, kind: ConeKind) -> Result<MomentSdp, RelaxError> {
    check_problem(prob, k)?;
    let n = prob.n();
    let moments = basis(n, 2 * k);
    let mut sdp = SdpProblem::new(moments.len() - 1);
    let (f, f_scale) = normalize(prob.objective());
    let mut objective_constant = 0.0;
    for (e, c) in f.terms() {
        let idx = moments.index_of(e).expect("objective degree checked");
        let v = c.to_f64().unwrap_or(0.0);
        if idx == 0 {
            objective_constant = v;
        } else {
            sdp.set_objective_coeff(idx - 1, v);
        }
    }
    let mut rows: BTreeSet<Vec<(usize, Rational)>> = BTreeSet::new();
    for h in prob.equalities() {
        if h.is_zero() {
            continue;
        }
        let (h, _) = normalize(h);
        let dh = h.total_degree().unwrap_or(0);
        for gamma in basis(n, 2 * k - dh).iter() {
            let mut row: Vec<(usize, Rational)> = h
                .terms()
                .map(|(e, c)| (moments.index_of(&e.add(gamma)).expect("within 2k"), c.clone()))
                .collect();
            row.sort_by_key(|(i, _)| *i);
            rows.insert(row);
        }
    }
    let vanishing = vanishing_polynomials(prob);
    let mut implied = rows.clone();
    for (q, d) in &vanishing {
        if *d > 2 * k {
            continue;
        }
        for gamma in basis(n, 2 * k - d).iter() {
            let mut row: Vec<(usize, Rational)> = q
                .terms()
                .map(|(e, c)| (moments.index_of(&e.add(gamma)).expect("within 2k"), c.clone()))
                .collect();
            row.sort_by_key(|(i, _)| *i);
            implied.insert(row);
        }
    }
    for row in &rows {
        let mut rhs = 0.0;
        let mut entries = Vec::with_capacity(row.len());
        for (i, c) in row {
            let v = c.to_f64().unwrap_or(0.0);
            if *i == 0 {
                rhs -= v;
            } else {
                entries.push((i - 1, v));
            }
        }
        sdp.add_equality(entries, rhs).expect("indices in range");
    }
    let elim = Elimination::new(&implied, moments.len());
    let mut reduced = SdpProblem::new(elim.n_free);
    let mut reduced_constant = Rational::zero();
    let mut reduced_c = vec![Rational::zero(); elim.n_free];
    for (e, c) in f.terms() {
        let (k0, lin) = &elim.exprs[moments.index_of(e).expect("objective degree checked")];
        reduced_constant += c * k0;
        for (v, a) in lin {
            reduced_c[*v] += c * a;
        }
    }
    for (i, c) in reduced_c.iter().enumerate() {
        reduced.set_objective_coeff(i, c.to_f64().unwrap_or(0.0));
    }
    let mut trace_gradient = vec![Rational::zero(); elim.n_free];
    for beta in basis(n, k).iter() {
        let (_, lin) = &elim.exprs[moments.index_of(&beta.add(beta)).expect("within 2k")];
        for (v, a) in lin {
            trace_gradient[*v] += a;
        }
    }
    if let Some(b) = &elim.inconsistent {
        reduced.add_equality(Vec::new(), b.to_f64().unwrap_or(1.0)).expect("empty row");
    }

    let (gens, skipped) = cone_generators(prob, k, kind)?;
    let mut blocks = Vec::with_capacity(gens.len());
    for (subset, g) in gens {
        let (g, _) = normalize(&g);
        let map = localizing_map(&g, n, k)?;
        add_map_block(&mut sdp, &map, &moments, &Rational::from_integer(1.into()));
        let keep = if elim.inconsistent.is_some() {
            None
        } else {
            normal_set(map.row_basis(), &vanishing, k - half_degree(&g))
        };
        reduced
            .add_block(elim.block(&map, &moments, keep.as_deref()))
            .expect("block dimensions are consistent");
        blocks.push(subset);
    }
    Ok(MomentSdp {
        sdp,
        n,
        k,
        kind,
        blocks,
        skipped,
        objective_scale: f_scale,
        objective_constant,
        reduced,
        reduced_constant: reduced_constant.to_f64().unwrap_or(0.0),
        trace_gradient: trace_gradient.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect(),
        expansion: elim.float_exprs(),
    })
}

/// Polynomials `q` with budget `D` such that every feasible moment vector
/// satisfies `L(q·x^γ) = 0` for `|γ| ≤ 2k − D`: each equality with its
/// degree, and the recorded roots of a squared equality with half its degree.
fn vanishing_polynomials(prob: &Problem) -> Vec<(RatPoly, u32)> {
    let mut out = Vec::new();
    for (i, h) in prob.equalities().iter().enumerate() {
        if h.is_zero() {
            continue;
        }
        let dh = h.total_degree().unwrap_or(0);
        out.push((normalize(h).0, dh));
        for r in prob.square_roots(i).unwrap_or(&[]) {
            if !r.is_zero() {
                out.push((normalize(r).0, dh / 2));
            }
        }
    }
    out
}

/// Rows of a localizing block at row degree `t` that survive once the
/// kernel vectors `q·x^β`, `|β| ≤ t − D`, are factored out. The kernel is
/// put in echelon form with pivots at the highest-index monomial and the
/// non-pivot monomials are kept. `None` when nothing is removed or nothing
/// would remain.
fn normal_set(rows: &MonomialBasis, vanishing: &[(RatPoly, u32)], t: u32) -> Option<Vec<usize>> {
    let n = rows.n();
    let mut kernel = Echelon::default();
    for (q, d) in vanishing {
        if *d > t {
            continue;
        }
        for beta in basis(n, t - d).iter() {
            let mut v: BTreeMap<usize, Rational> = BTreeMap::new();
            for (e, c) in q.terms() {
                let idx = rows.index_of(&e.add(beta)).expect("within row degree");
                *v.entry(idx).or_insert_with(Rational::zero) += c;
            }
            kernel.insert(v);
        }
    }
    if kernel.rows.is_empty() || kernel.rows.len() == rows.len() {
        return None;
    }
    Some((0..rows.len()).filter(|i| !kernel.rows.contains_key(i)).collect())
}

#[derive(Default)]
struct Echelon {
    rows: BTreeMap<usize, BTreeMap<usize, Rational>>,
}

impl Echelon {
    /// Reduces `v` against the stored rows and stores the remainder, keyed
    /// by its highest index.
    fn insert(&mut self, mut v: BTreeMap<usize, Rational>) {
        v.retain(|_, c| !c.is_zero());
        while let Some((&top, lead)) = v.iter().next_back() {
            let Some(prow) = self.rows.get(&top) else { break };
            let a = lead.clone();
            for (j, c) in prow {
                let e = v.entry(*j).or_insert_with(Rational::zero);
                *e -= &a * c;
            }
            v.retain(|_, c| !c.is_zero());
        }
        let Some((&top, lead)) = v.iter().next_back() else { return };
        let inv = lead.recip();
        for c in v.values_mut() {
            *c *= &inv;
        }
        self.rows.insert(top, v);
    }
}

/// Every moment `y_α` written as an affine function of the moments left
/// free by the equality rows, computed by exact reduced row echelon form.
/// Pivots are taken at the highest-index moment of each row.
struct Elimination {
    exprs: Vec<(Rational, Vec<(usize, Rational)>)>,
    n_free: usize,
    /// Nonzero constant of a row that reduced to `0 = c`.
    inconsistent: Option<Rational>,
}

impl Elimination {
    fn new(rows: &BTreeSet<Vec<(usize, Rational)>>, len: usize) -> Elimination {
        let mut pivots: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
        let mut inconsistent = None;
        for row in rows {
            let mut r: BTreeMap<usize, Rational> = BTreeMap::new();
            for (i, c) in row {
                let e = r.entry(*i).or_insert_with(Rational::zero);
                *e += c;
            }
            let hits: Vec<usize> = r.keys().filter(|i| pivots.contains_key(i)).copied().collect();
            for p in hits {
                let Some(a) = r.remove(&p) else { continue };
                for (j, v) in &pivots[&p] {
                    if *j == p {
                        continue;
                    }
                    let e = r.entry(*j).or_insert_with(Rational::zero);
                    *e -= &a * v;
                }
            }
            r.retain(|_, v| !v.is_zero());
            let Some((&p, lead)) = r.iter().next_back().filter(|(i, _)| **i > 0) else {
                if let Some(c) = r.get(&0) {
                    inconsistent.get_or_insert_with(|| -c.clone());
                }
                continue;
            };
            let inv = lead.recip();
            for v in r.values_mut() {
                *v *= &inv;
            }
            for other in pivots.values_mut() {
                if let Some(a) = other.remove(&p) {
                    for (j, v) in &r {
                        if *j == p {
                            continue;
                        }
                        let e = other.entry(*j).or_insert_with(Rational::zero);
                        *e -= &a * v;
                    }
                    other.retain(|_, v| !v.is_zero());
                }
            }
            pivots.insert(p, r);
        }
        let mut free = vec![None; len];
        let mut n_free = 0;
        for (i, slot) in free.iter_mut().enumerate().skip(1) {
            if !pivots.contains_key(&i) {
                *slot = Some(n_free);
                n_free += 1;
            }
        }
        let exprs = (0..len)
            .map(|i| {
                if i == 0 {
                    return (Rational::from_integer(1.into()), Vec::new());
                }
                match &pivots.get(&i) {
                    None => (Rational::zero(), vec![(free[i].unwrap(), Rational::from_integer(1.into()))]),
                    Some(r) => {
                        let mut k0 = Rational::zero();
                        let mut lin = Vec::new();
                        for (j, v) in r.iter() {
                            if *j == i {
                                continue;
                            }
                            if *j == 0 {
                                k0 = -v.clone();
                            } else {
                                lin.push((free[*j].expect("pivot rows hold free columns only"), -v.clone()));
                            }
                        }
                        (k0, lin)
                    }
                }
            })
            .collect();
        Elimination {
            exprs,
            n_free,
            inconsistent,
        }
    }

    /// The block as an affine function of the free moments, restricted to
    /// the rows and columns in `keep` when given.
    fn block(&self, map: &LocalizingMap, moments: &MonomialBasis, keep: Option<&[usize]>) -> LmiBlock {
        let mut position = vec![None; map.side()];
        match keep {
            Some(keep) => {
                for (i, &r) in keep.iter().enumerate() {
                    position[r] = Some(i);
                }
            }
            None => {
                for (i, p) in position.iter_mut().enumerate() {
                    *p = Some(i);
                }
            }
        }
        let side = keep.map_or(map.side(), <[usize]>::len);
        let mut constant: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        let mut coeffs: BTreeMap<(usize, usize, usize), Rational> = BTreeMap::new();
        for (e, entries) in map.slices() {
            let (k0, lin) = &self.exprs[moments.index_of(e).expect("slice within degree 2k")];
            for (r, c, v) in entries {
                let (Some(r), Some(c)) = (position[*r], position[*c]) else { continue };
                let (r, c) = (&r, &c);
                if !k0.is_zero() {
                    *constant.entry((*r, *c)).or_insert_with(Rational::zero) += v * k0;
                }
                for (var, a) in lin {
                    *coeffs.entry((*var, *r, *c)).or_insert_with(Rational::zero) += v * a;
                }
            }
        }
        let mut block = LmiBlock::new(side);
        for ((r, c), v) in constant {
            if !v.is_zero() {
                block.constant_mut().push(r, c, v.to_f64().unwrap_or(0.0));
            }
        }
        let mut current: Option<(usize, SparseSym)> = None;
        for ((var, r, c), v) in coeffs {
            if v.is_zero() {
                continue;
            }
            if current.as_ref().is_none_or(|(i, _)| *i != var) {
                if let Some((i, f)) = current.take() {
                    block.add_coefficient(i, f).expect("same side");
                }
                current = Some((var, SparseSym::new(side)));
            }
            current.as_mut().unwrap().1.push(r, c, v.to_f64().unwrap_or(0.0));
        }
        if let Some((i, f)) = current {
            block.add_coefficient(i, f).expect("same side");
        }
        block
    }

    fn float_exprs(&self) -> Vec<(f64, Vec<(usize, f64)>)> {
        self.exprs
            .iter()
            .skip(1)
            .map(|(k0, lin)| {
                (
                    k0.to_f64().unwrap_or(0.0),
                    lin.iter().map(|(i, v)| (*i, v.to_f64().unwrap_or(0.0))).collect(),
                )
            })
            .collect()
    }
}

impl MomentSdp {
    /// Solves the eliminated form and expands the primal vector back to all
    /// moments; equality multipliers are not reported.
    ///
    /// A positive `trace_weight` adds `trace_weight · tr M_k(y)` to the
    /// normalized objective. The reported objectives include that term;
    /// [`MomentSdp::bound`] does not.
    pub fn solve(&self, opts: &SolveOptions, trace_weight: f64) -> SdpSolution {
        let mut sol = if trace_weight != 0.0 {
            let mut p = self.reduced.clone();
            for (i, g) in self.trace_gradient.iter().enumerate() {
                let c = p.objective()[i];
                p.set_objective_coeff(i, c + trace_weight * g);
            }
            solve(&p, opts)
        } else {
            solve(&self.reduced, opts)
        };
        let w = &sol.y;
        sol.y = self
            .expansion
            .iter()
            .map(|(k0, lin)| k0 + lin.iter().map(|(i, v)| v * w[*i]).sum::<f64>())
            .collect();
        sol.eq_multipliers = vec![0.0; self.sdp.equalities().len()];
        let shift = self.reduced_constant - self.objective_constant;
        sol.primal_objective += shift;
        sol.dual_objective += shift;
        sol
    }

    /// `⟨f, y⟩` at the solution.
    pub fn bound(&self, sol: &SdpSolution) -> f64 {
        self.objective_scale * (self.sdp.objective_value(&sol.y) + self.objective_constant)
    }

    pub fn moment_vector(&self, sol: &SdpSolution) -> MomentVector {
        let mut v = Vec::with_capacity(sol.y.len() + 1);
        v.push(1.0);
        v.extend_from_slice(&sol.y);
        MomentVector::new(self.n, self.k, v).expect("one value per moment")
    }
}

struct GramLayout {
    subset: Vec<usize>,
    generator_scale: f64,
    rows: MonomialBasis,
    first_var: usize,
}

struct IdealLayout {
    index: usize,
    scale: f64,
    monomials: MonomialBasis,
    first_var: usize,
}

/// The SOS relaxation at order `k`: maximize `γ` subject to
/// `f − γ = Σ φᵢhᵢ + Σ_J ⟨G_J, g_J [x][x]ᵀ⟩`, `G_J ⪰ 0`.
pub struct SosSdp {
    pub sdp: SdpProblem,
    pub n: usize,
    pub k: u32,
    pub kind: ConeKind,
    pub blocks: Vec<Vec<usize>>,
    pub skipped: Vec<Vec<usize>>,
    objective_scale: f64,
    ideal: Vec<IdealLayout>,
    grams: Vec<GramLayout>,
}

pub fn assemble_sos_sdp(prob: &Problem, k: u32, kind: ConeKind) -> Result<SosSdp, RelaxError> {
    check_problem(prob, k)?;
    let n = prob.n();
    let moments = basis(n, 2 * k);
    let (f, f_scale) = normalize(prob.objective());
    let mut next = 1;
    let mut ideal = Vec::new();
    for (i, h) in prob.equalities().iter().enumerate() {
        if h.is_zero() {
            continue;
        }
        let (_, s) = normalize(h);
        let dh = h.total_degree().unwrap_or(0);
        let monomials = basis(n, 2 * k - dh);
        let len = monomials.len();
        ideal.push(IdealLayout {
            index: i,
            scale: s,
            monomials,
            first_var: next,
        });
        next += len;
    }
    let (gens, skipped) = cone_generators(prob, k, kind)?;
    let mut grams = Vec::with_capacity(gens.len());
    let mut maps = Vec::with_capacity(gens.len());
    for (subset, g) in gens {
        let (gn, s) = normalize(&g);
        let map = localizing_map(&gn, n, k)?;
        let side = map.side();
        grams.push(GramLayout {
            subset,
            generator_scale: s,
            rows: map.row_basis().clone(),
            first_var: next,
        });
        next += side * (side + 1) / 2;
        maps.push(map);
    }
    let mut sdp = SdpProblem::new(next);
    sdp.set_objective_coeff(0, -1.0);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); moments.len()];
    rows[0].push((0, 1.0));
    for lay in &ideal {
        let (h, _) = normalize(&prob.equalities()[lay.index]);
        for (b, beta) in lay.monomials.iter().enumerate() {
            for (e, c) in h.terms() {
                let a = moments.index_of(&e.add(beta)).expect("within 2k");
                rows[a].push((lay.first_var + b, c.to_f64().unwrap_or(0.0)));
            }
        }
    }
    for (lay, map) in grams.iter().zip(&maps) {
        let side = map.side();
        let mut block = LmiBlock::new(side);
        for r in 0..side {
            for c in r..side {
                block.push_entry(lay.first_var + upper_index(side, r, c), r, c, 1.0);
            }
        }
        sdp.add_block(block).expect("block dimensions are consistent");
        for (e, entries) in map.slices() {
            let a = moments.index_of(e).expect("within 2k");
            for (r, c, v) in entries {
                let mult = if r == c { 1.0 } else { 2.0 };
                rows[a].push((lay.first_var + upper_index(side, *r, *c), mult * v.to_f64().unwrap_or(0.0)));
            }
        }
    }
    for (a, row) in rows.into_iter().enumerate() {
        let rhs = f.coeff(moments.get(a)).to_f64().unwrap_or(0.0);
        sdp.add_equality(row, rhs).expect("indices in range");
    }
    let blocks = grams.iter().map(|g| g.subset.clone()).collect();
    Ok(SosSdp {
        sdp,
        n,
        k,
        kind,
        blocks,
        skipped,
        objective_scale: f_scale,
        ideal,
        grams,
    })
}

fn upper_index(side: usize, r: usize, c: usize) -> usize {
    r * side - r * (r + 1) / 2 + c
}

impl SosSdp {
    /// `γ` at the solution.
    pub fn bound(&self, sol: &SdpSolution) -> f64 {
        self.objective_scale * sol.y[0]
    }

    /// Float certificate read off the solution; Gram matrices are split by
    /// eigendecomposition and negative eigenvalues are clipped to zero.
    pub fn certificate(&self, sol: &SdpSolution) -> Certificate<f64> {
        let n = self.n;
        let s = self.objective_scale;
        let ideal_part = self
            .ideal
            .iter()
            .map(|lay| {
                let phi = FloatPoly::from_terms(
                    n,
                    lay.monomials
                        .iter()
                        .enumerate()
                        .map(|(b, e)| (e.clone(), s * sol.y[lay.first_var + b] / lay.scale)),
                );
                (lay.index, phi)
            })
            .collect();
        let cone_part = self
            .grams
            .iter()
            .map(|lay| {
                let side = lay.rows.len();
                let g = DMatrix::from_fn(side, side, |r, c| {
                    let (a, b) = if r <= c { (r, c) } else { (c, r) };
                    sol.y[lay.first_var + upper_index(side, a, b)] * s / lay.generator_scale
                });
                let eig = SymmetricEigen::new(g);
                let mut sos = SosExpression::new(n);
                for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                    if lambda <= 0.0 {
                        continue;
                    }
                    let base: Polynomial<f64> = FloatPoly::from_terms(
                        n,
                        lay.rows
                            .iter()
                            .enumerate()
                            .map(|(r, e)| (e.clone(), eig.eigenvectors[(r, j)])),
                    );
                    sos.push(lambda, base);
                }
                (lay.subset.clone(), sos)
            })
            .collect();
        Certificate {
            gamma: self.bound(sol),
            ideal_part,
            cone_part,
            order: self.k,
            kind: self.kind,
        }
    }
}
