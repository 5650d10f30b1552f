use std::time::Instant;

use lasserre_sdp::{solve, SdpSolution, SdpStatus, SolveOptions};
use serde::Serialize;

use crate::certify::{ConeKind, Problem};
use crate::polyring::RatPoly;

use super::assemble::{assemble_moment_sdp, assemble_sos_sdp};
use super::moment::{half_degree, MomentVector};
use super::RelaxError;
use super::rank::{extract_minimizers, flat_truncation, rank_profile, RANK_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Moment,
    Sos,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Moment => "moment",
            Side::Sos => "sos",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HierarchyOptions {
    pub k_min: u32,
    pub k_max: u32,
    pub kind: ConeKind,
    pub sides: Vec<Side>,
    pub solver: SolveOptions,
    pub rank_tol: f64,
    pub seed: u64,
    /// Orders solved concurrently.
    pub threads: usize,
    /// Stop once the moment side is flat and its bound moved by at most
    /// `stall_tol` since the previous order.
    pub stop_early: bool,
    pub stall_tol: f64,
    /// When the moment solution is not flat, it is solved again with
    /// `trace_weight · tr M_k(y)` added to the normalized objective and the
    /// ranks and points are read from that solution instead. Zero disables
    /// the second solve. The recorded bound always comes from the first.
    pub trace_weight: f64,
}

impl HierarchyOptions {
    pub fn new(k_min: u32, k_max: u32, kind: ConeKind, sides: Vec<Side>) -> Self {
        HierarchyOptions {
            k_min,
            k_max,
            kind,
            sides,
            solver: SolveOptions::default(),
            rank_tol: RANK_TOLERANCE,
            seed: 0,
            threads: default_threads(),
            stop_early: false,
            stall_tol: 1e-7,
            trace_weight: 1e-4,
        }
    }
}

/// `LASSERRE_THREADS` if set to a positive integer, otherwise the number of
/// available cores.
pub fn default_threads() -> usize {
    std::env::var("LASSERRE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// The least order at which every datum fits: `max(⌈deg f/2⌉, d_j)`.
pub fn minimal_order(prob: &Problem) -> u32 {
    let mut k = half_degree(prob.objective()).max(1);
    for p in prob.equalities().iter().chain(prob.inequalities()) {
        k = k.max(half_degree(p));
    }
    k
}

/// `d = max(1, ⌈deg hᵢ/2⌉, ⌈deg g_j/2⌉)` used by the flatness test.
pub fn flatness_degree(prob: &Problem) -> u32 {
    prob.equalities()
        .iter()
        .chain(prob.inequalities())
        .map(half_degree)
        .max()
        .unwrap_or(0)
        .max(1)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderRecord {
    pub k: u32,
    pub kind: &'static str,
    pub side: Side,
    /// Absent when the solver suspects infeasibility or the final iterate
    /// misses the equality constraints.
    pub bound: Option<f64>,
    pub status: String,
    /// Ranks of `M_0(y), …, M_k(y)` on the moment side.
    pub ranks: Vec<usize>,
    pub flat: bool,
    /// Order `t` at which `rank M_{t−d} = rank M_t`.
    pub flat_order: Option<u32>,
    pub points: Vec<Vec<f64>>,
    /// Whether ranks and points come from the trace-weighted solve.
    pub regularized: bool,
    pub solve_ms: f64,
    pub iterations: usize,
    /// One-based subsets left out because their half degree exceeds `k`.
    pub skipped_products: Vec<Vec<usize>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyResult {
    pub records: Vec<OrderRecord>,
    /// Order at which the moment bound stabilized with a flat truncation.
    pub stabilized_at: Option<u32>,
}

impl HierarchyResult {
    pub fn get(&self, k: u32, side: Side) -> Option<&OrderRecord> {
        self.records.iter().find(|r| r.k == k && r.side == side)
    }

    pub fn bounds(&self, side: Side) -> Vec<(u32, f64)> {
        self.records
            .iter()
            .filter(|r| r.side == side)
            .filter_map(|r| r.bound.map(|b| (r.k, b)))
            .collect()
    }
}

fn one_based(s: &[Vec<usize>]) -> Vec<Vec<usize>> {
    s.iter().map(|v| v.iter().map(|j| j + 1).collect()).collect()
}

fn error_record(k: u32, kind: ConeKind, side: Side, e: String) -> OrderRecord {
    OrderRecord {
        k,
        kind: kind.as_str(),
        side,
        bound: None,
        status: "assembly_error".into(),
        ranks: Vec::new(),
        flat: false,
        flat_order: None,
        points: Vec::new(),
        regularized: false,
        solve_ms: 0.0,
        iterations: 0,
        skipped_products: Vec::new(),
        error: Some(e),
    }
}

/// Statuses under which the iterate carries no bound.
fn is_infeasibility_suspect(status: SdpStatus) -> bool {
    matches!(status, SdpStatus::PrimalInfeasibleSuspect | SdpStatus::DualInfeasibleSuspect)
}

/// Residual allowed at an extracted point, relative to the sum of the
/// absolute values of the terms.
const POINT_TOL: f64 = 1e-3;

fn term_scale(p: &RatPoly, u: &[f64]) -> f64 {
    p.to_float()
        .terms()
        .map(|(e, c)| {
            let m: f64 = e.entries().iter().zip(u).map(|(&a, x)| x.powi(a as i32)).product();
            (c * m).abs()
        })
        .sum()
}

/// The first constraint that `u` violates beyond [`POINT_TOL`]. Equalities
/// with recorded square roots are checked through the roots.
fn violated_constraint(prob: &Problem, u: &[f64]) -> Option<String> {
    let value = |p: &RatPoly| p.to_float().eval(u).unwrap_or(f64::NAN);
    for (i, h) in prob.equalities().iter().enumerate() {
        let parts = prob.square_roots(i).map_or_else(|| vec![h.clone()], <[_]>::to_vec);
        for r in &parts {
            if value(r).abs() > POINT_TOL * (1.0 + term_scale(r, u)) {
                return Some(format!("equality {} fails at {u:?}", i + 1));
            }
        }
    }
    for (j, g) in prob.inequalities().iter().enumerate() {
        if value(g) < -POINT_TOL * (1.0 + term_scale(g, u)) {
            return Some(format!("inequality {} fails at {u:?}", j + 1));
        }
    }
    None
}

/// Largest relative equality residual at which an iterate still yields a
/// bound; beyond it the certificate identity or the moment equations fail.
const BOUND_FEASIBILITY_TOL: f64 = 1e-6;

fn carries_bound(sol: &SdpSolution, bound: f64) -> bool {
    bound.is_finite() && !is_infeasibility_suspect(sol.status) && sol.residuals.primal <= BOUND_FEASIBILITY_TOL
}

/// How far the trace-weighted bound may move before its solution is ignored.
const REGULARIZED_BOUND_TOL: f64 = 1e-6;

fn first_flat_order(y: &MomentVector, k: u32, d: u32, tol: f64) -> Option<u32> {
    (d + 1..=k).find(|&t| flat_truncation(y, t, d, tol).is_ok_and(|f| f.flat))
}

/// Assembles, solves and post-processes one order on one side.
pub fn solve_order(prob: &Problem, k: u32, side: Side, opts: &HierarchyOptions) -> OrderRecord {
    let kind = opts.kind;
    match side {
        Side::Moment => {
            let m = match assemble_moment_sdp(prob, k, kind) {
                Ok(m) => m,
                Err(e) => return error_record(k, kind, side, e.to_string()),
            };
            let start = Instant::now();
            let sol = m.solve(&opts.solver, 0.0);
            let d = flatness_degree(prob);
            let mut y = m.moment_vector(&sol);
            let suspect = is_infeasibility_suspect(sol.status);
            let mut flat_order = if suspect { None } else { first_flat_order(&y, k, d, opts.rank_tol) };
            let mut regularized = false;
            if !suspect && flat_order.is_none() && opts.trace_weight > 0.0 {
                let wsol = m.solve(&opts.solver, opts.trace_weight);
                let close = (m.bound(&wsol) - m.bound(&sol)).abs() <= REGULARIZED_BOUND_TOL * (1.0 + m.bound(&sol).abs());
                let weighted = m.moment_vector(&wsol);
                if let Some(t) = first_flat_order(&weighted, k, d, opts.rank_tol).filter(|_| close) {
                    y = weighted;
                    flat_order = Some(t);
                    regularized = true;
                }
            }
            let solve_ms = start.elapsed().as_secs_f64() * 1e3;
            let ranks = if suspect { Vec::new() } else { rank_profile(&y, opts.rank_tol) };
            let mut error = None;
            let points = match flat_order {
                Some(t) => match extract_minimizers(&y, t, opts.rank_tol, opts.seed) {
                    Ok(points) => match points.iter().find_map(|u| violated_constraint(prob, u)) {
                        Some(why) => {
                            error = Some(RelaxError::Extraction(why).to_string());
                            Vec::new()
                        }
                        None => points,
                    },
                    Err(e) => {
                        error = Some(e.to_string());
                        Vec::new()
                    }
                },
                None => Vec::new(),
            };
            let bound = m.bound(&sol);
            OrderRecord {
                k,
                kind: kind.as_str(),
                side,
                bound: carries_bound(&sol, bound).then_some(bound),
                status: sol.status.as_str().into(),
                ranks,
                flat: flat_order.is_some(),
                flat_order,
                points,
                regularized,
                solve_ms,
                iterations: sol.iterations,
                skipped_products: one_based(&m.skipped),
                error,
            }
        }
        Side::Sos => {
            let s = match assemble_sos_sdp(prob, k, kind) {
                Ok(s) => s,
                Err(e) => return error_record(k, kind, side, e.to_string()),
            };
            let start = Instant::now();
            let sol = solve(&s.sdp, &opts.solver);
            let solve_ms = start.elapsed().as_secs_f64() * 1e3;
            let bound = s.bound(&sol);
            OrderRecord {
                k,
                kind: kind.as_str(),
                side,
                bound: carries_bound(&sol, bound).then_some(bound),
                status: sol.status.as_str().into(),
                ranks: Vec::new(),
                flat: false,
                flat_order: None,
                points: Vec::new(),
                regularized: false,
                solve_ms,
                iterations: sol.iterations,
                skipped_products: one_based(&s.skipped),
                error: None,
            }
        }
    }
}

/// Solves orders `k_min..=k_max` on the requested sides, in batches of
/// `threads` orders; records are ordered by `k`, then side.
pub fn run_hierarchy(prob: &Problem, opts: &HierarchyOptions) -> HierarchyResult {
    let orders: Vec<u32> = (opts.k_min..=opts.k_max).collect();
    let threads = opts.threads.max(1);
    let mut records: Vec<OrderRecord> = Vec::new();
    let mut stabilized_at = None;
    let mut previous: Option<f64> = None;
    'batches: for batch in orders.chunks(threads) {
        let jobs: Vec<(u32, Side)> = batch
            .iter()
            .flat_map(|&k| opts.sides.iter().map(move |&s| (k, s)))
            .collect();
        let mut done: Vec<OrderRecord> = if threads == 1 {
            jobs.iter().map(|&(k, s)| solve_order(prob, k, s, opts)).collect()
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = jobs
                    .iter()
                    .map(|&(k, s)| scope.spawn(move || solve_order(prob, k, s, opts)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("order solve does not panic"))
                    .collect()
            })
        };
        done.sort_by_key(|r| (r.k, r.side == Side::Sos));
        for k in batch {
            let here: Vec<OrderRecord> = done.iter().filter(|r| r.k == *k).cloned().collect();
            let moment = here.iter().find(|r| r.side == Side::Moment).cloned();
            records.extend(here);
            if let Some(m) = moment {
                if let (Some(b), Some(p)) = (m.bound, previous) {
                    if opts.stop_early && m.flat && (b - p).abs() <= opts.stall_tol {
                        stabilized_at = Some(*k);
                        break 'batches;
                    }
                }
                previous = m.bound;
            }
        }
    }
    HierarchyResult {
        records,
        stabilized_at,
    }
}
