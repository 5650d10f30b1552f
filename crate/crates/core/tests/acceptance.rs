//! Acceptance suite: one line per criterion, exit status nonzero if any fails.

mod oracle;

use std::time::{Duration, Instant};

use lasserre::certify::{
    c_threshold, epsilon_certificate, sc_polynomial, verify_certificate, Certificate, ConeKind, SosExpression,
};
use lasserre::fixtures::{self, Fixture};
use lasserre::polyring::{Exponent, RatPoly, Rational};
use lasserre::relax::{run_hierarchy, HierarchyOptions, HierarchyResult, OrderRecord, Side};
use lasserre_sdp::{solve, LmiBlock, SdpProblem, SdpStatus, SolveOptions, SparseSym};
use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use oracle::{negative_witness, nonnegative_on_reals, Uni};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PERTURBATION_TRIALS: usize = 100;
const EPSILON_TRIALS: usize = 50;
const SDP_TRIALS: usize = 50;
const NON_OPTIMAL_TOL: f64 = 1e-3;
const PROPERTY_TOL: f64 = 1e-6;

struct Line {
    passed: bool,
    text: String,
}

fn line(id: u32, passed: bool, text: String) -> Line {
    Line {
        passed,
        text: format!("criterion {id}: {} | {text}", if passed { "PASS" } else { "FAIL" }),
    }
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn nonzero_rational(rng: &mut ChaCha8Rng) -> Rational {
    let mut a = 0;
    while a == 0 {
        a = rng.gen_range(-9i64..=9);
    }
    rat(a, rng.gen_range(1i64..=7))
}

fn bump_coefficient(p: &RatPoly, index: usize, delta: &Rational) -> RatPoly {
    let terms: Vec<(Exponent, Rational)> = p
        .terms()
        .enumerate()
        .map(|(i, (e, c))| (e.clone(), if i == index { c + delta } else { c.clone() }))
        .collect();
    RatPoly::from_terms(p.n(), terms)
}

/// Changes one coefficient of the certificate: `γ`, an ideal multiplier,
/// an SOS weight or a coefficient of a base with nonzero weight. A change
/// that only negates a base leaves its square unchanged and is redrawn.
fn perturb(cert: &Certificate<Rational>, rng: &mut ChaCha8Rng) -> Certificate<Rational> {
    let mut slots: Vec<(usize, usize, usize, usize)> = vec![(0, 0, 0, 0)];
    for (i, (_, phi)) in cert.ideal_part.iter().enumerate() {
        slots.extend((0..phi.len()).map(|t| (1, i, 0, t)));
    }
    for (j, (_, sos)) in cert.cone_part.iter().enumerate() {
        for (s, (w, b)) in sos.squares().iter().enumerate() {
            slots.push((2, j, s, 0));
            if !w.is_zero() {
                slots.extend((0..b.len()).map(|t| (3, j, s, t)));
            }
        }
    }
    let (kind, a, b, t) = slots[rng.gen_range(0..slots.len())];
    let delta = nonzero_rational(rng);
    let mut out = cert.clone();
    match kind {
        0 => out.gamma = &out.gamma + &delta,
        1 => out.ideal_part[a].1 = bump_coefficient(&out.ideal_part[a].1, t, &delta),
        _ => {
            let n = out.cone_part[a].1.n();
            let mut squares = out.cone_part[a].1.squares().to_vec();
            if kind == 2 {
                squares[b].0 = &squares[b].0 + &delta;
            } else {
                let base = squares[b].1.clone();
                let mut d = delta;
                let mut bumped = bump_coefficient(&base, t, &d);
                while bumped == -&base {
                    d = nonzero_rational(rng);
                    bumped = bump_coefficient(&base, t, &d);
                }
                squares[b].1 = bumped;
            }
            out.cone_part[a].1 = SosExpression::from_squares(n, squares);
        }
    }
    out
}

fn criterion_1(rng: &mut ChaCha8Rng) -> Line {
    let start = Instant::now();
    let expected: [(&str, u32, ConeKind); 5] = [
        ("finite_variety", 3, ConeKind::QuadraticModule),
        ("sum_of_powers", 2, ConeKind::QuadraticModule),
        ("twisted_cubic", 6, ConeKind::QuadraticModule),
        ("gradient_squared", 8, ConeKind::QuadraticModule),
        ("finite_preordering", 6, ConeKind::Preordering),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, order, kind) in expected {
        let fx = fixtures::by_name(name).expect("fixture exists");
        let cert = match fx.recipe.as_ref().map(|r| r.certificate(&Rational::one())) {
            Some(Ok(c)) => c,
            _ => {
                ok = false;
                notes.push(format!("{name}: no certificate"));
                continue;
            }
        };
        let valid = verify_certificate(&fx.problem, &cert).is_valid() && cert.order == order && cert.kind == kind;
        let rejected = (0..PERTURBATION_TRIALS)
            .filter(|_| !verify_certificate(&fx.problem, &perturb(&cert, rng)).is_valid())
            .count();
        ok &= valid && rejected == PERTURBATION_TRIALS;
        notes.push(format!(
            "{name} k={order} {} {rejected}/{PERTURBATION_TRIALS} rejected",
            if valid { "valid" } else { "INVALID" }
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(10);
    line(1, ok, format!("{}; {:.2}s of 10s", notes.join(", "), elapsed.as_secs_f64()))
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_deg: u32) -> RatPoly {
    let count = rng.gen_range(0..=4);
    RatPoly::from_terms(
        n,
        (0..count).filter_map(|_| {
            let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=max_deg)).collect();
            let c = nonzero_rational(rng);
            (e.iter().sum::<u32>() <= max_deg).then(|| (Exponent::new(e), c))
        }),
    )
}

fn criterion_2(rng: &mut ChaCha8Rng) -> Line {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for ell in 1..=3 {
        let c0 = c_threshold(ell).expect("ell >= 1");
        let at = Uni::from_poly(&sc_polynomial(ell, &c0));
        let below_c = &c0 * &rat(9, 10);
        let below = Uni::from_poly(&sc_polynomial(ell, &below_c));
        let nonneg = nonnegative_on_reals(&at);
        let witness = negative_witness(&below).filter(|t| below.eval(t).is_negative());
        ok &= nonneg && witness.is_some();
        notes.push(format!(
            "ell={ell} c0={c0} nonneg={nonneg} negative at 0.9c0: {}",
            witness.map_or("none".into(), |t| format!("{:.4}", num_traits::ToPrimitive::to_f64(&t).unwrap_or(f64::NAN)))
        ));
    }
    let mut holds = 0;
    for _ in 0..EPSILON_TRIALS {
        let n = rng.gen_range(1..=2);
        let p = random_poly(rng, n, 3);
        let q = random_poly(rng, n, 3);
        let ell = rng.gen_range(1..=3);
        let eps = rat(rng.gen_range(1..=20), rng.gen_range(1..=7));
        let c = &c_threshold(ell).expect("ell >= 1") * &rat(rng.gen_range(1..=3), 1);
        let split = epsilon_certificate(&p, &q, ell, &c, &eps).expect("valid inputs");
        if &p + &RatPoly::constant(n, eps) == &split.phi + &split.theta() {
            holds += 1;
        }
    }
    ok &= holds == EPSILON_TRIALS;
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(5);
    line(
        2,
        ok,
        format!(
            "{}; identity {holds}/{EPSILON_TRIALS}; {:.2}s of 5s",
            notes.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

struct Instance {
    fixture: Fixture,
    k: u32,
    kind: ConeKind,
    target: f64,
    tol: f64,
}

fn solve_both(fx: &Fixture, k_min: u32, k_max: u32, kind: ConeKind) -> HierarchyResult {
    let mut opts = HierarchyOptions::new(k_min, k_max, kind, vec![Side::Moment, Side::Sos]);
    opts.threads = opts.threads.max(2);
    run_hierarchy(&fx.problem, &opts)
}

fn describe(r: &OrderRecord) -> String {
    match r.bound {
        Some(b) => format!("{b:.9} ({})", r.status),
        None => format!("none ({})", r.status),
    }
}

fn criterion_3(instances: &[Instance], results: &[HierarchyResult], elapsed: Duration) -> Line {
    let mut ok = true;
    let mut notes = Vec::new();
    for (inst, res) in instances.iter().zip(results) {
        let rec = res.get(inst.k, Side::Moment).expect("moment record");
        let tol = if rec.status == "optimal" { inst.tol } else { NON_OPTIMAL_TOL };
        let pass = rec.bound.is_some_and(|b| (b - inst.target).abs() <= tol);
        ok &= pass;
        notes.push(format!(
            "{} k={}: {} vs {:.9} tol {tol:e}",
            inst.fixture.name,
            inst.k,
            describe(rec),
            inst.target
        ));
    }
    ok &= elapsed <= Duration::from_secs(60);
    line(3, ok, format!("{}; {:.1}s of 60s", notes.join(", "), elapsed.as_secs_f64()))
}

fn criterion_4(sweep: &HierarchyResult) -> Line {
    let bounds = sweep.bounds(Side::Sos);
    let complete = bounds.len() == 4;
    let below = bounds.iter().all(|&(_, b)| b <= -1e-4);
    let monotone = bounds.windows(2).all(|w| w[1].1 >= w[0].1);
    let shown: Vec<String> = (3..=6)
        .map(|k| sweep.get(k, Side::Sos).map_or("missing".into(), |r| format!("k={k} {}", describe(r))))
        .collect();
    line(
        4,
        complete && below && monotone,
        format!("{}; all <= -1e-4: {below}; nondecreasing: {monotone}", shown.join(", ")),
    )
}

fn criterion_5(results: &[&HierarchyResult]) -> Line {
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut unpaired = Vec::new();
    for res in results {
        let mut ks: Vec<u32> = res.records.iter().map(|r| r.k).collect();
        ks.dedup();
        for k in ks {
            let m = res.get(k, Side::Moment);
            let s = res.get(k, Side::Sos);
            match (m.and_then(|r| r.bound), s.and_then(|r| r.bound)) {
                (Some(mb), Some(sb)) => {
                    checked += 1;
                    if sb > mb + PROPERTY_TOL {
                        violations.push(format!("k={k}: sos {sb:.9} > moment {mb:.9}"));
                    }
                }
                _ => unpaired.push(format!(
                    "k={k} moment {} sos {}",
                    m.map_or("missing".into(), describe),
                    s.map_or("missing".into(), describe)
                )),
            }
        }
        for side in [Side::Moment, Side::Sos] {
            for w in res.bounds(side).windows(2) {
                checked += 1;
                if w[1].1 < w[0].1 - PROPERTY_TOL {
                    violations.push(format!("{} k={}..{}: {:.9} -> {:.9}", side.as_str(), w[0].0, w[1].0, w[0].1, w[1].1));
                }
            }
        }
    }
    let mut text = format!("{checked} comparisons, {} violations", violations.len());
    if !violations.is_empty() {
        text.push_str(&format!(" [{}]", violations.join("; ")));
    }
    if !unpaired.is_empty() {
        text.push_str(&format!("; not compared for lack of a bound: {}", unpaired.join("; ")));
    }
    line(5, violations.is_empty() && checked > 0, text)
}

fn criterion_6(variety: &HierarchyResult, gradient: &HierarchyResult) -> Line {
    let mut ok = true;
    let mut notes = Vec::new();
    let rec = variety.get(3, Side::Moment).expect("moment record");
    let near_one = rec.points.len() == 1
        && rec.points[0].iter().all(|v| (v - 1.0).abs() <= 1e-4);
    ok &= rec.flat && near_one;
    notes.push(format!("finite_variety k=3 flat={} points={:?}", rec.flat, rec.points));
    let rec = gradient.get(8, Side::Moment).expect("moment record");
    let r = 3f64.sqrt().recip();
    let targets = [[r, r], [r, -r], [-r, r], [-r, -r]];
    let matched = targets
        .iter()
        .all(|t| rec.points.iter().any(|p| p.iter().zip(t).all(|(a, b)| (a - b).abs() <= 1e-3)));
    ok &= rec.points.len() == 4 && matched;
    let shown: Vec<String> = rec.points.iter().map(|p| format!("({:.6}, {:.6})", p[0], p[1])).collect();
    notes.push(format!("gradient_squared k=8 {} points {}", rec.points.len(), shown.join(" ")));
    line(6, ok, notes.join("; "))
}

fn random_sym(rng: &mut ChaCha8Rng, side: usize, count: usize) -> SparseSym {
    let mut f = SparseSym::new(side);
    for _ in 0..count {
        f.push(rng.gen_range(0..side), rng.gen_range(0..side), rng.gen_range(-1.0..1.0));
    }
    f
}

fn random_pd(rng: &mut ChaCha8Rng, side: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(side, side, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() / side as f64 + DMatrix::identity(side, side) * 0.5
}

/// Strictly feasible primal and dual by construction: `ŷ` with slack
/// `Ŝ ≻ 0`, multipliers `X̂ ≻ 0` and `ẑ` defining `c`.
fn random_sdp(rng: &mut ChaCha8Rng) -> SdpProblem {
    let n: usize = rng.gen_range(5..=300);
    let n_blocks: usize = rng.gen_range(1..=3);
    let owner: Vec<usize> = (0..n).map(|i| i % n_blocks).collect();
    let sides: Vec<usize> = (0..n_blocks)
        .map(|j| {
            let count = owner.iter().filter(|&&o| o == j).count();
            let mut need = 2;
            while need * (need + 1) / 2 < 2 * count {
                need += 1;
            }
            rng.gen_range(need.min(40)..=40)
        })
        .collect();
    let y_hat: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut p = SdpProblem::new(n);
    let mut blocks: Vec<LmiBlock> = sides.iter().map(|&s| LmiBlock::new(s)).collect();
    for (i, &j) in owner.iter().enumerate() {
        blocks[j].add_coefficient(i, random_sym(rng, sides[j], 3)).unwrap();
    }
    let m = rng.gen_range(1..=(n / 4).max(1));
    let mut c = vec![0.0; n];
    for _ in 0..m {
        let row: Vec<(usize, f64)> = (0..4).map(|_| (rng.gen_range(0..n), rng.gen_range(-1.0..1.0))).collect();
        let b: f64 = row.iter().map(|&(i, v)| v * y_hat[i]).sum();
        let z: f64 = rng.gen_range(-1.0..1.0);
        for &(i, v) in &row {
            c[i] += v * z;
        }
        p.add_equality(row, b).unwrap();
    }
    for blk in blocks.iter_mut() {
        let side = blk.side();
        let s_hat = random_pd(rng, side);
        let x_hat = random_pd(rng, side);
        let mut f0 = s_hat;
        for (i, f) in blk.coefficients() {
            f0 -= f.to_dense() * y_hat[*i];
            c[*i] += f.dot(&x_hat);
        }
        blk.set_constant(SparseSym::from_dense(&f0).unwrap()).unwrap();
    }
    for blk in blocks {
        p.add_block(blk).unwrap();
    }
    p.set_objective(c).unwrap();
    p
}

fn criterion_7(rng: &mut ChaCha8Rng) -> Line {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut optimal = 0;
    let mut worst_gap = 0.0f64;
    let mut failures = Vec::new();
    for t in 0..SDP_TRIALS {
        let p = random_sdp(rng);
        let s = solve(&p, &opts);
        worst_gap = worst_gap.max(s.residuals.gap);
        if s.status == SdpStatus::Optimal && s.residuals.gap <= 1e-8 {
            optimal += 1;
        } else {
            failures.push(format!("#{t} {:?} gap {:e}", s.status, s.residuals.gap));
        }
    }
    // min y s.t. [[y]] ⪰ 0 has y* = 0.
    let mut scalar = SdpProblem::new(1);
    scalar.set_objective(vec![1.0]).unwrap();
    let mut b = LmiBlock::new(1);
    b.push_entry(0, 0, 0, 1.0);
    scalar.add_block(b).unwrap();
    let s1 = solve(&scalar, &opts);
    // min y2 s.t. [[1, y1], [y1, y2]] ⪰ 0, y1 = 1 has y2* = 1.
    let mut pair = SdpProblem::new(2);
    pair.set_objective(vec![0.0, 1.0]).unwrap();
    let mut b = LmiBlock::new(2);
    b.constant_mut().push(0, 0, 1.0);
    b.push_entry(0, 0, 1, 1.0);
    b.push_entry(1, 1, 1, 1.0);
    pair.add_block(b).unwrap();
    pair.add_equality(vec![(0, 1.0)], 1.0).unwrap();
    let s2 = solve(&pair, &opts);
    let e1 = s1.primal_objective.abs();
    let e2 = (s2.primal_objective - 1.0).abs();
    let ok = optimal == SDP_TRIALS && e1 <= 1e-9 && e2 <= 1e-9;
    let mut text = format!(
        "{optimal}/{SDP_TRIALS} random instances optimal, worst gap {worst_gap:.2e}; micro-instance errors {e1:.1e}, {e2:.1e}; {:.1}s",
        start.elapsed().as_secs_f64()
    );
    if !failures.is_empty() {
        text.push_str(&format!(" [{}]", failures.join("; ")));
    }
    line(7, ok, text)
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260101);
    let mut lines = vec![criterion_1(&mut rng), criterion_2(&mut rng)];

    let instances = vec![
        Instance {
            fixture: fixtures::finite_variety(),
            k: 3,
            kind: ConeKind::QuadraticModule,
            target: 1.0,
            tol: 1e-5,
        },
        Instance {
            fixture: fixtures::twisted_cubic(),
            k: 6,
            kind: ConeKind::QuadraticModule,
            target: -1.0,
            tol: 1e-5,
        },
        Instance {
            fixture: fixtures::gradient_squared(),
            k: 8,
            kind: ConeKind::QuadraticModule,
            target: -1.0 / 27.0,
            tol: 1e-4,
        },
        Instance {
            fixture: fixtures::finite_preordering(),
            k: 6,
            kind: ConeKind::Preordering,
            target: 0.0,
            tol: 1e-4,
        },
    ];
    let start = Instant::now();
    let results: Vec<HierarchyResult> = instances
        .iter()
        .map(|i| solve_both(&i.fixture, i.k, i.k, i.kind))
        .collect();
    let elapsed = start.elapsed();
    lines.push(criterion_3(&instances, &results, elapsed));

    let cubed = fixtures::cubed_interval();
    let sweep = solve_both(&cubed, 3, 6, cubed.kind);
    lines.push(criterion_4(&sweep));
    let mut all: Vec<&HierarchyResult> = results.iter().collect();
    all.push(&sweep);
    lines.push(criterion_5(&all));
    lines.push(criterion_6(&results[0], &results[2]));
    lines.push(criterion_7(&mut rng));

    for l in &lines {
        println!("{}", l.text);
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
