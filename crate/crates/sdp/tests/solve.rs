use lasserre_sdp::{
    residuals, solve, to_sdpa, LmiBlock, SdpProblem, SdpSolution, SdpStatus, SolveOptions,
    SparseSym,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one_by_one() -> SdpProblem {
    let mut p = SdpProblem::new(1);
    p.set_objective(vec![1.0]).unwrap();
    let mut b = LmiBlock::new(1);
    b.push_entry(0, 0, 0, 1.0);
    p.add_block(b).unwrap();
    p
}

fn two_by_two() -> SdpProblem {
    let mut p = SdpProblem::new(2);
    p.set_objective(vec![0.0, 1.0]).unwrap();
    let mut b = LmiBlock::new(2);
    b.constant_mut().push(0, 0, 1.0);
    b.push_entry(0, 0, 1, 1.0);
    b.push_entry(1, 1, 1, 1.0);
    p.add_block(b).unwrap();
    p.add_equality(vec![(0, 1.0)], 1.0).unwrap();
    p
}

#[test]
fn scalar_block_minimum_is_zero() {
    let p = one_by_one();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!(s.y[0].abs() < 1e-9, "{}", s.y[0]);
}

#[test]
fn schur_complement_instance() {
    let p = two_by_two();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!((s.y[1] - 1.0).abs() < 1e-9, "{}", s.y[1]);
    assert!((s.y[0] - 1.0).abs() < 1e-9);
}

#[test]
fn analytic_pair_has_tiny_residuals() {
    let p = two_by_two();
    let mut s = SdpSolution::empty(&p, SdpStatus::Optimal);
    s.y = vec![1.0, 1.0];
    // X = [[1,-1],[-1,1]], z = 2 satisfies c = A*(X) + Aᵀz.
    s.block_duals = vec![DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])];
    s.eq_multipliers = vec![2.0];
    s.refresh(&p);
    let r = residuals(&p, &s);
    assert!(r.primal <= 1e-10 && r.dual <= 1e-10 && r.gap <= 1e-10, "{r:?}");
}

#[test]
fn perturbed_primal_shows_in_residual() {
    let p = two_by_two();
    let mut s = SdpSolution::empty(&p, SdpStatus::Optimal);
    s.y = vec![1.0 + 1e-3, 1.1];
    s.refresh(&p);
    let r = residuals(&p, &s);
    assert!((r.primal - 0.5e-3).abs() < 1e-9, "{r:?}");
}

#[test]
fn zero_problem_has_zero_residuals() {
    let p = SdpProblem::new(3);
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::Optimal);
    let r = residuals(&p, &s);
    assert_eq!((r.primal, r.dual, r.gap), (0.0, 0.0, 0.0));
}

#[test]
fn inconsistent_duplicate_rows_are_infeasible() {
    let mut p = two_by_two();
    p.add_equality(vec![(0, 2.0)], 3.0).unwrap();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::PrimalInfeasibleSuspect);
}

#[test]
fn consistent_duplicate_rows_are_dropped() {
    let mut p = two_by_two();
    p.add_equality(vec![(0, 2.0)], 2.0).unwrap();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!((s.y[1] - 1.0).abs() < 1e-8);
}

#[test]
fn empty_feasible_set_is_flagged() {
    // [[y]] ⪰ 0 with y = -1.
    let mut p = one_by_one();
    p.add_equality(vec![(0, 1.0)], -1.0).unwrap();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::PrimalInfeasibleSuspect, "{s:?}");
}

#[test]
fn unbounded_objective_is_flagged() {
    // min -y s.t. [[y]] ⪰ 0.
    let mut p = one_by_one();
    p.set_objective(vec![-1.0]).unwrap();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::DualInfeasibleSuspect, "{s:?}");
}

#[test]
fn gram_block_instance() {
    // x² − γ as a Gram form over [1, x]: max γ with G = [[-γ, 0], [0, 1]].
    let mut p = SdpProblem::new(4);
    // variables: 0 = γ, 1 = G00, 2 = G01, 3 = G11
    p.set_objective(vec![-1.0, 0.0, 0.0, 0.0]).unwrap();
    let mut b = LmiBlock::new(2);
    b.push_entry(1, 0, 0, 1.0);
    b.push_entry(2, 0, 1, 1.0);
    b.push_entry(3, 1, 1, 1.0);
    p.add_block(b).unwrap();
    p.add_equality(vec![(0, 1.0), (1, 1.0)], 0.0).unwrap();
    p.add_equality(vec![(2, 2.0)], 0.0).unwrap();
    p.add_equality(vec![(3, 1.0)], 1.0).unwrap();
    let s = solve(&p, &SolveOptions::default());
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!(s.y[0].abs() < 1e-7, "{:?}", s.y);
}

#[test]
fn solve_is_deterministic() {
    let p = random_instance(&mut ChaCha8Rng::seed_from_u64(7), 40, 2, 12);
    let a = solve(&p, &SolveOptions::default());
    let b = solve(&p, &SolveOptions::default());
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.y, b.y);
}

#[test]
fn sdpa_export_layout() {
    let text = to_sdpa(&two_by_two());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "2");
    assert_eq!(lines[2], "2");
    assert_eq!(lines[3], "2 -2");
    assert!(lines.contains(&"0 1 1 1 -1e0"));
    assert!(lines.contains(&"2 1 2 2 1e0"));
}

fn random_sym_cells(rng: &mut ChaCha8Rng, side: usize, count: usize) -> SparseSym {
    let mut f = SparseSym::new(side);
    for _ in 0..count {
        let r = rng.gen_range(0..side);
        let c = rng.gen_range(0..side);
        f.push(r, c, rng.gen_range(-1.0..1.0));
    }
    f
}

fn random_pd(rng: &mut ChaCha8Rng, side: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(side, side, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() / side as f64 + DMatrix::identity(side, side) * 0.5
}

/// Strictly feasible primal and dual by construction.
fn random_instance(rng: &mut ChaCha8Rng, n: usize, n_blocks: usize, max_side: usize) -> SdpProblem {
    let n_free = if n > 10 { rng.gen_range(0..3) } else { 0 };
    let owner: Vec<usize> = (0..n).map(|i| i % n_blocks).collect();
    // Each block gets at least twice as many cells as variables, so the
    // coefficient matrices are generically independent.
    let sides: Vec<usize> = (0..n_blocks)
        .map(|j| {
            let count = owner.iter().filter(|&&o| o == j).count();
            let mut need = 2;
            while need * (need + 1) / 2 < 2 * count {
                need += 1;
            }
            rng.gen_range(need..=max_side.max(need))
        })
        .collect();
    let y_hat: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut p = SdpProblem::new(n);
    let mut blocks: Vec<LmiBlock> = sides.iter().map(|&s| LmiBlock::new(s)).collect();
    for i in n_free..n {
        let j = owner[i];
        let f = random_sym_cells(rng, sides[j], 3);
        blocks[j].add_coefficient(i, f).unwrap();
        if n_blocks > 1 && rng.gen_bool(0.3) {
            let j2 = (j + 1) % n_blocks;
            let f = random_sym_cells(rng, sides[j2], 2);
            blocks[j2].add_coefficient(i, f).unwrap();
        }
    }
    let m = rng.gen_range(n_free.max(1)..=(n / 4).max(n_free + 1));
    let mut rows = Vec::new();
    for r in 0..m {
        let mut row: Vec<(usize, f64)> = (0..4).map(|_| (rng.gen_range(0..n), rng.gen_range(-1.0..1.0))).collect();
        if r < n_free {
            row.push((r, 1.0));
        }
        let b: f64 = row.iter().map(|&(i, v)| v * y_hat[i]).sum();
        rows.push(row.clone());
        p.add_equality(row, b).unwrap();
    }
    let z_hat: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut c = vec![0.0; n];
    for (row, z) in rows.iter().zip(&z_hat) {
        for &(i, v) in row {
            c[i] += v * z;
        }
    }
    for blk in blocks.iter_mut() {
        let side = blk.side();
        let s_hat = random_pd(rng, side);
        let x_hat = random_pd(rng, side);
        let mut f0 = s_hat.clone();
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

#[test]
fn random_feasible_instances_solve_to_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for t in 0..12 {
        let n = rng.gen_range(5..=300);
        let nb = rng.gen_range(1..=3);
        let p = random_instance(&mut rng, n, nb, 40);
        let s = solve(&p, &SolveOptions::default());
        assert_eq!(s.status, SdpStatus::Optimal, "instance {t}: {:?} after {}", s.residuals, s.iterations);
        assert!(s.residuals.gap <= 1e-8);
        assert!(s.dual_objective <= s.primal_objective + 1e-7);
    }
}

