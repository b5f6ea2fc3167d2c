use lowrank_core::instances::{gen_block_diagonal, gen_planted_clique, gen_random_low_rank};
use lowrank_core::linalg::{masked, ObservationMask};
use lowrank_core::sampling::sample_bernoulli;
use lowrank_core::solvers::{complete_nuclear, decompose, relative_error, SolverOptions};
use lowrank_core::{DenseMatrix, RngSeed};

#[test]
fn high_probability_sanity_run() {
    // n = 40, r = 2 random low rank at p = 0.9: error below 1e-6 in at least
    // 19 of 20 seeded trials
    let opts = SolverOptions::default();
    let mut good = 0;
    for t in 0..20u64 {
        let (m, _) = gen_random_low_rank(40, 40, 2, RngSeed(t)).unwrap();
        let mask = sample_bernoulli(40, 40, 0.9, false, RngSeed(1000 + t)).unwrap();
        let res = complete_nuclear(&masked(&m, &mask, false).unwrap(), &mask, &opts).unwrap();
        good += usize::from(res.converged && relative_error(&res.estimate, &m) < 1e-6);
    }
    assert!(good >= 19, "{good}/20");
}

#[test]
fn estimate_agrees_with_observations() {
    let m = gen_block_diagonal(60, 3).unwrap();
    let mask = sample_bernoulli(60, 60, 0.5, false, RngSeed(3)).unwrap();
    let res = complete_nuclear(&masked(&m, &mask, false).unwrap(), &mask, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    let gap = mask
        .iter()
        .map(|(i, j)| (res.estimate[(i, j)] - m[(i, j)]).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(gap <= 1e-5 * m.frobenius());
    assert!(relative_error(&res.estimate, &m) < 1e-4);
}

#[test]
fn unobserved_entries_are_ignored() {
    let (m, _) = gen_random_low_rank(30, 30, 2, RngSeed(5)).unwrap();
    let mask = sample_bernoulli(30, 30, 0.7, false, RngSeed(6)).unwrap();
    let garbage = DenseMatrix::from_fn(30, 30, |i, j| if mask.contains(i, j) { m[(i, j)] } else { 1e6 });
    let opts = SolverOptions::default();
    let a = complete_nuclear(&masked(&m, &mask, false).unwrap(), &mask, &opts).unwrap();
    let b = complete_nuclear(&garbage, &mask, &opts).unwrap();
    assert!((&a.estimate - &b.estimate).frobenius() <= 1e-12 * a.estimate.frobenius());
}

#[test]
fn full_mask_returns_observations() {
    let m = gen_block_diagonal(12, 3).unwrap();
    let res = complete_nuclear(&m, &ObservationMask::full(12, 12), &SolverOptions::default()).unwrap();
    assert!(res.converged);
    assert_eq!(res.estimate, m);
}

#[test]
fn decomposition_splits_sparse_corruption() {
    let (l, _) = gen_random_low_rank(80, 80, 2, RngSeed(9)).unwrap();
    let l = l.scale(10.0);
    let corrupt = sample_bernoulli(80, 80, 0.05, false, RngSeed(10)).unwrap();
    let mut a = l.clone();
    for (k, (i, j)) in corrupt.iter().enumerate() {
        a[(i, j)] += if k % 2 == 0 { 5.0 } else { -5.0 };
    }
    let res = decompose(&a, None, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    assert!(relative_error(&res.low_rank, &l) < 1e-4, "{}", relative_error(&res.low_rank, &l));
    assert!((&(&res.low_rank + &res.sparse) - &a).frobenius() <= 1e-6 * a.frobenius());
}

#[test]
fn clique_decomposition_is_feasible_with_default_lambda() {
    let inst = gen_planted_clique(100, 30, RngSeed(11)).unwrap();
    let res = decompose(&inst.reduced, None, &SolverOptions::default()).unwrap();
    let a = &inst.reduced;
    assert!((&(&res.low_rank + &res.sparse) - a).frobenius() <= 1e-4 * a.frobenius());
    assert!((res.lambda_used - 0.1).abs() < 1e-15);
}
