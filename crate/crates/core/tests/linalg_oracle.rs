//! Production kernels against the brute-force oracle crate.

use lowrank_core::instances::gen_random_low_rank;
use lowrank_core::linalg::{
    linf2, project_structured_tangent, project_tangent, project_tangent_complement,
    shrink_singular_values, singular_values, spectral_norm, svd, DenseMatrix, Svt,
};
use lowrank_core::sampling::sample_bernoulli;
use lowrank_core::certificate::operator_norm_tangent;
use lowrank_core::{RngSeed, SubspacePair};
use lowrank_oracle as oracle;
use proptest::prelude::*;

fn to_oracle(m: &DenseMatrix) -> oracle::Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn from_oracle(m: &oracle::Mat) -> DenseMatrix {
    DenseMatrix::from_rows(m).unwrap()
}

fn matrix(max: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c)
            .prop_map(move |d| DenseMatrix::from_row_major(r, c, d).unwrap())
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match_jacobi(m in matrix(9)) {
        let ours = singular_values(&m).unwrap();
        let theirs = oracle::singular_values(&to_oracle(&m));
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!(close(*a, *b, 1e-7), "{ours:?} vs {theirs:?}");
        }
        prop_assert!(ours.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_reconstructs(m in matrix(9)) {
        let f = svd(&m, None).unwrap();
        prop_assert!((&f.reconstruct() - &m).frobenius() <= 1e-10 * (1.0 + m.frobenius()));
    }

    #[test]
    fn spectral_norm_matches_largest_singular_value(m in matrix(9)) {
        let exact = oracle::singular_values(&to_oracle(&m))[0];
        prop_assert!(close(spectral_norm(&m), exact, 1e-6));
    }

    #[test]
    fn linf2_is_largest_row_or_column_norm(m in matrix(9)) {
        let o = to_oracle(&m);
        let t = oracle::transpose(&o);
        let best = o.iter().chain(&t)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        prop_assert!(close(linf2(&m), best, 1e-12));
    }

    #[test]
    fn tangent_projection_matches_termwise_formula(
        n1 in 3usize..9, n2 in 3usize..9, r in 1usize..3, seed in any::<u64>(),
        z in prop::collection::vec(-1.0f64..1.0, 81),
    ) {
        let (_, s) = gen_random_low_rank(n1, n2, r, RngSeed(seed)).unwrap();
        let z = DenseMatrix::from_row_major(n1, n2, z[..n1 * n2].to_vec()).unwrap();
        let ours = project_tangent(&s, &z).unwrap();
        let theirs = from_oracle(&oracle::project_tangent(&to_oracle(s.u()), &to_oracle(s.v()), &to_oracle(&z)));
        prop_assert!((&ours - &theirs).frobenius() <= 1e-12);
        // idempotent, complementary, self-adjoint
        prop_assert!((&project_tangent(&s, &ours).unwrap() - &ours).frobenius() <= 1e-12);
        let comp = project_tangent_complement(&s, &z).unwrap();
        prop_assert!((&(&ours + &comp) - &z).frobenius() <= 1e-12);
        prop_assert!(ours.inner(&comp).abs() <= 1e-12);
    }

    #[test]
    fn structured_projection_with_full_outer_space_is_plain(
        n in 3usize..8, r in 1usize..3, seed in any::<u64>(),
        z in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let (_, s) = gen_random_low_rank(n, n, r, RngSeed(seed)).unwrap();
        let id = SubspacePair::new(DenseMatrix::identity(n), DenseMatrix::identity(n)).unwrap();
        let z = DenseMatrix::from_row_major(n, n, z[..n * n].to_vec()).unwrap();
        let a = project_structured_tangent(&s, &id, &z, false).unwrap();
        let b = project_tangent(&s, &z).unwrap();
        prop_assert!((&a - &b).frobenius() <= 1e-12);
    }

    #[test]
    fn operator_norm_matches_materialized_operator(
        n in 3usize..8, r in 1usize..3, p in 0.2f64..1.0, seed in any::<u64>(),
    ) {
        let (_, s) = gen_random_low_rank(n, n, r, RngSeed(seed)).unwrap();
        let mask = sample_bernoulli(n, n, p, false, RngSeed(seed ^ 0xabc)).unwrap();
        let (u, v) = (to_oracle(s.u()), to_oracle(s.v()));
        let op = |x: &[f64]| -> Vec<f64> {
            let z = oracle::from_row_major(n, n, x);
            let pz = oracle::project_tangent(&u, &v, &z);
            let mut sampled = oracle::zeros(n, n);
            for (i, j) in mask.iter() {
                sampled[i][j] = pz[i][j] / p;
            }
            oracle::to_row_major(&oracle::sub(&oracle::project_tangent(&u, &v, &sampled), &pz))
        };
        let exact = oracle::symmetric_norm(&oracle::materialize(n * n, op));
        let ours = operator_norm_tangent(&s, &mask).unwrap();
        prop_assert!((ours - exact).abs() <= 1e-4 * exact.max(1e-6), "{ours} vs {exact}");
    }
}

#[test]
fn partial_svt_matches_dense_thresholding() {
    let mut svt = Svt::new();
    for t in 0..4u64 {
        let (m, _) = gen_random_low_rank(150, 130, 6, RngSeed(t)).unwrap();
        let mut rng = RngSeed(t + 50).rng();
        let noise = DenseMatrix::from_fn(150, 130, |_, _| rand::Rng::random_range(&mut rng, -0.01..0.01));
        let g = &m.scale(40.0) + &noise;
        let tau = 0.5 + t as f64;
        let (a, ra, na) = svt.apply(&g, tau).unwrap();
        let (b, rb, nb) = shrink_singular_values(&g, tau).unwrap();
        assert_eq!(ra, rb);
        assert!((&a - &b).frobenius() <= 1e-8 * b.frobenius());
        assert!((na - nb).abs() <= 1e-8 * nb);
    }
}
