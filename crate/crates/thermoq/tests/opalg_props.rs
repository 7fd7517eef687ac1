use proptest::prelude::*;
use thermoq::generators::*;
use thermoq::opalg::*;

fn t() -> Tolerances {
    Tolerances::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_projection_fixes_and_keeps_rank(seed in any::<u64>(), d in 2usize..5, r in 1usize..5) {
        let mut g = rng(seed);
        let a = random_rank_state(&mut g, d, r.min(d)) * c(3.0, 0.0);
        let h = HermitianOp::new(a.clone(), &t()).unwrap();
        let p = support_projection(&h, &t()).unwrap();
        prop_assert!(max_abs(&(p.matrix() * &a - &a)) < 1e-9);
        let hp = HermitianOp::new(p.matrix().clone(), &t()).unwrap();
        prop_assert_eq!(rank_tol(&h, &t()).unwrap(), rank_tol(&hp, &t()).unwrap());
        prop_assert_eq!(p.rank(), r.min(d));
    }

    #[test]
    fn double_commutant_contains_algebra(seed in any::<u64>(), d in 2usize..4) {
        let mut g = rng(seed);
        // block structure keeps the algebra proper
        let u = haar_unitary(&mut g, d + 1);
        let mut x = CMatrix::zeros(d + 1, d + 1);
        let blk = gaussian_matrix(&mut g, d, d);
        x.view_mut((0, 0), (d, d)).copy_from(&blk);
        x[(d, d)] = c(0.3, 0.0);
        let gen = &u * x * u.adjoint();
        let alg = algebra_closure(&[gen], d + 1, &t()).unwrap();
        let cc = commutant(&commutant(&alg, &t()), &t());
        for b in &alg.basis {
            prop_assert!(cc.contains(b, 1e-6));
        }
    }

    #[test]
    fn center_projections_orthocomplete(seed in any::<u64>(), split in 1usize..3) {
        let mut g = rng(seed);
        let d = 3;
        let u = haar_unitary(&mut g, d);
        let mut gens = Vec::new();
        for _ in 0..2 {
            let mut x = CMatrix::zeros(d, d);
            let a = gaussian_matrix(&mut g, split, split);
            x.view_mut((0, 0), (split, split)).copy_from(&a);
            let b = gaussian_matrix(&mut g, d - split, d - split);
            x.view_mut((split, split), (d - split, d - split)).copy_from(&b);
            gens.push(&u * x * u.adjoint());
        }
        let alg = algebra_closure(&gens, d, &t()).unwrap();
        let ps = center_projections(&alg, &t()).unwrap();
        prop_assert_eq!(ps.len(), 2);
        let mut sum = CMatrix::zeros(d, d);
        for (i, p) in ps.iter().enumerate() {
            for (j, q) in ps.iter().enumerate() {
                let want = if i == j { p.matrix().clone() } else { CMatrix::zeros(d, d) };
                prop_assert!(max_abs(&(p.matrix() * q.matrix() - want)) < t().proj_tol);
            }
            sum += p.matrix();
        }
        prop_assert!(max_abs(&(sum - algebra_unit(&alg, &t()).matrix())) < t().proj_tol);
    }

    #[test]
    fn strictly_positive_means_full_rank(seed in any::<u64>(), d in 2usize..5, shift in -1.0f64..1.0) {
        let mut g = rng(seed);
        let a = random_hermitian(&mut g, d) + eye(d) * c(shift, 0.0);
        let h = HermitianOp::new(a, &t()).unwrap();
        if is_strictly_positive_op(&h, &t()) {
            prop_assert_eq!(rank_tol(&h, &t()).unwrap(), d);
        }
    }

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), d in 1usize..7) {
        let mut g = rng(seed);
        let a = random_hermitian(&mut g, d);
        let (vals, v) = eigh(&a);
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = &v * diag(&vals) * v.adjoint();
        prop_assert!(max_abs(&(back - a)) < 1e-10);
    }
}

#[test]
fn eigh_handles_sparse_degenerate_input() {
    // block-sparse 64x64 Hermitian with many exact zeros and repeated eigenvalues
    let mut a = CMatrix::zeros(64, 64);
    for i in (0..64).step_by(8) {
        a[(i, i + 3)] = c(0.5, 0.0);
        a[(i + 3, i)] = c(0.5, 0.0);
        a[(i + 1, i + 1)] = c(0.25, 0.0);
    }
    let (vals, v) = eigh(&a);
    assert!(vals.iter().all(|x| x.is_finite()));
    assert!(max_abs(&(&v * diag(&vals) * v.adjoint() - &a)) < 1e-10);
}
