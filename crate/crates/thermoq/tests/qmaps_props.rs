use proptest::prelude::*;
use thermoq::generators::*;
use thermoq::opalg::*;
use thermoq::qmaps::*;
use thermoq::CPMap;

fn t() -> Tolerances {
    Tolerances::default()
}

fn any_map(g: &mut Rng64, din: usize, dout: usize, n: usize) -> CPMap {
    CPMap::new_unchecked_norm(din, dout, (0..n).map(|_| gaussian_matrix(g, dout, din)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_duality(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, n in 1usize..4) {
        let mut g = rng(seed);
        let m = any_map(&mut g, din, dout, n);
        let a = gaussian_matrix(&mut g, dout, dout);
        let b = gaussian_matrix(&mut g, din, din);
        let lhs = (m.apply_dual(&a).unwrap() * &b).trace();
        let rhs = (&a * m.apply(&b).unwrap()).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
        let lhs = (m.dual().apply(&a).unwrap() * &b).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn choi_round_trip(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, n in 1usize..5) {
        let mut g = rng(seed);
        let m = any_map(&mut g, din, dout, n);
        let back = kraus_from_choi(&m.choi(), din, dout, &t()).unwrap();
        prop_assert!(choi_distance_max(&back, &m) < 1e-9);
        prop_assert!(back.kraus().len() <= din * dout);
    }

    #[test]
    fn rank_subadditivity(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, r in 1usize..10) {
        let mut g = rng(seed);
        let n = da * db;
        let rho = random_rank_state(&mut g, n, r.min(n));
        let rk = rank_of(&rho, &t()).unwrap();
        let ra = rank_of(&trace_out_second(&rho, da, db), &t()).unwrap();
        let rb = rank_of(&trace_out_first(&rho, da, db), &t()).unwrap();
        prop_assert!(rk <= ra * rb);
    }

    #[test]
    fn combinators_keep_flags(seed in any::<u64>(), d in 2usize..4, lam in 0.0f64..1.0) {
        let mut g = rng(seed);
        let a = random_channel(&mut g, d, 2);
        let b = random_channel(&mut g, d, 3);
        prop_assert!(classify_map(&convex_mix(&a, &b, lam).unwrap(), &t()).unwrap().trace_preserving);
        prop_assert!(classify_map(&compose(&a, &b).unwrap(), &t()).unwrap().trace_preserving);
        let u = random_bistochastic(&mut g, d, 2);
        let v = random_bistochastic(&mut g, 2, 2);
        prop_assert!(classify_map(&tensor(&u, &v), &t()).unwrap().bistochastic);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn strict_positivity_matches_full_rank_images(seed in any::<u64>(), d in 2usize..4, kind in 0usize..3) {
        let mut g = rng(seed);
        let m = match kind {
            0 => random_channel(&mut g, d, 1 + seed as usize % 3),
            1 => CPMap::prepare(d, &State::pure(&random_ket(&mut g, d))),
            _ => random_instrument(&mut g, d, 2, 1).operations[0].clone(),
        };
        let sp = classify_map(&m, &t()).unwrap().strictly_positive;
        let all_full = (0..50).all(|_| {
            let rho = random_rank_state(&mut g, d, d);
            rank_of(&m.apply(&rho).unwrap(), &t()).unwrap() == d
        });
        prop_assert_eq!(sp, all_full);
    }
}
