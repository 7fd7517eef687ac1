use proptest::prelude::*;
use thermoq::generators::*;
use thermoq::opalg::*;
use thermoq::scaling::*;
use thermoq::CPMap;

fn cfg() -> Config {
    Config::default()
}

fn corpus_map(g: &mut Rng64, d: usize, kind: usize) -> CPMap {
    match kind {
        0 => random_channel(g, d, 1 + kind),
        1 => random_channel(g, d, 2),
        2 => depolarize_to_pure(0.5, &random_ket(g, d)).unwrap(),
        3 => CPMap::prepare(d, &State::pure(&random_ket(g, d))),
        _ => random_instrument(g, d, 2, 1).operations[0].clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn bistochastic_has_zero_ds(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let mut g = rng(seed);
        let m = random_bistochastic(&mut g, d, n);
        prop_assert!(ds_value(&m, &eye(d), &eye(d)).unwrap() <= 1e-12);
    }

    #[test]
    fn descent_per_round(seed in any::<u64>(), d in 2usize..4, n in 1usize..4) {
        let mut g = rng(seed);
        let m = if n == 1 { depolarize_to_pure(0.3, &random_ket(&mut g, d)).unwrap() } else { random_channel(&mut g, d, n) };
        let s = sinkhorn_scale(&m, 1e-9, 2000).unwrap();
        for w in s.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15, "ds rose from {:e} to {:e}", w[0], w[1]);
        }
        let again = ds_value(&m, &s.c1, &s.c2).unwrap();
        prop_assert!((again - s.ds_value).abs() <= 1e-10);
        prop_assert_eq!(s.converged, s.ds_value <= 1e-18);
    }

    #[test]
    fn dual_never_contradicts(seed in any::<u64>(), d in 2usize..4, kind in 0usize..5) {
        let mut g = rng(seed);
        let m = corpus_map(&mut g, d, kind);
        let a = decide_rank_nondecreasing(&m, &cfg()).unwrap().verdict;
        let b = decide_rank_nondecreasing(&m.dual(), &cfg()).unwrap().verdict;
        prop_assert!(!matches!((a, b), (Verdict::Yes, Verdict::No) | (Verdict::No, Verdict::Yes)));
    }

    #[test]
    fn decisions_carry_their_certificates(seed in any::<u64>(), d in 2usize..4, kind in 0usize..5) {
        let mut g = rng(seed);
        let m = corpus_map(&mut g, d, kind);
        let dec = decide_rank_nondecreasing(&m, &cfg()).unwrap();
        match dec.verdict {
            Verdict::No => {
                let cx = dec.counterexample.unwrap();
                prop_assert!(cx.rank_out < cx.rank_in);
                prop_assert!(cx.reverify(&m, &cfg().tol));
            }
            Verdict::Yes => {
                if let Some(w) = dec.witness {
                    prop_assert!(w.converged);
                }
            }
            Verdict::Inconclusive => {}
        }
    }
}

#[test]
fn extension_of_rank_dropping_map_drops() {
    let d = decide_rank_nondecreasing(&rank_drop_d3(), &cfg()).unwrap();
    assert_eq!(d.verdict, Verdict::No);
    let e = check_extension_rank_nondec(&random_bistochastic(&mut rng(3), 2, 2), 2, &cfg()).unwrap();
    assert_eq!(e.verdict, Verdict::Yes);
}
