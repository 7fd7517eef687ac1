use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use proptest::prelude::*;
use thermoq::fixedpoints::*;
use thermoq::generators::*;
use thermoq::opalg::*;
use thermoq::CPMap;

fn t() -> Tolerances {
    Tolerances::default()
}

/// Mixture of unitaries that are block diagonal in a rotated basis.
fn block_unitary_mixture(g: &mut Rng64, sizes: &[usize], n: usize) -> CPMap {
    let d: usize = sizes.iter().sum();
    let w = haar_unitary(g, d);
    let p = random_weights(g, n);
    let kraus = p
        .iter()
        .map(|pk| {
            let mut u = CMatrix::zeros(d, d);
            let mut off = 0;
            for &s in sizes {
                u.view_mut((off, off), (s, s)).copy_from(&haar_unitary(g, s));
                off += s;
            }
            &w * u * w.adjoint() * c(pk.sqrt(), 0.0)
        })
        .collect();
    CPMap::new(d, d, kraus).unwrap()
}

fn tp_corpus(g: &mut Rng64, kind: usize) -> CPMap {
    match kind {
        0 => random_channel(g, 2 + kind % 2, 2),
        1 => depolarize_to_pure(0.4, &random_ket(g, 3)).unwrap(),
        2 => block_unitary_mixture(g, &[1, 2], 2),
        3 => block_depolarizing(&[2, 1]),
        4 => amplitude_damping(0.5),
        _ => qutrit_remark_instrument().channel(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn channels_fix_a_state(seed in any::<u64>(), kind in 0usize..6) {
        let mut g = rng(seed);
        let ch = tp_corpus(&mut g, kind);
        let fb = fixed_point_basis(&ch, &t()).unwrap();
        prop_assert!(!fb.is_empty());
        let d = ch.dim_in();
        let av = average_channel(&ch, &t()).unwrap();
        let rho = av.apply(&(eye(d) / c(d as f64, 0.0))).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
        prop_assert!(fb.contains(&rho, 1e-7));
        prop_assert!(max_abs(&(ch.apply(&rho).unwrap() - &rho)) < 1e-8);
    }

    #[test]
    fn sub_norm_operations_fix_nothing(seed in any::<u64>(), d in 2usize..5, s in 0.05f64..0.95) {
        let mut g = rng(seed);
        let op = random_channel(&mut g, d, 2).scaled(s);
        prop_assert!(op_norm(&op.dual_unit()) < 1.0 - t().eff_tol);
        prop_assert!(fixed_point_basis(&op, &t()).unwrap().is_empty());
    }

    #[test]
    fn block_decomposition_invariants(seed in any::<u64>(), a in 1usize..3, b in 1usize..3, n in 2usize..4) {
        let mut g = rng(seed);
        let ch = block_unitary_mixture(&mut g, &[a, b], n);
        let bd = kraus_block_decomposition(&ch, &t(), GENERIC_SEED).unwrap();
        let d = a + b;
        let mut total = CMatrix::zeros(d, d);
        for p in &bd.projections {
            total += p.matrix();
        }
        prop_assert!(max_abs(&(total - eye(d))) < t().proj_tol);
        for k in ch.kraus() {
            let mut rebuilt = CMatrix::zeros(d, d);
            for p in &bd.projections {
                rebuilt += p.matrix() * k * p.matrix();
            }
            prop_assert!(max_abs(&(rebuilt - k)) < 1e-7);
        }
        for act in &bd.per_block_actions {
            prop_assert!(is_irreducible(act, t().span_tol));
        }
        let st = strictly_positive_fixed_state(&ch, None, &t()).unwrap().unwrap();
        prop_assert!(max_abs(&(ch.apply(st.matrix()).unwrap() - st.matrix())) < t().fixed_tol);
        prop_assert!(eigvalsh(st.matrix())[0] > 1e-9);
    }

    #[test]
    fn classical_actions_are_stochastic(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let mut g = rng(seed);
        let basis = haar_unitary(&mut g, d);
        let ch = random_channel(&mut g, d, n);
        let ca = classical_action(&ch, &basis, &t()).unwrap();
        for j in 0..d {
            prop_assert!((ca.t_matrix.column(j).sum() - 1.0).abs() < 1e-10);
        }
        let bi = random_bistochastic(&mut g, d, n);
        let ca = classical_action(&bi, &basis, &t()).unwrap();
        for j in 0..d {
            prop_assert!((ca.t_matrix.column(j).sum() - 1.0).abs() < 1e-10);
            prop_assert!((ca.t_matrix.row(j).sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn doubly_stochastic_triangular_blocks_split(seed in any::<u64>(), n in 3usize..7, k in 1usize..3) {
        use rand::seq::SliceRandom;
        let mut g = rng(seed);
        let w = random_weights(&mut g, k);
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for wk in w {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut g);
            for (j, &i) in perm.iter().enumerate() {
                m[(i, j)] += wk;
            }
        }
        let mut gr = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..n).map(|_| gr.add_node(())).collect();
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] > 1e-12 {
                    gr.add_edge(nodes[j], nodes[i], ());
                }
            }
        }
        let mut comp = vec![0; n];
        for (c, scc) in kosaraju_scc(&gr).iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if comp[i] != comp[j] {
                    prop_assert!(m[(i, j)] < 1e-12);
                }
            }
        }
    }

    #[test]
    fn factor_form_matches_average(seed in any::<u64>(), kind in 0usize..6) {
        let mut g = rng(seed);
        let ch = tp_corpus(&mut g, kind);
        let av = average_channel(&ch, &t()).unwrap();
        let s = fixed_algebra_decomposition(&ch, &t()).unwrap();
        let rank: usize = s.factor_dims.iter().map(|(k, r)| k * r).sum();
        prop_assert_eq!(rank, s.min_support.rank());
        prop_assert!(factor_form_residual(&av, &s, 50, seed) < 1e-8);
    }
}
